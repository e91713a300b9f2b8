//! Raw-table representation of the constrained minimization shared by the
//! grid and descent solvers.

use crate::error::{Error, Result};
use crate::prob::{plog2p, ChannelKernel, FiniteDist, JointDist3};

use super::ExponentKind;

/// Marginals of a raw `[x][y][z]` table.
pub(crate) struct Marginals {
    pub qx: Vec<f64>,
    pub qy: Vec<f64>,
    pub qz: Vec<f64>,
    pub qxy: Vec<f64>,
    pub qxz: Vec<f64>,
    pub qyz: Vec<f64>,
}

impl Marginals {
    pub fn of(t: &[f64], nx: usize, ny: usize, nz: usize) -> Self {
        let mut m = Marginals {
            qx: vec![0.0; nx],
            qy: vec![0.0; ny],
            qz: vec![0.0; nz],
            qxy: vec![0.0; nx * ny],
            qxz: vec![0.0; nx * nz],
            qyz: vec![0.0; ny * nz],
        };
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    let v = t[(x * ny + y) * nz + z];
                    m.qx[x] += v;
                    m.qy[y] += v;
                    m.qz[z] += v;
                    m.qxy[x * ny + y] += v;
                    m.qxz[x * nz + z] += v;
                    m.qyz[y * nz + z] += v;
                }
            }
        }
        m
    }
}

fn h(v: &[f64]) -> f64 {
    -v.iter().map(|&p| plog2p(p)).sum::<f64>()
}

/// The mutual information selected by `kind`, evaluated on a raw table.
pub(crate) fn info_term(kind: ExponentKind, t: &[f64], m: &Marginals) -> f64 {
    let v = match kind {
        ExponentKind::Xy => h(&m.qxy) + h(&m.qz) - h(t),
        ExponentKind::XGivenY => h(&m.qxy) + h(&m.qyz) - h(&m.qy) - h(t),
        ExponentKind::YGivenX => h(&m.qxy) + h(&m.qxz) - h(&m.qx) - h(t),
        ExponentKind::XOnly => h(&m.qx) + h(&m.qz) - h(&m.qxz),
    };
    v.max(0.0)
}

/// One time-sharing atom: weight, input compositions and the reference law
/// `P_X × P_Y × W`.
#[derive(Clone, Debug)]
pub(crate) struct Atom {
    pub weight: f64,
    pub p_x: Vec<f64>,
    pub p_y: Vec<f64>,
    pub reference: Vec<f64>,
    pub support: Vec<bool>,
}

/// `min Σ_u w_u D(Q_u ‖ P_{X|u} P_{Y|u} W) + |Σ_u w_u I_{Q_u} - R|^+`
/// over tables with the per-atom input marginals pinned.
#[derive(Clone, Debug)]
pub(crate) struct Problem {
    pub kind: ExponentKind,
    pub rate: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub w: Vec<f64>,
    pub atoms: Vec<Atom>,
}

impl Problem {
    pub fn new(
        kind: ExponentKind,
        rate: f64,
        atoms: &[(f64, &FiniteDist, &FiniteDist)],
        w: &ChannelKernel,
    ) -> Result<Self> {
        let (nx, ny, nz) = w.dims();
        let mut out = Vec::with_capacity(atoms.len());
        for &(weight, p_x, p_y) in atoms {
            if p_x.len() != nx || p_y.len() != ny {
                return Err(Error::dim(format!(
                    "compositions over ({}, {}) symbols do not match channel inputs ({nx}, {ny})",
                    p_x.len(),
                    p_y.len()
                )));
            }
            let reference = JointDist3::product(p_x, p_y, w)?.table().to_vec();
            let mut support = vec![false; nx * ny * nz];
            for x in 0..nx {
                for y in 0..ny {
                    for z in 0..nz {
                        support[(x * ny + y) * nz + z] = p_x.get(x) > 0.0 && p_y.get(y) > 0.0 && w.prob(x, y, z) > 0.0;
                    }
                }
            }
            out.push(Atom { weight, p_x: p_x.probs().to_vec(), p_y: p_y.probs().to_vec(), reference, support });
        }
        Ok(Self { kind, rate, nx, ny, nz, w: w.table().to_vec(), atoms: out })
    }

    /// Per-atom divergence and information `(D_u, I_u)`.
    pub fn atom_terms(&self, u: usize, t: &[f64]) -> (f64, f64) {
        let a = &self.atoms[u];
        let mut d = 0.0;
        for (i, &v) in t.iter().enumerate() {
            if v > 0.0 {
                let r = a.reference[i];
                if r <= 0.0 {
                    return (f64::INFINITY, 0.0);
                }
                d += v * (v / r).log2();
            }
        }
        let m = Marginals::of(t, self.nx, self.ny, self.nz);
        (d.max(0.0), info_term(self.kind, t, &m))
    }

    pub fn value(&self, tables: &[Vec<f64>]) -> f64 {
        let mut kl = 0.0;
        let mut info = 0.0;
        for (u, t) in tables.iter().enumerate() {
            let w = self.atoms[u].weight;
            if w <= 0.0 {
                continue;
            }
            let (d, i) = self.atom_terms(u, t);
            kl += w * d;
            info += w * i;
        }
        kl + (info - self.rate).max(0.0)
    }

    /// Weighted information only.
    pub fn info(&self, tables: &[Vec<f64>]) -> f64 {
        tables
            .iter()
            .enumerate()
            .filter(|(u, _)| self.atoms[*u].weight > 0.0)
            .map(|(u, t)| self.atoms[u].weight * self.atom_terms(u, t).1)
            .sum()
    }

    /// The product point `P_X × P_Y × W` for every atom.
    pub fn product_point(&self) -> Vec<Vec<f64>> {
        self.atoms.iter().map(|a| a.reference.clone()).collect()
    }

    pub fn to_joints(&self, tables: &[Vec<f64>]) -> Vec<JointDist3> {
        tables.iter().map(|t| JointDist3::from_raw(self.nx, self.ny, self.nz, t.clone())).collect()
    }
}

//! Entropic mirror descent on the per-atom joint tables with Bregman (IPF)
//! projection back onto the pinned input marginals.

use rand::Rng;

use super::problem::{Marginals, Problem};
use super::ExponentKind;

/// Entries on the support never drop below this during descent.
pub(crate) const CLIP: f64 = 1e-12;

/// Iterative proportional fitting onto `Q_X = p_x`, `Q_Y = p_y`.
pub(crate) fn ipf(t: &mut [f64], p_x: &[f64], p_y: &[f64], nz: usize) {
    let (nx, ny) = (p_x.len(), p_y.len());
    for _ in 0..1000 {
        let mut qx = vec![0.0; nx];
        for x in 0..nx {
            qx[x] = t[x * ny * nz..(x + 1) * ny * nz].iter().sum();
            if qx[x] > 0.0 {
                let s = p_x[x] / qx[x];
                t[x * ny * nz..(x + 1) * ny * nz].iter_mut().for_each(|v| *v *= s);
            }
        }
        let mut qy = vec![0.0; ny];
        for x in 0..nx {
            for y in 0..ny {
                qy[y] += t[(x * ny + y) * nz..(x * ny + y + 1) * nz].iter().sum::<f64>();
            }
        }
        for x in 0..nx {
            for y in 0..ny {
                if qy[y] > 0.0 {
                    let s = p_y[y] / qy[y];
                    t[(x * ny + y) * nz..(x * ny + y + 1) * nz].iter_mut().for_each(|v| *v *= s);
                }
            }
        }
        let err: f64 = (0..nx)
            .map(|x| (t[x * ny * nz..(x + 1) * ny * nz].iter().sum::<f64>() - p_x[x]).abs())
            .sum();
        if err < 1e-15 {
            break;
        }
    }
}

fn lg(v: f64) -> f64 {
    v.max(f64::MIN_POSITIVE).log2()
}

/// Gradient of `D_u + s·I_u` (unweighted) on the support.
fn gradient(p: &Problem, u: usize, t: &[f64], s: f64) -> Vec<f64> {
    let (nx, ny, nz) = (p.nx, p.ny, p.nz);
    let a = &p.atoms[u];
    let m = Marginals::of(t, nx, ny, nz);
    let mut g = vec![0.0; t.len()];
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                let i = (x * ny + y) * nz + z;
                if !a.support[i] {
                    continue;
                }
                let mut v = lg(t[i]) - lg(a.reference[i]);
                if s != 0.0 {
                    let di = match p.kind {
                        ExponentKind::Xy => lg(t[i]) - lg(m.qxy[x * ny + y]) - lg(m.qz[z]),
                        ExponentKind::XGivenY => {
                            lg(t[i]) - lg(m.qxy[x * ny + y]) - lg(m.qyz[y * nz + z]) + lg(m.qy[y])
                        }
                        ExponentKind::YGivenX => {
                            lg(t[i]) - lg(m.qxy[x * ny + y]) - lg(m.qxz[x * nz + z]) + lg(m.qx[x])
                        }
                        ExponentKind::XOnly => lg(m.qxz[x * nz + z]) - lg(m.qx[x]) - lg(m.qz[z]),
                    };
                    v += s * di;
                }
                g[i] = v;
            }
        }
    }
    g
}

fn step(p: &Problem, tables: &[Vec<f64>], grads: &[Vec<f64>], eta: f64) -> Vec<Vec<f64>> {
    tables
        .iter()
        .zip(grads)
        .enumerate()
        .map(|(u, (t, g))| {
            let a = &p.atoms[u];
            if a.weight <= 0.0 {
                return t.clone();
            }
            let mut c: Vec<f64> = t
                .iter()
                .zip(g)
                .zip(&a.support)
                .map(|((&v, &gi), &sup)| if sup { (v.max(CLIP) * (-eta * gi).clamp(-60.0, 60.0).exp2()).max(CLIP) } else { 0.0 })
                .collect();
            ipf(&mut c, &a.p_x, &a.p_y, p.nz);
            c
        })
        .collect()
}

/// Descent mode: the true clipped objective, or the smooth Lagrangian
/// `Σ_u w_u (D_u + ρ I_u)`.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Mode {
    Exact,
    Lagrangian(f64),
}

fn mode_value(p: &Problem, tables: &[Vec<f64>], mode: Mode) -> f64 {
    match mode {
        Mode::Exact => p.value(tables),
        Mode::Lagrangian(rho) => tables
            .iter()
            .enumerate()
            .filter(|(u, _)| p.atoms[*u].weight > 0.0)
            .map(|(u, t)| {
                let (d, i) = p.atom_terms(u, t);
                p.atoms[u].weight * (d + rho * i)
            })
            .sum(),
    }
}

/// Backtracking mirror descent from `start`; returns the final tables and
/// their objective under `mode`.
pub(crate) fn descend(p: &Problem, start: Vec<Vec<f64>>, max_iters: usize, mode: Mode) -> (f64, Vec<Vec<f64>>) {
    let mut t = start;
    let mut f = mode_value(p, &t, mode);
    let mut eta = 0.5;
    let mut stall = 0;
    for _ in 0..max_iters {
        let s = match mode {
            // subgradient of |·|^+ is taken as 0 at the kink
            Mode::Exact => {
                if p.info(&t) > p.rate {
                    1.0
                } else {
                    0.0
                }
            }
            Mode::Lagrangian(rho) => rho,
        };
        let grads: Vec<Vec<f64>> = (0..t.len()).map(|u| gradient(p, u, &t[u], s)).collect();
        let mut accepted = false;
        while eta > 1e-10 {
            let c = step(p, &t, &grads, eta);
            let fc = mode_value(p, &c, mode);
            if fc < f {
                stall = if f - fc < 1e-14 * f.abs().max(1.0) { stall + 1 } else { 0 };
                t = c;
                f = fc;
                eta = (eta * 1.5).min(8.0);
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted || stall >= 5 {
            break;
        }
    }
    (f, t)
}

/// Sweeps the Lagrange weight on the information term, warm-started from
/// `start`, keeping the best exact objective seen. Exact for the convex
/// kinds and a strong local heuristic for the others.
pub(crate) fn polish(p: &Problem, start: &[Vec<f64>], iters: usize) -> (f64, Vec<Vec<f64>>) {
    let mut best = (p.value(start), start.to_vec());
    let consider = |t: &Vec<Vec<f64>>, best: &mut (f64, Vec<Vec<f64>>)| {
        let v = p.value(t);
        if v < best.0 {
            *best = (v, t.clone());
        }
    };
    let (_, q1) = descend(p, start.to_vec(), iters, Mode::Lagrangian(1.0));
    consider(&q1, &mut best);
    if p.info(&q1) >= p.rate {
        return best;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut warm = q1;
    for _ in 0..24 {
        let mid = 0.5 * (lo + hi);
        let (_, q) = descend(p, warm, iters, Mode::Lagrangian(mid));
        consider(&q, &mut best);
        if p.info(&q) > p.rate {
            lo = mid;
        } else {
            hi = mid;
        }
        warm = q;
        if hi - lo < 1e-7 {
            break;
        }
    }
    best
}

/// A random interior start with the pinned marginals.
pub(crate) fn random_start<R: Rng + ?Sized>(p: &Problem, rng: &mut R) -> Vec<Vec<f64>> {
    p.atoms
        .iter()
        .map(|a| {
            let mut t: Vec<f64> = a
                .support
                .iter()
                .map(|&s| if s { -(1.0 - rng.gen::<f64>()).ln() + 1e-9 } else { 0.0 })
                .collect();
            ipf(&mut t, &a.p_x, &a.p_y, p.nz);
            t
        })
        .collect()
}

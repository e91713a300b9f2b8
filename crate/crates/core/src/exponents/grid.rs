//! Exhaustive simplex grid over the free coordinates of each atom.
//!
//! Free coordinates are the `Q_XY` entries off the last row and column
//! (the rest are fixed by the pinned marginals) and one conditional
//! `V_{Z|xy}` per input cell. Every grid point is visited unless a
//! divergence lower bound proves it cannot beat the incumbent, so the
//! returned value is the exact grid minimum.

use crate::prob::{kl_of, plog2p};

use super::problem::Problem;
use super::ExponentKind;

/// Result of the grid stage.
pub(crate) struct GridResult {
    pub value: f64,
    pub tables: Vec<Vec<f64>>,
    pub leaves: u64,
}

/// All points of `{v ∈ Δ(nz) : v = k/steps}`.
fn simplex_points(nz: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, slot: usize, cur: &mut Vec<usize>, steps: usize, out: &mut Vec<Vec<f64>>) {
        if slot + 1 == cur.len() {
            cur[slot] = left;
            out.push(cur.iter().map(|&k| k as f64 / steps as f64).collect());
            return;
        }
        for k in (0..=left).rev() {
            cur[slot] = k;
            rec(left - k, slot + 1, cur, steps, out);
        }
    }
    let mut out = Vec::new();
    let mut cur = vec![0; nz];
    rec(steps, 0, &mut cur, steps, &mut out);
    out
}

fn binom(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Feasible `Q_XY` grid points for pinned marginals: free entries on the
/// absolute grid `k·h` plus the largest feasible value, dependent entries
/// solved from the marginals.
fn qxy_points(p_x: &[f64], p_y: &[f64], h: f64) -> Vec<Vec<f64>> {
    let (nx, ny) = (p_x.len(), p_y.len());
    let mut out = Vec::new();
    let mut q = vec![0.0; nx * ny];
    fn complete(q: &mut [f64], p_x: &[f64], p_y: &[f64]) -> bool {
        let (nx, ny) = (p_x.len(), p_y.len());
        for x in 0..nx - 1 {
            let s: f64 = (0..ny - 1).map(|y| q[x * ny + y]).sum();
            q[x * ny + ny - 1] = p_x[x] - s;
        }
        for y in 0..ny {
            let s: f64 = (0..nx - 1).map(|x| q[x * ny + y]).sum();
            q[(nx - 1) * ny + y] = p_y[y] - s;
        }
        for v in q.iter_mut() {
            if *v < -1e-12 {
                return false;
            }
            *v = v.max(0.0);
        }
        true
    }
    fn rec(i: usize, q: &mut Vec<f64>, p_x: &[f64], p_y: &[f64], h: f64, out: &mut Vec<Vec<f64>>) {
        let (nx, ny) = (p_x.len(), p_y.len());
        let free = (nx - 1) * (ny - 1);
        if i == free {
            if complete(q, p_x, p_y) {
                out.push(q.clone());
            }
            return;
        }
        let (x, y) = (i / (ny - 1), i % (ny - 1));
        let row: f64 = (0..y).map(|yy| q[x * ny + yy]).sum();
        let col: f64 = (0..x).map(|xx| q[xx * ny + y]).sum();
        let hi = (p_x[x] - row).min(p_y[y] - col).max(0.0);
        let mut vals: Vec<f64> = (0..).map(|k| k as f64 * h).take_while(|&v| v < hi - 1e-12).collect();
        vals.push(hi);
        for v in vals {
            q[x * ny + y] = v;
            rec(i + 1, q, p_x, p_y, h, out);
        }
        q[x * ny + y] = 0.0;
    }
    rec(0, &mut q, p_x, p_y, h, &mut out);
    out
}

/// Upper estimate of the number of grid leaves, used for the budget check.
pub(crate) fn grid_size(problem: &Problem, h: f64) -> f64 {
    let steps = (1.0 / h).round().max(1.0) as usize;
    let per_cell = binom(steps + problem.nz - 1, problem.nz - 1);
    let mut total = 1.0;
    for a in &problem.atoms {
        if a.weight <= 0.0 {
            continue;
        }
        let qxy = a
            .p_x
            .iter()
            .take(problem.nx - 1)
            .flat_map(|px| a.p_y.iter().take(problem.ny - 1).map(move |py| (px.min(*py) / h).floor() + 2.0))
            .product::<f64>();
        total *= qxy * per_cell.powi((problem.nx * problem.ny) as i32);
    }
    total
}

struct AtomData {
    weight: f64,
    h_x: f64,
    h_y: f64,
    qxy: Vec<Vec<f64>>,
    qxy_kl: Vec<f64>,
    /// Cell order `(x, y)` and whether the cell closes a group.
    cells: Vec<(usize, usize, bool)>,
    /// Per input cell: candidate `V` indices sorted by divergence, with the divergence.
    v_sorted: Vec<Vec<(usize, f64)>>,
}

struct Data<'a> {
    p: &'a Problem,
    atoms: Vec<AtomData>,
    vpts: Vec<Vec<f64>>,
    vh: Vec<f64>,
}

struct State {
    best: f64,
    path: Vec<usize>,
    best_path: Vec<usize>,
    leaves: u64,
    /// Depth-indexed scratch for the running `Q_Z` and group row.
    qz: Vec<f64>,
    grp: Vec<f64>,
    rest: Vec<f64>,
}

fn row_entropy(v: &[f64]) -> f64 {
    -v.iter().map(|&p| plog2p(p)).sum::<f64>()
}

const NO_V: (usize, f64) = (usize::MAX, 0.0);

fn visit_atom(d: &Data, s: &mut State, u: usize, depth: usize, kl: f64, info: f64) {
    if u == d.atoms.len() {
        s.leaves += 1;
        let v = kl + (info - d.p.rate).max(0.0);
        if v < s.best {
            s.best = v;
            s.best_path.clone_from(&s.path);
        }
        return;
    }
    let a = &d.atoms[u];
    if a.weight <= 0.0 {
        s.path.push(usize::MAX);
        visit_atom(d, s, u + 1, depth, kl, info);
        s.path.pop();
        return;
    }
    let (ny, nz) = (d.p.ny, d.p.nz);
    for qi in 0..a.qxy.len() {
        let k0 = kl + a.weight * a.qxy_kl[qi];
        // rest[i] bounds the divergence still to come from cells i.. of this atom
        let ncell = a.cells.len();
        let base = u * (ncell + 1);
        s.rest[base + ncell] = 0.0;
        for i in (0..ncell).rev() {
            let (x, y, _) = a.cells[i];
            let q = a.qxy[qi][x * ny + y];
            let dmin = a.v_sorted[x * ny + y].first().map_or(0.0, |e| e.1);
            s.rest[base + i] = s.rest[base + i + 1] + a.weight * q * dmin;
        }
        if k0 + s.rest[base] >= s.best {
            continue;
        }
        s.path.push(qi);
        for z in 0..nz {
            s.qz[depth * nz + z] = 0.0;
            s.grp[depth * nz + z] = 0.0;
        }
        visit_cell(d, s, u, qi, 0, depth, k0, info, 0.0, 0.0);
        s.path.pop();
    }
}

#[allow(clippy::too_many_arguments)]
fn visit_cell(d: &Data, s: &mut State, u: usize, qi: usize, i: usize, depth: usize, kl: f64, info: f64, gh: f64, hc: f64) {
    let nz = d.p.nz;
    let a = &d.atoms[u];
    if i == a.cells.len() {
        let qz = &s.qz[depth * nz..(depth + 1) * nz];
        let iu = match d.p.kind {
            ExponentKind::Xy => row_entropy(qz) - hc,
            ExponentKind::XGivenY => gh - a.h_y - hc,
            ExponentKind::YGivenX => gh - a.h_x - hc,
            ExponentKind::XOnly => row_entropy(qz) - (gh - a.h_x),
        }
        .max(0.0);
        visit_atom(d, s, u + 1, depth + 1, kl, info + a.weight * iu);
        return;
    }
    let (x, y, closes) = a.cells[i];
    let cidx = x * d.p.ny + y;
    let q = a.qxy[qi][cidx];
    let grouped = !matches!(d.p.kind, ExponentKind::Xy);
    // a massless cell leaves V irrelevant: visit one representative
    let cands: &[(usize, f64)] = if q <= 0.0 {
        a.v_sorted[cidx].get(..1).unwrap_or(std::slice::from_ref(&NO_V))
    } else {
        &a.v_sorted[cidx]
    };
    for &(vi, dv) in cands {
        let add = a.weight * q * dv;
        if kl + add + s.rest[u * (a.cells.len() + 1) + i + 1] >= s.best {
            break;
        }
        let (mut gh2, mut hc2) = (gh, hc);
        let next = depth + 1;
        for z in 0..nz {
            let m = if q > 0.0 { q * d.vpts[vi][z] } else { 0.0 };
            s.qz[next * nz + z] = s.qz[depth * nz + z] + m;
            s.grp[next * nz + z] = s.grp[depth * nz + z] + m;
        }
        if q > 0.0 {
            hc2 += q * d.vh[vi];
        }
        if grouped && closes {
            gh2 += row_entropy(&s.grp[next * nz..(next + 1) * nz]);
            for z in 0..nz {
                s.grp[next * nz + z] = 0.0;
            }
        }
        s.path.push(vi);
        visit_cell(d, s, u, qi, i + 1, next, kl + add, info, gh2, hc2);
        s.path.pop();
    }
}

/// Exact grid minimum at resolution `h` (`incumbent` seeds the bound).
pub(crate) fn grid_minimize(problem: &Problem, h: f64, incumbent: Option<f64>) -> GridResult {
    let (nx, ny, nz) = (problem.nx, problem.ny, problem.nz);
    let steps = (1.0 / h).round().max(1.0) as usize;
    let vpts = simplex_points(nz, steps);
    let vh: Vec<f64> = vpts.iter().map(|v| row_entropy(v)).collect();
    let y_major = matches!(problem.kind, ExponentKind::XGivenY);
    let mut atoms = Vec::new();
    for a in &problem.atoms {
        let qxy = qxy_points(&a.p_x, &a.p_y, h);
        let qxy_kl = qxy
            .iter()
            .map(|q| {
                let r: Vec<f64> = (0..nx * ny).map(|c| a.p_x[c / ny] * a.p_y[c % ny]).collect();
                kl_of(q, &r)
            })
            .collect();
        let mut cells = Vec::with_capacity(nx * ny);
        if y_major {
            for y in 0..ny {
                for x in 0..nx {
                    cells.push((x, y, x + 1 == nx));
                }
            }
        } else {
            for x in 0..nx {
                for y in 0..ny {
                    cells.push((x, y, y + 1 == ny));
                }
            }
        }
        let mut v_sorted = Vec::with_capacity(nx * ny);
        for c in 0..nx * ny {
            let wrow = &problem.w[c * nz..(c + 1) * nz];
            let mut list: Vec<(usize, f64)> = vpts
                .iter()
                .enumerate()
                .filter(|(_, v)| v.iter().zip(wrow).all(|(&vz, &wz)| vz == 0.0 || wz > 0.0))
                .map(|(i, v)| (i, kl_of(v, wrow)))
                .collect();
            list.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            v_sorted.push(list);
        }
        atoms.push(AtomData {
            weight: a.weight,
            h_x: row_entropy(&a.p_x),
            h_y: row_entropy(&a.p_y),
            qxy,
            qxy_kl,
            cells,
            v_sorted,
        });
    }
    let depth = problem.atoms.len() * (nx * ny + 1) + 2;
    let d = Data { p: problem, atoms, vpts, vh };
    let mut s = State {
        best: incumbent.map_or(f64::INFINITY, |v| v + 1e-12),
        path: Vec::new(),
        best_path: Vec::new(),
        leaves: 0,
        qz: vec![0.0; depth * nz],
        grp: vec![0.0; depth * nz],
        rest: vec![0.0; problem.atoms.len() * (nx * ny + 1)],
    };
    visit_atom(&d, &mut s, 0, 0, 0.0, 0.0);
    if s.best_path.is_empty() {
        return GridResult { value: f64::INFINITY, tables: Vec::new(), leaves: s.leaves };
    }
    // rebuild tables from the recorded path
    let mut tables = Vec::with_capacity(problem.atoms.len());
    let mut it = s.best_path.iter();
    for (u, a) in d.atoms.iter().enumerate() {
        let qi = *it.next().unwrap();
        if qi == usize::MAX {
            tables.push(problem.atoms[u].reference.clone());
            continue;
        }
        let mut t = vec![0.0; nx * ny * nz];
        for &(x, y, _) in &a.cells {
            let vi = *it.next().unwrap();
            let q = a.qxy[qi][x * ny + y];
            if q > 0.0 && vi != usize::MAX {
                for z in 0..nz {
                    t[(x * ny + y) * nz + z] = q * d.vpts[vi][z];
                }
            }
        }
        tables.push(t);
    }
    GridResult { value: problem.value(&tables), tables, leaves: s.leaves }
}

//! Finite-alphabet probability primitives.
//!
//! Everything here is measured in bits. The conventions `0 log 0 = 0` and
//! `p log(p/0) = +inf` are applied throughout; infinities propagate as
//! `f64::INFINITY` and never turn into NaN.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on total mass and row sums.
pub const PROB_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn plog2p(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Entropy of an unnormalized-safe slice of probabilities.
pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    -p.iter().map(|&v| plog2p(v)).sum::<f64>()
}

/// `Σ p log2(p/q)` with the usual zero conventions.
pub(crate) fn kl_of(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).log2();
        }
    }
    acc
}

fn check_simplex(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::dist(format!("{what}: empty alphabet")));
    }
    let mut sum = 0.0;
    for (i, &v) in p.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::dist(format!("{what}: entry {i} = {v} is not a probability")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::dist(format!("{what}: mass {sum} is not 1 (tolerance {PROB_TOL:e})")));
    }
    Ok(())
}

/// A probability vector over a finite alphabet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FiniteDist {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for FiniteDist {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        FiniteDist::new(v)
    }
}

impl From<FiniteDist> for Vec<f64> {
    fn from(d: FiniteDist) -> Self {
        d.probs
    }
}

impl FiniteDist {
    /// Validates the vector; no renormalization is attempted.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_simplex(&probs, "distribution")?;
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::dist("distribution: empty alphabet"));
        }
        Ok(Self { probs: vec![1.0 / k as f64; k] })
    }

    pub fn point_mass(k: usize, at: usize) -> Result<Self> {
        if at >= k {
            return Err(Error::dim(format!("point mass at {at} outside alphabet of size {k}")));
        }
        let mut probs = vec![0.0; k];
        probs[at] = 1.0;
        Ok(Self { probs })
    }

    /// Bernoulli-style binary distribution `(1 - p1, p1)`.
    pub fn binary(p1: f64) -> Result<Self> {
        Self::new(vec![1.0 - p1, p1])
    }

    /// Uniform draw from the simplex (flat Dirichlet).
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let mut v: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        Self { probs: v }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Outer product `p × q`, indexed `a * |q| + b`.
    pub fn product(&self, other: &FiniteDist) -> FiniteDist {
        let mut probs = Vec::with_capacity(self.len() * other.len());
        for &a in &self.probs {
            for &b in &other.probs {
                probs.push(a * b);
            }
        }
        FiniteDist { probs }
    }
}

/// Conditional law `W(z | x, y)` stored row-major as `[x][y][z]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelKernel {
    nx: usize,
    ny: usize,
    nz: usize,
    table: Vec<f64>,
}

impl ChannelKernel {
    pub fn new(nx: usize, ny: usize, nz: usize, table: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::dim("channel alphabets must be nonempty"));
        }
        if table.len() != nx * ny * nz {
            return Err(Error::dim(format!(
                "channel table has {} entries, expected {}x{}x{}",
                table.len(),
                nx,
                ny,
                nz
            )));
        }
        for x in 0..nx {
            for y in 0..ny {
                let row = &table[(x * ny + y) * nz..(x * ny + y + 1) * nz];
                check_simplex(row, &format!("channel row (x={x}, y={y})"))?;
            }
        }
        Ok(Self { nx, ny, nz, table })
    }

    pub fn from_fn(nx: usize, ny: usize, nz: usize, f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let mut table = Vec::with_capacity(nx * ny * nz);
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    table.push(f(x, y, z));
                }
            }
        }
        Self::new(nx, ny, nz, table)
    }

    /// Every row drawn uniformly from the output simplex.
    pub fn random<R: Rng + ?Sized>(nx: usize, ny: usize, nz: usize, rng: &mut R) -> Self {
        let mut table = Vec::with_capacity(nx * ny * nz);
        for _ in 0..nx * ny {
            table.extend_from_slice(FiniteDist::random(nz, rng).probs());
        }
        Self { nx, ny, nz, table }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nx, self.ny, self.nz)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize, z: usize) -> f64 {
        self.table[(x * self.ny + y) * self.nz + z]
    }

    #[inline]
    pub fn row(&self, x: usize, y: usize) -> &[f64] {
        let o = (x * self.ny + y) * self.nz;
        &self.table[o..o + self.nz]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// The same channel seen with the two inputs exchanged: `W'(z|y,x) = W(z|x,y)`.
    pub fn swap_inputs(&self) -> ChannelKernel {
        let mut table = Vec::with_capacity(self.table.len());
        for y in 0..self.ny {
            for x in 0..self.nx {
                table.extend_from_slice(self.row(x, y));
            }
        }
        ChannelKernel { nx: self.ny, ny: self.nx, nz: self.nz, table }
    }

    /// Output relabeling `z -> perm[z]`.
    pub fn relabel_outputs(&self, perm: &[usize]) -> Result<ChannelKernel> {
        if perm.len() != self.nz {
            return Err(Error::dim("output permutation length"));
        }
        let mut table = vec![0.0; self.table.len()];
        for xy in 0..self.nx * self.ny {
            for z in 0..self.nz {
                table[xy * self.nz + perm[z]] = self.table[xy * self.nz + z];
            }
        }
        ChannelKernel::new(self.nx, self.ny, self.nz, table)
    }
}

/// A joint distribution `Q(x, y, z)` stored row-major as `[x][y][z]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDist3 {
    nx: usize,
    ny: usize,
    nz: usize,
    table: Vec<f64>,
}

impl JointDist3 {
    pub fn new(nx: usize, ny: usize, nz: usize, table: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::dim("joint alphabets must be nonempty"));
        }
        if table.len() != nx * ny * nz {
            return Err(Error::dim(format!(
                "joint table has {} entries, expected {}",
                table.len(),
                nx * ny * nz
            )));
        }
        check_simplex(&table, "joint distribution")?;
        Ok(Self { nx, ny, nz, table })
    }

    /// Skips validation; callers guarantee a valid table.
    pub(crate) fn from_raw(nx: usize, ny: usize, nz: usize, table: Vec<f64>) -> Self {
        debug_assert_eq!(table.len(), nx * ny * nz);
        Self { nx, ny, nz, table }
    }

    /// `P_X × P_Y × W`.
    pub fn product(p_x: &FiniteDist, p_y: &FiniteDist, w: &ChannelKernel) -> Result<Self> {
        if p_x.len() != w.nx || p_y.len() != w.ny {
            return Err(Error::dim(format!(
                "input laws ({}, {}) do not match channel inputs ({}, {})",
                p_x.len(),
                p_y.len(),
                w.nx,
                w.ny
            )));
        }
        let mut table = Vec::with_capacity(w.table.len());
        for x in 0..w.nx {
            for y in 0..w.ny {
                let pxy = p_x.get(x) * p_y.get(y);
                table.extend(w.row(x, y).iter().map(|&v| pxy * v));
            }
        }
        Ok(Self { nx: w.nx, ny: w.ny, nz: w.nz, table })
    }

    /// Uniform draw from the full simplex over `X × Y × Z`.
    pub fn random<R: Rng + ?Sized>(nx: usize, ny: usize, nz: usize, rng: &mut R) -> Self {
        let d = FiniteDist::random(nx * ny * nz, rng);
        Self { nx, ny, nz, table: d.probs }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nx, self.ny, self.nz)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.table[(x * self.ny + y) * self.nz + z]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn q_x(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.nx];
        for x in 0..self.nx {
            m[x] = self.table[x * self.ny * self.nz..(x + 1) * self.ny * self.nz].iter().sum();
        }
        m
    }

    pub fn q_y(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.ny];
        for x in 0..self.nx {
            for y in 0..self.ny {
                m[y] += self.cell_mass(x, y);
            }
        }
        m
    }

    pub fn q_z(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.nz];
        for (i, &v) in self.table.iter().enumerate() {
            m[i % self.nz] += v;
        }
        m
    }

    /// `Q_XY`, indexed `x * |Y| + y`.
    pub fn q_xy(&self) -> Vec<f64> {
        (0..self.nx * self.ny)
            .map(|xy| self.table[xy * self.nz..(xy + 1) * self.nz].iter().sum())
            .collect()
    }

    /// `Q_XZ`, indexed `x * |Z| + z`.
    pub fn q_xz(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.nx * self.nz];
        for x in 0..self.nx {
            for y in 0..self.ny {
                for z in 0..self.nz {
                    m[x * self.nz + z] += self.get(x, y, z);
                }
            }
        }
        m
    }

    /// `Q_YZ`, indexed `y * |Z| + z`.
    pub fn q_yz(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.ny * self.nz];
        for x in 0..self.nx {
            for y in 0..self.ny {
                for z in 0..self.nz {
                    m[y * self.nz + z] += self.get(x, y, z);
                }
            }
        }
        m
    }

    fn cell_mass(&self, x: usize, y: usize) -> f64 {
        let o = (x * self.ny + y) * self.nz;
        self.table[o..o + self.nz].iter().sum()
    }

    /// `Q_{Z|XY}(·|x,y)`, or `None` when `Q_XY(x,y) = 0`.
    pub fn z_given_xy(&self, x: usize, y: usize) -> Option<Vec<f64>> {
        let o = (x * self.ny + y) * self.nz;
        let row = &self.table[o..o + self.nz];
        let m: f64 = row.iter().sum();
        (m > 0.0).then(|| row.iter().map(|&v| v / m).collect())
    }

    /// Exchanges the roles of the two inputs.
    pub fn swap_xy(&self) -> JointDist3 {
        let mut table = Vec::with_capacity(self.table.len());
        for y in 0..self.ny {
            for x in 0..self.nx {
                let o = (x * self.ny + y) * self.nz;
                table.extend_from_slice(&self.table[o..o + self.nz]);
            }
        }
        JointDist3 { nx: self.ny, ny: self.nx, nz: self.nz, table }
    }

    /// The joint as a flat distribution over `X × Y × Z`.
    pub fn flatten(&self) -> FiniteDist {
        FiniteDist { probs: self.table.clone() }
    }
}

/// Mutual informations of a joint `Q_XYZ`, in bits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    pub i_x_z: f64,
    pub i_y_z: f64,
    pub i_x_z_given_y: f64,
    pub i_y_z_given_x: f64,
    pub i_xy_z: f64,
}

pub fn entropy(d: &FiniteDist) -> f64 {
    entropy_of(d.probs())
}

pub fn kl_divergence(p: &FiniteDist, q: &FiniteDist) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::dim(format!("alphabet sizes {} and {} differ", p.len(), q.len())));
    }
    Ok(kl_of(p.probs(), q.probs()))
}

/// `D(Q_{Z|XY} ‖ W | Q_XY)`.
pub fn conditional_kl(q: &JointDist3, w: &ChannelKernel) -> Result<f64> {
    if q.dims() != w.dims() {
        return Err(Error::dim(format!("joint {:?} vs channel {:?}", q.dims(), w.dims())));
    }
    let mut acc = 0.0;
    for x in 0..q.nx {
        for y in 0..q.ny {
            let o = (x * q.ny + y) * q.nz;
            let row = &q.table[o..o + q.nz];
            let m: f64 = row.iter().sum();
            if m <= 0.0 {
                continue;
            }
            let wr = w.row(x, y);
            for (&qv, &wv) in row.iter().zip(wr) {
                if qv > 0.0 {
                    if wv <= 0.0 {
                        return Ok(f64::INFINITY);
                    }
                    // Q(x,y,z) log(Q(z|x,y) / W(z|x,y))
                    acc += qv * (qv / (m * wv)).log2();
                }
            }
        }
    }
    Ok(acc)
}

pub fn info_quantities(q: &JointDist3) -> InfoReport {
    let h_x = entropy_of(&q.q_x());
    let h_y = entropy_of(&q.q_y());
    let h_z = entropy_of(&q.q_z());
    let h_xy = entropy_of(&q.q_xy());
    let h_xz = entropy_of(&q.q_xz());
    let h_yz = entropy_of(&q.q_yz());
    let h_xyz = entropy_of(q.table());
    InfoReport {
        i_x_z: (h_x + h_z - h_xz).max(0.0),
        i_y_z: (h_y + h_z - h_yz).max(0.0),
        i_x_z_given_y: (h_xy + h_yz - h_y - h_xyz).max(0.0),
        i_y_z_given_x: (h_xy + h_xz - h_x - h_xyz).max(0.0),
        i_xy_z: (h_xy + h_z - h_xyz).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn d(v: &[f64]) -> FiniteDist {
        FiniteDist::new(v.to_vec()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&d(&[0.5, 0.5])), 1.0);
        assert_eq!(entropy(&d(&[1.0, 0.0])), 0.0);
        assert!((entropy(&d(&[0.25, 0.75])) - 0.811_278_124_459_132_9).abs() < 1e-12);
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&d(&[0.3, 0.7]), &d(&[0.3, 0.7])).unwrap(), 0.0);
        assert_eq!(kl_divergence(&d(&[1.0, 0.0]), &d(&[0.5, 0.5])).unwrap(), 1.0);
        let v = kl_divergence(&d(&[0.5, 0.5]), &d(&[0.25, 0.75])).unwrap();
        assert!((v - 0.207_518_749_639_422_1).abs() < 1e-12);
        assert_eq!(kl_divergence(&d(&[0.5, 0.5]), &d(&[1.0, 0.0])).unwrap(), f64::INFINITY);
        assert!(matches!(kl_divergence(&d(&[1.0]), &d(&[0.5, 0.5])), Err(Error::Dimension(_))));
    }

    #[test]
    fn validation_refuses_bad_mass() {
        assert!(FiniteDist::new(vec![0.5, 0.5 + 1e-9]).is_err());
        assert!(FiniteDist::new(vec![1.5, -0.5]).is_err());
        assert!(FiniteDist::new(vec![]).is_err());
        assert!(ChannelKernel::new(1, 1, 2, vec![0.4, 0.5]).is_err());
    }

    #[test]
    fn conditional_kl_examples() {
        let w = ChannelKernel::from_fn(2, 2, 2, |_, _, _| 0.5).unwrap();
        let q = JointDist3::product(&FiniteDist::uniform(2).unwrap(), &FiniteDist::uniform(2).unwrap(), &w).unwrap();
        assert_eq!(conditional_kl(&q, &w).unwrap(), 0.0);

        let mut t = vec![0.0; 8];
        t[0] = 1.0;
        let q = JointDist3::new(2, 2, 2, t).unwrap();
        assert_eq!(conditional_kl(&q, &w).unwrap(), 1.0);

        let w0 = ChannelKernel::from_fn(2, 2, 2, |x, _, z| if z == x { 1.0 } else { 0.0 }).unwrap();
        let q = JointDist3::new(2, 2, 2, vec![0.125; 8]).unwrap();
        assert_eq!(conditional_kl(&q, &w0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn info_examples() {
        let u = FiniteDist::uniform(2).unwrap();
        let copy = ChannelKernel::from_fn(2, 2, 2, |x, _, z| (z == x) as u8 as f64).unwrap();
        let r = info_quantities(&JointDist3::product(&u, &u, &copy).unwrap());
        assert!((r.i_x_z - 1.0).abs() < 1e-15);
        assert!(r.i_y_z_given_x.abs() < 1e-15);

        let indep = ChannelKernel::from_fn(2, 2, 2, |_, _, z| [0.3, 0.7][z]).unwrap();
        let r = info_quantities(&JointDist3::product(&u, &d(&[0.2, 0.8]), &indep).unwrap());
        for v in [r.i_x_z, r.i_y_z, r.i_x_z_given_y, r.i_y_z_given_x, r.i_xy_z] {
            assert!(v.abs() < 1e-12);
        }

        let xor = ChannelKernel::from_fn(2, 2, 2, |x, y, z| ((x ^ y) == z) as u8 as f64).unwrap();
        let r = info_quantities(&JointDist3::product(&u, &u, &xor).unwrap());
        assert!(r.i_x_z.abs() < 1e-15);
        assert!((r.i_x_z_given_y - 1.0).abs() < 1e-15);
        assert!((r.i_xy_z - 1.0).abs() < 1e-15);
    }

    #[test]
    fn swap_inputs_is_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = ChannelKernel::random(2, 3, 2, &mut rng);
        let s = w.swap_inputs();
        assert_eq!(s.dims(), (3, 2, 2));
        assert_eq!(s.prob(2, 1, 0), w.prob(1, 2, 0));
        assert_eq!(s.swap_inputs(), w);
    }

    #[test]
    fn chain_rule_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..500 {
            let q = JointDist3::random(3, 2, 4, &mut rng);
            let r = info_quantities(&q);
            assert!((r.i_xy_z - (r.i_x_z + r.i_y_z_given_x)).abs() < 1e-10);
            assert!((r.i_xy_z - (r.i_y_z + r.i_x_z_given_y)).abs() < 1e-10);
        }
    }

    #[test]
    fn product_kl_splits_into_channel_and_input_terms() {
        // D(Q_XYZ ‖ P_X P_Y W) = D(Q_{Z|XY} ‖ W | Q_XY) + D(Q_XY ‖ P_X P_Y)
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..1000 {
            let (nx, ny, nz) = (2, 3, 2);
            let w = ChannelKernel::random(nx, ny, nz, &mut rng);
            let q = JointDist3::random(nx, ny, nz, &mut rng);
            let (px, py) = (FiniteDist::new(q.q_x()).unwrap(), FiniteDist::new(q.q_y()).unwrap());
            let full = kl_divergence(&q.flatten(), &JointDist3::product(&px, &py, &w).unwrap().flatten()).unwrap();
            let split = conditional_kl(&q, &w).unwrap() + kl_of(&q.q_xy(), px.product(&py).probs());
            assert!((full - split).abs() < 1e-10);
        }
    }

    proptest::proptest! {
        #[test]
        fn kl_nonnegative_and_zero_on_diagonal(a in proptest::collection::vec(0.0f64..1.0, 4), b in proptest::collection::vec(0.01f64..1.0, 4)) {
            proptest::prop_assume!(a.iter().sum::<f64>() > 0.0);
            let norm = |v: &Vec<f64>| { let s: f64 = v.iter().sum(); FiniteDist::new(v.iter().map(|x| x / s).collect()).unwrap() };
            let (p, q) = (norm(&a), norm(&b));
            proptest::prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-15);
            proptest::prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-12);
        }
    }
}

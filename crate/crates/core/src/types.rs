//! Method-of-types machinery: compositions, type classes, empirical joints,
//! exact counting and uniform sampling from a type class.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::prob::{FiniteDist, JointDist3};

/// Largest number of types `enumerate_joint_types` will produce.
pub const ENUMERATION_GUARD: u128 = 10_000_000;

/// An n-quantized type: integer counts over the alphabet summing to `n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Composition {
    counts: Vec<u64>,
    n: u64,
}

impl Composition {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::arg("composition over an empty alphabet"));
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::arg("composition with blocklength 0"));
        }
        Ok(Self { counts, n })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn alphabet(&self) -> usize {
        self.counts.len()
    }

    pub fn to_dist(&self) -> FiniteDist {
        let n = self.n as f64;
        // Counts are exact, so the normalized vector sums to 1 up to rounding.
        FiniteDist::new(self.counts.iter().map(|&c| c as f64 / n).collect())
            .expect("normalized counts form a distribution")
    }
}

/// A length-n string over `{0, .., alphabet-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sequence {
    symbols: Vec<u8>,
    alphabet: usize,
}

impl Sequence {
    pub fn new(symbols: Vec<u8>, alphabet: usize) -> Result<Self> {
        if alphabet == 0 || alphabet > 256 {
            return Err(Error::arg(format!("alphabet size {alphabet} unsupported")));
        }
        if let Some(&s) = symbols.iter().find(|&&s| s as usize >= alphabet) {
            return Err(Error::arg(format!("symbol {s} outside alphabet of size {alphabet}")));
        }
        Ok(Self { symbols, alphabet })
    }

    /// Parses a digit string such as `"0101"`.
    pub fn from_digits(s: &str, alphabet: usize) -> Result<Self> {
        let symbols = s
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(|| Error::Parse(format!("bad symbol {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(symbols, alphabet)
    }

    pub(crate) fn from_raw(symbols: Vec<u8>, alphabet: usize) -> Self {
        Self { symbols, alphabet }
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }
}

/// Largest-remainder rounding of `n * target`, ties broken toward the lowest symbol.
pub fn quantize_composition(target: &FiniteDist, n: u64) -> Result<Composition> {
    if n == 0 {
        return Err(Error::arg("blocklength must be at least 1"));
    }
    let scaled: Vec<f64> = target.probs().iter().map(|&p| p * n as f64).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|&s| s.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    // Stable sort keeps lower indices first among equal remainders.
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.partial_cmp(&ra).unwrap()
    });
    for &i in order.iter().take(n.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    Composition::new(counts)
}

pub fn empirical_type(s: &Sequence) -> Result<Composition> {
    if s.is_empty() {
        return Err(Error::arg("empty sequence has no type"));
    }
    let mut counts = vec![0u64; s.alphabet];
    for &v in &s.symbols {
        counts[v as usize] += 1;
    }
    Composition::new(counts)
}

/// Integer frequency table over a product alphabet, row-major in the order
/// the sequences were given.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointType {
    dims: Vec<usize>,
    counts: Vec<u64>,
    n: u64,
}

impl JointType {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn probs(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n as f64).collect()
    }

    pub fn to_joint3(&self) -> Result<JointDist3> {
        match self.dims[..] {
            [a, b, c] => JointDist3::new(a, b, c, self.probs()),
            _ => Err(Error::dim(format!("joint type has {} axes, expected 3", self.dims.len()))),
        }
    }
}

pub fn empirical_joint(seqs: &[&Sequence]) -> Result<JointType> {
    let first = seqs.first().ok_or_else(|| Error::arg("no sequences"))?;
    let n = first.len();
    if n == 0 {
        return Err(Error::arg("empty sequences"));
    }
    if let Some(s) = seqs.iter().find(|s| s.len() != n) {
        return Err(Error::dim(format!("sequence lengths {} and {} differ", n, s.len())));
    }
    let dims: Vec<usize> = seqs.iter().map(|s| s.alphabet).collect();
    let mut counts = vec![0u64; dims.iter().product()];
    for t in 0..n {
        let mut idx = 0;
        for (s, &d) in seqs.iter().zip(&dims) {
            idx = idx * d + s.symbols[t] as usize;
        }
        counts[idx] += 1;
    }
    Ok(JointType { dims, counts, n: n as u64 })
}

/// `log2 (n! / Π c_a!)`.
pub fn log2_type_class_size(c: &Composition) -> f64 {
    let ln_fact = |k: u64| ln_gamma(k as f64 + 1.0);
    let ln = ln_fact(c.n) - c.counts.iter().map(|&k| ln_fact(k)).sum::<f64>();
    (ln / std::f64::consts::LN_2).max(0.0)
}

/// Number of nonnegative integer tables with `cells` entries summing to `n`:
/// `C(n + cells - 1, cells - 1)`, saturating.
pub fn count_types(n: u64, cells: usize) -> u128 {
    if cells == 0 {
        return 0;
    }
    let k = (cells - 1) as u128;
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc = C(n + i, i), exact at every step
        acc = match acc.checked_mul(n as u128 + i) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    acc
}

/// All joint types with denominator `n` over the product alphabet `dims`.
pub fn enumerate_joint_types(n: u64, dims: &[usize]) -> Result<TypeIter> {
    if n == 0 || dims.is_empty() || dims.contains(&0) {
        return Err(Error::arg("enumeration needs n >= 1 and nonempty alphabets"));
    }
    let cells: usize = dims.iter().product();
    let count = count_types(n, cells);
    if count > ENUMERATION_GUARD {
        return Err(Error::Guard { what: "joint type enumeration".into(), count, limit: ENUMERATION_GUARD });
    }
    let mut first = vec![0u64; cells];
    first[0] = n;
    Ok(TypeIter { dims: dims.to_vec(), n, next: Some(first) })
}

/// Iterator over compositions of `n` into a fixed number of cells, in reverse
/// lexicographic order starting from `(n, 0, .., 0)`.
#[derive(Debug, Clone)]
pub struct TypeIter {
    dims: Vec<usize>,
    n: u64,
    next: Option<Vec<u64>>,
}

impl Iterator for TypeIter {
    type Item = JointType;

    fn next(&mut self) -> Option<JointType> {
        let cur = self.next.take()?;
        let k = cur.len();
        // Successor: find the rightmost nonzero cell before the last, move one unit
        // right and collapse the tail onto the position after it.
        let mut succ = cur.clone();
        let pivot = (0..k.saturating_sub(1)).rev().find(|&i| succ[i] > 0);
        if let Some(i) = pivot {
            let tail = succ[k - 1];
            succ[k - 1] = 0;
            succ[i] -= 1;
            succ[i + 1] += tail + 1;
            self.next = Some(succ);
        }
        Some(JointType { dims: self.dims.clone(), counts: cur, n: self.n })
    }
}

/// Uniform draw from the type class of `c`: a uniform shuffle of the
/// canonical sorted string.
pub fn sample_from_type_class<R: Rng + ?Sized>(c: &Composition, rng: &mut R) -> Sequence {
    let mut symbols = Vec::with_capacity(c.n as usize);
    for (a, &k) in c.counts.iter().enumerate() {
        symbols.extend(std::iter::repeat_n(a as u8, k as usize));
    }
    symbols.shuffle(rng);
    Sequence::from_raw(symbols, c.alphabet())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::entropy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dist(v: &[f64]) -> FiniteDist {
        FiniteDist::new(v.to_vec()).unwrap()
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_composition(&dist(&[0.5, 0.5]), 4).unwrap().counts(), &[2, 2]);
        assert_eq!(quantize_composition(&dist(&[1.0, 0.0]), 7).unwrap().counts(), &[7, 0]);
        assert_eq!(quantize_composition(&dist(&[1.0 / 3.0, 2.0 / 3.0]), 4).unwrap().counts(), &[1, 3]);
        // equal remainders: the lower index wins
        assert_eq!(quantize_composition(&dist(&[0.5, 0.5]), 3).unwrap().counts(), &[2, 1]);
        assert!(quantize_composition(&dist(&[1.0]), 0).is_err());
    }

    /// Brute force: every rounding summing to n, minimal L1 error.
    #[test]
    fn quantize_minimizes_l1_against_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let t = FiniteDist::random(3, &mut rng);
            let n = rng.gen_range(1..12u64);
            let l1 = |c: &[u64]| c.iter().zip(t.probs()).map(|(&k, &p)| (k as f64 / n as f64 - p).abs()).sum::<f64>();
            let best = enumerate_joint_types(n, &[3])
                .unwrap()
                .map(|jt| l1(jt.counts()))
                .fold(f64::INFINITY, f64::min);
            let q = quantize_composition(&t, n).unwrap();
            assert!(l1(q.counts()) <= best + 1e-12);
        }
    }

    #[test]
    fn empirical_type_examples() {
        let c = |s: &str, k| empirical_type(&Sequence::from_digits(s, k).unwrap()).unwrap();
        assert_eq!(c("0101", 2).counts(), &[2, 2]);
        assert_eq!(c("0000", 2).counts(), &[4, 0]);
        assert_eq!(c("0212", 3).counts(), &[1, 1, 2]);
    }

    #[test]
    fn empirical_joint_examples() {
        let s = |v: &str| Sequence::from_digits(v, 2).unwrap();
        assert_eq!(empirical_joint(&[&s("01"), &s("01")]).unwrap().probs(), vec![0.5, 0.0, 0.0, 0.5]);
        assert_eq!(empirical_joint(&[&s("00"), &s("01")]).unwrap().probs(), vec![0.5, 0.5, 0.0, 0.0]);
        let j = empirical_joint(&[&s("0011"), &s("0101"), &s("0110")]).unwrap().to_joint3().unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    let expect = if x ^ y == z { 0.25 } else { 0.0 };
                    assert_eq!(j.get(x, y, z), expect);
                }
            }
        }
        assert!(empirical_joint(&[&s("01"), &s("011")]).is_err());
    }

    #[test]
    fn type_class_size_examples() {
        let v = log2_type_class_size(&Composition::new(vec![2, 2]).unwrap());
        assert!((v - 6f64.log2()).abs() < 1e-12);
        assert_eq!(log2_type_class_size(&Composition::new(vec![9, 0]).unwrap()), 0.0);
    }

    #[test]
    fn type_class_size_upper_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let k = rng.gen_range(1..6);
            let counts: Vec<u64> = (0..k).map(|_| rng.gen_range(0..40)).collect();
            let Ok(c) = Composition::new(counts) else { continue };
            let h = entropy(&c.to_dist());
            assert!(log2_type_class_size(&c) <= c.n() as f64 * h + 1e-9);
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_joint_types(1, &[2, 2, 2]).unwrap().count(), 8);
        assert_eq!(enumerate_joint_types(2, &[2]).unwrap().count(), 3);
        assert_eq!(enumerate_joint_types(3, &[2, 2]).unwrap().count(), 20);
        assert_eq!(count_types(3, 4), 20);
        let err = enumerate_joint_types(100, &[3, 3, 3]).unwrap_err();
        assert!(matches!(err, Error::Guard { count, .. } if count == count_types(100, 27)));
    }

    #[test]
    fn enumeration_is_exhaustive_and_distinct() {
        let all: Vec<_> = enumerate_joint_types(4, &[2, 3]).unwrap().collect();
        assert_eq!(all.len() as u128, count_types(4, 6));
        let set: std::collections::HashSet<_> = all.iter().map(|t| t.counts().to_vec()).collect();
        assert_eq!(set.len(), all.len());
        assert!(all.iter().all(|t| t.counts().iter().sum::<u64>() == 4));
    }

    #[test]
    fn sampling_preserves_type() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = Composition::new(vec![5, 0]).unwrap();
        assert_eq!(sample_from_type_class(&c, &mut rng).symbols(), &[0; 5]);
        let c = Composition::new(vec![3, 1, 4]).unwrap();
        for _ in 0..50 {
            assert_eq!(empirical_type(&sample_from_type_class(&c, &mut rng)).unwrap(), c);
        }
    }

    #[test]
    fn type_class_size_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let k = rng.gen_range(2..5);
            let n = rng.gen_range(1..60u64);
            let c = quantize_composition(&FiniteDist::random(k, &mut rng), n).unwrap();
            let lower = n as f64 * entropy(&c.to_dist()) - k as f64 * ((n + 1) as f64).log2();
            assert!(log2_type_class_size(&c) >= lower - 1e-9);
        }
    }

    #[test]
    fn sampling_is_uniform_on_class() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let c = Composition::new(vec![2, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..6000 {
            *counts.entry(sample_from_type_class(&c, &mut rng).symbols().to_vec()).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 6);
        let chi2: f64 = counts.values().map(|&o| (o as f64 - 1000.0).powi(2) / 1000.0).sum();
        let p = 1.0 - ChiSquared::new(5.0).unwrap().cdf(chi2);
        assert!(p > 0.001, "chi2 {chi2}, p {p}");
    }

    proptest::proptest! {
        #[test]
        fn sample_round_trip(counts in proptest::collection::vec(0u64..6, 1..5), seed in 0u64..1000) {
            proptest::prop_assume!(counts.iter().sum::<u64>() > 0);
            let c = Composition::new(counts).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            proptest::prop_assert_eq!(empirical_type(&sample_from_type_class(&c, &mut rng)).unwrap(), c);
        }

        #[test]
        fn quantize_l1_bound(raw in proptest::collection::vec(0.01f64..1.0, 2..6), n in 1u64..200) {
            let total: f64 = raw.iter().sum();
            let t = FiniteDist::new(raw.iter().map(|v| v / total).collect()).unwrap();
            let c = quantize_composition(&t, n).unwrap();
            let l1: f64 = c.counts().iter().zip(t.probs()).map(|(&k, &p)| (k as f64 / n as f64 - p).abs()).sum();
            proptest::prop_assert!(l1 <= t.len() as f64 / (2.0 * n as f64) + 1e-12);
        }
    }
}

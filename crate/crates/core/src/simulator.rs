//! Monte Carlo and exact small-n evaluation of randomized fixed-composition
//! codes under maximum-mutual-information (MMI) decoding.
//!
//! Empirical mutual information is compared on exact integer counts: for a
//! fixed output `z`, `n·I(z; a)` differs across candidates `a` only by
//! `Σ φ(c_az) - Σ φ(c_a)` with `φ(c) = c·log c`, which is the logarithm of a
//! rational number. Near-equal float scores are settled by comparing those
//! rationals through their prime factorizations, so ties are exact.

use std::cmp::Ordering;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::exponents::RatePair;
use crate::prob::{ChannelKernel, FiniteDist};
use crate::types::{empirical_type, quantize_composition, sample_from_type_class, Composition, Sequence};
use crate::{Error, Result};

/// Largest codebook size accepted by [`sample_codebook`].
pub const MAX_MESSAGES: u64 = 1 << 20;
/// Largest trial count accepted by the Monte Carlo estimators.
pub const MAX_TRIALS: u64 = 100_000_000;
/// Largest output space `|Z|^n` enumerated by [`exact_error_given_codebook`].
pub const MAX_OUTPUTS: u128 = 1 << 20;
/// Largest number of candidate pairs a joint decoder may scan per trial.
pub const MAX_PAIRS: u64 = 1 << 24;

/// Float gap below which two scores are compared exactly.
const NEAR_TIE: f64 = 1e-9;

/// Codewords of one encoder, all of a single composition. Repeats are
/// allowed since words are drawn independently.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    words: Vec<Sequence>,
    composition: Composition,
}

impl Codebook {
    pub fn new(words: Vec<Sequence>) -> Result<Self> {
        let first = words.first().ok_or_else(|| Error::arg("codebook needs at least one word"))?;
        let composition = empirical_type(first)?;
        for w in &words[1..] {
            if w.alphabet() != first.alphabet() || empirical_type(w)? != composition {
                return Err(Error::arg("codebook words must share one composition"));
            }
        }
        Ok(Self { words, composition })
    }

    pub fn words(&self) -> &[Sequence] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &Sequence {
        &self.words[i]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Block length.
    pub fn n(&self) -> usize {
        self.words[0].len()
    }

    pub fn alphabet(&self) -> usize {
        self.words[0].alphabet()
    }

    pub fn composition(&self) -> &Composition {
        &self.composition
    }
}

/// `2^{⌈n·rate⌉}`, with a 1e-9 slack so that products like `60 × 0.05`
/// do not round up a whole bit.
pub fn message_count(n: usize, rate: f64) -> Result<u64> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::arg(format!("rate must be finite and nonnegative, got {rate}")));
    }
    let bits = (n as f64 * rate - 1e-9).ceil().max(0.0);
    if bits > 20.0 {
        return Err(Error::Guard {
            what: "codebook messages".into(),
            count: if bits < 127.0 { 1u128 << bits as u32 } else { u128::MAX },
            limit: MAX_MESSAGES as u128,
        });
    }
    Ok(1u64 << bits as u32)
}

/// Draws `2^{⌈n·rate⌉}` independent uniform words from the type class of
/// `comp`.
pub fn sample_codebook<R: Rng + ?Sized>(n: usize, rate: f64, comp: &Composition, rng: &mut R) -> Result<Codebook> {
    if comp.n() != n as u64 {
        return Err(Error::dim(format!("composition has length {}, block length is {n}", comp.n())));
    }
    if n == 0 {
        return Err(Error::arg("block length must be positive"));
    }
    let m = message_count(n, rate)?;
    let words = (0..m).map(|_| sample_from_type_class(comp, rng)).collect();
    Ok(Codebook { words, composition: comp.clone() })
}

/// One use of the memoryless channel per symbol pair.
pub fn transmit<R: Rng + ?Sized>(w: &ChannelKernel, x: &Sequence, y: &Sequence, rng: &mut R) -> Result<Sequence> {
    if x.len() != y.len() {
        return Err(Error::dim(format!("input lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.alphabet() != w.nx() || y.alphabet() != w.ny() {
        return Err(Error::dim("input alphabets do not match the channel"));
    }
    Ok(transmit_raw(w, x.symbols(), y.symbols(), rng))
}

fn transmit_raw<R: Rng + ?Sized>(w: &ChannelKernel, x: &[u8], y: &[u8], rng: &mut R) -> Sequence {
    let nz = w.nz();
    let z = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let row = w.row(a as usize, b as usize);
            let mut u: f64 = rng.gen();
            let mut k = 0;
            // inverse CDF; the last positive entry absorbs rounding slack
            let last = row.iter().rposition(|&p| p > 0.0).unwrap_or(nz - 1);
            while k < last && u >= row[k] {
                u -= row[k];
                k += 1;
            }
            k as u8
        })
        .collect();
    Sequence::from_raw(z, nz)
}

/// Counting and exact-comparison tables for one block length.
struct Scorer {
    n: usize,
    /// `φ(c) = c·log2 c`.
    phi: Vec<f64>,
    primes: Vec<u32>,
    /// Prime factorization of each `c ≤ n` as `(prime index, exponent)`.
    factors: Vec<Vec<(usize, u32)>>,
}

impl Scorer {
    fn new(n: usize) -> Self {
        let phi = (0..=n).map(|c| if c == 0 { 0.0 } else { c as f64 * (c as f64).log2() }).collect();
        let mut primes = Vec::new();
        let mut factors = vec![Vec::new(); n + 1];
        for c in 2..=n {
            let mut rest = c as u32;
            let mut f = Vec::new();
            for (i, &p) in primes.iter().enumerate() {
                if p * p > rest {
                    break;
                }
                let mut e = 0;
                while rest % p == 0 {
                    rest /= p;
                    e += 1;
                }
                if e > 0 {
                    f.push((i, e));
                }
            }
            if rest > 1 {
                let i = match primes.iter().position(|&p| p == rest) {
                    Some(i) => i,
                    None => {
                        primes.push(rest);
                        primes.len() - 1
                    }
                };
                f.push((i, 1));
            }
            factors[c] = f;
        }
        Self { n, phi, primes, factors }
    }

    /// Adds `sign · c · factor(c)` for each count into `acc`.
    fn accumulate(&self, acc: &mut [i64], counts: &[u32], sign: i64) {
        for &c in counts {
            for &(i, e) in &self.factors[c as usize] {
                acc[i] += sign * c as i64 * e as i64;
            }
        }
    }

    /// Exact order of `Π c^c (a.pos) / Π c^c (a.neg)` against the same for `b`.
    fn cmp_exact(&self, a: &Key, b: &Key) -> Ordering {
        let mut e = vec![0i64; self.primes.len()];
        self.accumulate(&mut e, &a.pos, 1);
        self.accumulate(&mut e, &a.neg, -1);
        self.accumulate(&mut e, &b.pos, -1);
        self.accumulate(&mut e, &b.neg, 1);
        if e.iter().all(|&v| v == 0) {
            return Ordering::Equal;
        }
        let (mut num, mut den) = (BigUint::from(1u32), BigUint::from(1u32));
        for (&p, &v) in self.primes.iter().zip(&e) {
            match v.cmp(&0) {
                Ordering::Greater => num *= BigUint::from(p).pow(v as u32),
                Ordering::Less => den *= BigUint::from(p).pow((-v) as u32),
                Ordering::Equal => {}
            }
        }
        num.cmp(&den)
    }
}

/// Candidate score: `Σ φ(pos) - Σ φ(neg)` with the counts kept for exact
/// comparison.
#[derive(Clone, Default)]
struct Key {
    value: f64,
    pos: Vec<u32>,
    neg: Vec<u32>,
}

/// Running argmax with exact tie detection.
struct Argmax {
    best: Option<usize>,
    tied: bool,
    key: Key,
}

impl Argmax {
    fn new() -> Self {
        Self { best: None, tied: false, key: Key::default() }
    }

    fn offer(&mut self, sc: &Scorer, idx: usize, key: &Key) {
        if self.best.is_none() {
            self.replace(idx, key);
            return;
        }
        let d = key.value - self.key.value;
        let ord = if d > NEAR_TIE {
            Ordering::Greater
        } else if d < -NEAR_TIE {
            Ordering::Less
        } else {
            sc.cmp_exact(key, &self.key)
        };
        match ord {
            Ordering::Greater => self.replace(idx, key),
            Ordering::Equal => self.tied = true,
            Ordering::Less => {}
        }
    }

    fn replace(&mut self, idx: usize, key: &Key) {
        self.best = Some(idx);
        self.tied = false;
        self.key.value = key.value;
        self.key.pos.clone_from(&key.pos);
        self.key.neg.clone_from(&key.neg);
    }

    fn winner(&self) -> Option<usize> {
        if self.tied {
            None
        } else {
            self.best
        }
    }
}

/// Fills `key` with the score of input symbols `a` (alphabet `na`) against
/// output `z` (alphabet `nz`).
fn score(sc: &Scorer, a: impl Iterator<Item = usize>, na: usize, z: &[u8], nz: usize, key: &mut Key) {
    debug_assert_eq!(z.len(), sc.n);
    let mut c_az = vec![0u32; na * nz];
    let mut c_a = vec![0u32; na];
    for (ai, &zi) in a.zip(z) {
        c_az[ai * nz + zi as usize] += 1;
        c_a[ai] += 1;
    }
    key.pos.clear();
    key.neg.clear();
    key.pos.extend(c_az.iter().copied().filter(|&c| c > 1));
    key.neg.extend(c_a.iter().copied().filter(|&c| c > 1));
    key.value = key.pos.iter().map(|&c| sc.phi[c as usize]).sum::<f64>()
        - key.neg.iter().map(|&c| sc.phi[c as usize]).sum::<f64>();
}

/// Receiver decision; `None` marks a declared tie or a message the decoder
/// does not estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub m_x: Option<usize>,
    pub m_y: Option<usize>,
    /// Some stage of the decoder hit a non-unique maximum.
    pub tie: bool,
}

impl Decision {
    pub fn pair(&self) -> Option<(usize, usize)> {
        Some((self.m_x?, self.m_y?))
    }
}

/// Which MMI rule receiver 1 applies (receiver 2 uses the mirror image).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    /// `argmax_{i,j} I(z; x(i), y(j))`.
    Joint,
    /// `argmax_i I(z; x(i))`, treating the other user as noise.
    XOnly,
    /// X-only first, then `argmax_j I(z; x(m̂_x), y(j))`.
    Sequential,
}

fn check_lengths(z: &Sequence, books: &[&Codebook]) -> Result<()> {
    for b in books {
        if b.n() != z.len() {
            return Err(Error::dim(format!("codeword length {} vs output length {}", b.n(), z.len())));
        }
    }
    Ok(())
}

fn decode_x_with(sc: &Scorer, z: &Sequence, cx: &Codebook) -> Option<usize> {
    let mut arg = Argmax::new();
    let mut key = Key::default();
    for (i, w) in cx.words.iter().enumerate() {
        score(sc, w.symbols().iter().map(|&s| s as usize), cx.alphabet(), z.symbols(), z.alphabet(), &mut key);
        arg.offer(sc, i, &key);
    }
    arg.winner()
}

fn decode_y_given_x(sc: &Scorer, z: &Sequence, x: &Sequence, cy: &Codebook) -> Option<usize> {
    let ny = cy.alphabet();
    let mut arg = Argmax::new();
    let mut key = Key::default();
    for (j, w) in cy.words.iter().enumerate() {
        let a = x.symbols().iter().zip(w.symbols()).map(|(&a, &b)| a as usize * ny + b as usize);
        score(sc, a, x.alphabet() * ny, z.symbols(), z.alphabet(), &mut key);
        arg.offer(sc, j, &key);
    }
    arg.winner()
}

fn decode_joint_with(sc: &Scorer, z: &Sequence, cx: &Codebook, cy: &Codebook) -> Option<(usize, usize)> {
    let ny = cy.alphabet();
    let mut arg = Argmax::new();
    let mut key = Key::default();
    for (i, wx) in cx.words.iter().enumerate() {
        for (j, wy) in cy.words.iter().enumerate() {
            let a = wx.symbols().iter().zip(wy.symbols()).map(|(&a, &b)| a as usize * ny + b as usize);
            score(sc, a, cx.alphabet() * ny, z.symbols(), z.alphabet(), &mut key);
            arg.offer(sc, i * cy.len() + j, &key);
        }
    }
    arg.winner().map(|k| (k / cy.len(), k % cy.len()))
}

fn decode_with(sc: &Scorer, kind: DecoderKind, z: &Sequence, cx: &Codebook, cy: &Codebook) -> Decision {
    match kind {
        DecoderKind::Joint => match decode_joint_with(sc, z, cx, cy) {
            Some((i, j)) => Decision { m_x: Some(i), m_y: Some(j), tie: false },
            None => Decision { m_x: None, m_y: None, tie: true },
        },
        DecoderKind::XOnly => {
            let m_x = decode_x_with(sc, z, cx);
            Decision { m_x, m_y: None, tie: m_x.is_none() }
        }
        DecoderKind::Sequential => match decode_x_with(sc, z, cx) {
            None => Decision { m_x: None, m_y: None, tie: true },
            Some(i) => {
                let m_y = decode_y_given_x(sc, z, cx.word(i), cy);
                Decision { m_x: Some(i), m_y, tie: m_y.is_none() }
            }
        },
    }
}

/// Exhaustive joint MMI decoding; `None` on a tie.
pub fn mmi_decode_joint(z: &Sequence, cx: &Codebook, cy: &Codebook) -> Result<Option<(usize, usize)>> {
    check_lengths(z, &[cx, cy])?;
    Ok(decode_joint_with(&Scorer::new(z.len()), z, cx, cy))
}

/// MMI decoding of the X message alone; `None` on a tie.
pub fn mmi_decode_x(z: &Sequence, cx: &Codebook) -> Result<Option<usize>> {
    check_lengths(z, &[cx])?;
    Ok(decode_x_with(&Scorer::new(z.len()), z, cx))
}

/// X-only decoding followed by the best Y word given the decoded X word.
/// A first-stage tie leaves both messages undecided.
pub fn mmi_decode_sequential(z: &Sequence, cx: &Codebook, cy: &Codebook) -> Result<Decision> {
    check_lengths(z, &[cx, cy])?;
    Ok(decode_with(&Scorer::new(z.len()), DecoderKind::Sequential, z, cx, cy))
}

/// Applies `kind` at a receiver whose own codebook is `cx`.
pub fn decode(kind: DecoderKind, z: &Sequence, cx: &Codebook, cy: &Codebook) -> Result<Decision> {
    check_lengths(z, &[cx, cy])?;
    Ok(decode_with(&Scorer::new(z.len()), kind, z, cx, cy))
}

/// Point estimate with a two-sided confidence interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, confidence: f64) -> Interval {
    if n == 0 {
        return Interval { p_hat: 0.0, lo: 0.0, hi: 1.0 };
    }
    let z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.5 + confidence / 2.0);
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Interval { p_hat: p, lo: (centre - half).max(0.0).min(p), hi: (centre + half).min(1.0).max(p) }
}

/// Monte Carlo configuration for the randomized code ensemble.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub n: usize,
    pub rates: RatePair,
    pub p_x: FiniteDist,
    pub p_y: FiniteDist,
    pub w: ChannelKernel,
    pub w_tilde: ChannelKernel,
    pub decoder: DecoderKind,
    pub trials: u64,
    pub seed: u64,
    /// Encoder Y sends one fixed message regardless of `rates.r_y`.
    pub single_y_message: bool,
}

/// Error tallies. `errors_x` is receiver 1 missing `m_x`, `errors_y` is
/// receiver 2 missing `m_y`, and `errors_joint` is receiver 1 missing the
/// pair (for [`DecoderKind::XOnly`] this is the X error, since Y is not
/// estimated). Intervals are 95% Wilson.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub n: usize,
    pub trials: u64,
    pub messages_x: u64,
    pub messages_y: u64,
    pub errors_x: u64,
    pub errors_y: u64,
    pub errors_joint: u64,
    pub ties_declared: u64,
    pub p_x: Interval,
    pub p_y: Interval,
    pub p_joint: Interval,
    pub seed: u64,
}

#[derive(Clone, Copy, Default)]
struct Tally {
    x: u64,
    y: u64,
    joint: u64,
    ties: u64,
}

impl Tally {
    fn add(self, o: Tally) -> Tally {
        Tally { x: self.x + o.x, y: self.y + o.y, joint: self.joint + o.joint, ties: self.ties + o.ties }
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

struct Trial<'a> {
    sc: &'a Scorer,
    kind: DecoderKind,
    w: &'a ChannelKernel,
    w_tilde: &'a ChannelKernel,
}

impl Trial<'_> {
    fn run<R: Rng>(&self, cx: &Codebook, cy: &Codebook, rng: &mut R) -> Tally {
        let m_x = rng.gen_range(0..cx.len());
        let m_y = rng.gen_range(0..cy.len());
        let (x, y) = (cx.word(m_x), cy.word(m_y));
        let z = transmit_raw(self.w, x.symbols(), y.symbols(), rng);
        let zt = transmit_raw(self.w_tilde, x.symbols(), y.symbols(), rng);
        let d1 = decode_with(self.sc, self.kind, &z, cx, cy);
        let d2 = decode_with(self.sc, self.kind, &zt, cy, cx);
        let ex = d1.m_x != Some(m_x);
        let ej = match self.kind {
            DecoderKind::XOnly => ex,
            _ => d1.pair() != Some((m_x, m_y)),
        };
        Tally { x: ex as u64, y: (d2.m_x != Some(m_y)) as u64, joint: ej as u64, ties: (d1.tie || d2.tie) as u64 }
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::arg("trials must be positive"));
    }
    if trials > MAX_TRIALS {
        return Err(Error::Guard { what: "trials".into(), count: trials as u128, limit: MAX_TRIALS as u128 });
    }
    Ok(())
}

fn check_pairs(kind: DecoderKind, mx: u64, my: u64) -> Result<()> {
    let pairs = match kind {
        DecoderKind::Joint => mx * my,
        _ => mx + my,
    };
    if pairs > MAX_PAIRS {
        return Err(Error::Guard { what: "decoder candidates per trial".into(), count: pairs as u128, limit: MAX_PAIRS as u128 });
    }
    Ok(())
}

fn check_channels(w: &ChannelKernel, w_tilde: &ChannelKernel, nx: usize, ny: usize) -> Result<()> {
    if (w.nx(), w.ny()) != (nx, ny) || (w_tilde.nx(), w_tilde.ny()) != (nx, ny) {
        return Err(Error::dim("channel input alphabets do not match the compositions"));
    }
    Ok(())
}

fn result(n: usize, trials: u64, mx: u64, my: u64, t: Tally, seed: u64) -> SimResult {
    SimResult {
        n,
        trials,
        messages_x: mx,
        messages_y: my,
        errors_x: t.x,
        errors_y: t.y,
        errors_joint: t.joint,
        ties_declared: t.ties,
        p_x: wilson(t.x, trials, 0.95),
        p_y: wilson(t.y, trials, 0.95),
        p_joint: wilson(t.joint, trials, 0.95),
        seed,
    }
}

/// Error rates averaged over messages, codebooks and channel noise. Trial
/// `t` draws everything from ChaCha stream `t` of `seed`, so the result does
/// not depend on scheduling.
pub fn estimate_error(cfg: &SimConfig) -> Result<SimResult> {
    if cfg.n == 0 {
        return Err(Error::arg("block length must be positive"));
    }
    check_trials(cfg.trials)?;
    check_channels(&cfg.w, &cfg.w_tilde, cfg.p_x.len(), cfg.p_y.len())?;
    let comp_x = quantize_composition(&cfg.p_x, cfg.n as u64)?;
    let comp_y = quantize_composition(&cfg.p_y, cfg.n as u64)?;
    let mx = message_count(cfg.n, cfg.rates.r_x)?;
    let my = if cfg.single_y_message { 1 } else { message_count(cfg.n, cfg.rates.r_y)? };
    check_pairs(cfg.decoder, mx, my)?;
    let sc = Scorer::new(cfg.n);
    let trial = Trial { sc: &sc, kind: cfg.decoder, w: &cfg.w, w_tilde: &cfg.w_tilde };
    let ry = if cfg.single_y_message { 0.0 } else { cfg.rates.r_y };
    let tally = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, t);
            let cx = sample_codebook(cfg.n, cfg.rates.r_x, &comp_x, &mut rng).expect("checked above");
            let cy = sample_codebook(cfg.n, ry, &comp_y, &mut rng).expect("checked above");
            trial.run(&cx, &cy, &mut rng)
        })
        .reduce(Tally::default, Tally::add);
    Ok(result(cfg.n, cfg.trials, mx, my, tally, cfg.seed))
}

/// Monte Carlo over messages and channel noise for fixed codebooks.
pub fn estimate_error_given_codebook(
    cx: &Codebook,
    cy: &Codebook,
    w: &ChannelKernel,
    w_tilde: &ChannelKernel,
    kind: DecoderKind,
    trials: u64,
    seed: u64,
) -> Result<SimResult> {
    check_trials(trials)?;
    if cx.n() != cy.n() {
        return Err(Error::dim("codebooks have different block lengths"));
    }
    check_channels(w, w_tilde, cx.alphabet(), cy.alphabet())?;
    check_pairs(kind, cx.len() as u64, cy.len() as u64)?;
    let sc = Scorer::new(cx.n());
    let trial = Trial { sc: &sc, kind, w, w_tilde };
    let tally = (0..trials)
        .into_par_iter()
        .map(|t| trial.run(cx, cy, &mut trial_rng(seed, t)))
        .reduce(Tally::default, Tally::add);
    Ok(result(cx.n(), trials, cx.len() as u64, cy.len() as u64, tally, seed))
}

/// Exact receiver-1 error probabilities of a fixed codebook pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactError {
    /// `P(m̂_x ≠ m_x)`.
    pub x: f64,
    /// `P((m̂_x, m̂_y) ≠ (m_x, m_y))`, equal to `x` for the X-only decoder.
    pub joint: f64,
}

/// Enumerates every output sequence: the decision depends on `z` only, so
/// each `z` is decoded once and weighted by its likelihood under every
/// message pair.
pub fn exact_error_given_codebook(cx: &Codebook, cy: &Codebook, w: &ChannelKernel, kind: DecoderKind) -> Result<ExactError> {
    let n = cx.n();
    if cy.n() != n {
        return Err(Error::dim("codebooks have different block lengths"));
    }
    if (w.nx(), w.ny()) != (cx.alphabet(), cy.alphabet()) {
        return Err(Error::dim("channel input alphabets do not match the codebooks"));
    }
    let nz = w.nz();
    let outputs = (nz as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if outputs > MAX_OUTPUTS {
        return Err(Error::Guard { what: "output sequences |Z|^n".into(), count: outputs, limit: MAX_OUTPUTS });
    }
    let sc = Scorer::new(n);
    let (mx, my) = (cx.len(), cy.len());
    let mut z = vec![0u8; n];
    let (mut ex, mut ej) = (0.0, 0.0);
    for _ in 0..outputs {
        let zs = Sequence::from_raw(z.clone(), nz);
        let d = decode_with(&sc, kind, &zs, cx, cy);
        for i in 0..mx {
            for j in 0..my {
                let (x, y) = (cx.word(i).symbols(), cy.word(j).symbols());
                let p: f64 = (0..n).map(|t| w.prob(x[t] as usize, y[t] as usize, z[t] as usize)).product();
                if p == 0.0 {
                    continue;
                }
                let wrong_x = d.m_x != Some(i);
                let wrong_j = match kind {
                    DecoderKind::XOnly => wrong_x,
                    _ => d.pair() != Some((i, j)),
                };
                if wrong_x {
                    ex += p;
                }
                if wrong_j {
                    ej += p;
                }
            }
        }
        for s in z.iter_mut() {
            *s += 1;
            if (*s as usize) < nz {
                break;
            }
            *s = 0;
        }
    }
    let norm = (mx * my) as f64;
    Ok(ExactError { x: ex / norm, joint: ej / norm })
}

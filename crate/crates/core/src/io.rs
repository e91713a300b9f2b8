//! File formats: channel specs, time-sharing profiles, scenario configs, and
//! the fixed-precision CSV/JSON writers used for reproducible exports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::exponents::{ExponentConfig, Method, RatePair, TimeShareProfile};
use crate::prob::{ChannelKernel, FiniteDist};
use crate::regions::WitnessOptions;
use crate::simulator::DecoderKind;
use crate::{Error, Result};

/// Rows of a channel file may miss 1 by at most this much; they are then
/// renormalized.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// A probability given either as a JSON number or as a decimal string.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Prob {
    Num(f64),
    Str(String),
}

impl Prob {
    fn value(&self, field: &str) -> Result<f64> {
        let v = match self {
            Prob::Num(v) => *v,
            Prob::Str(s) => s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("{field}: '{s}' is not a decimal number")))?,
        };
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Parse(format!("{field}: probability {v} must be finite and nonnegative")));
        }
        Ok(v)
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    // serde_json reports line and column
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    #[serde(rename = "X")]
    x: usize,
    #[serde(rename = "Y")]
    y: usize,
    #[serde(rename = "Z")]
    z: usize,
    #[serde(rename = "Ztilde")]
    z_tilde: usize,
    #[serde(rename = "W")]
    w: Vec<Vec<Vec<Prob>>>,
    #[serde(rename = "Wtilde")]
    w_tilde: Vec<Vec<Vec<Prob>>>,
}

/// The interfering channel pair: `W` into receiver 1, `W̃` into receiver 2.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelPair {
    pub w: ChannelKernel,
    pub w_tilde: ChannelKernel,
}

/// Canonical form used for hashing; floats only.
#[derive(Serialize)]
struct ChannelCanon<'a> {
    #[serde(rename = "X")]
    x: usize,
    #[serde(rename = "Y")]
    y: usize,
    #[serde(rename = "Z")]
    z: usize,
    #[serde(rename = "Ztilde")]
    z_tilde: usize,
    #[serde(rename = "W")]
    w: &'a [f64],
    #[serde(rename = "Wtilde")]
    w_tilde: &'a [f64],
}

fn kernel(name: &str, rows: &[Vec<Vec<Prob>>], nx: usize, ny: usize, nz: usize) -> Result<ChannelKernel> {
    if rows.len() != nx {
        return Err(Error::Parse(format!("{name}: expected {nx} x-rows, found {}", rows.len())));
    }
    let mut table = Vec::with_capacity(nx * ny * nz);
    for (x, by_y) in rows.iter().enumerate() {
        if by_y.len() != ny {
            return Err(Error::Parse(format!("{name}[{x}]: expected {ny} y-rows, found {}", by_y.len())));
        }
        for (y, row) in by_y.iter().enumerate() {
            if row.len() != nz {
                return Err(Error::Parse(format!("{name}[{x}][{y}]: expected {nz} entries, found {}", row.len())));
            }
            let vals = row
                .iter()
                .enumerate()
                .map(|(z, p)| p.value(&format!("{name}[{x}][{y}][{z}]")))
                .collect::<Result<Vec<f64>>>()?;
            let s: f64 = vals.iter().sum();
            if (s - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::Parse(format!("{name}[{x}][{y}]: row sums to {s}, not 1")));
            }
            table.extend(vals.iter().map(|v| v / s));
        }
    }
    ChannelKernel::new(nx, ny, nz, table)
}

impl ChannelPair {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: ChannelFile = parse_json(text, "channel file")?;
        if f.x == 0 || f.y == 0 || f.z == 0 || f.z_tilde == 0 {
            return Err(Error::Parse("channel file: alphabet sizes must be positive".into()));
        }
        Ok(Self { w: kernel("W", &f.w, f.x, f.y, f.z)?, w_tilde: kernel("Wtilde", &f.w_tilde, f.x, f.y, f.z_tilde)? })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Serializes in the channel-file layout with float entries.
    pub fn to_json(&self) -> String {
        let (nx, ny, nz) = self.w.dims();
        let nzt = self.w_tilde.nz();
        let nest = |t: &[f64], nz: usize| -> Vec<Vec<Vec<f64>>> {
            (0..nx).map(|x| (0..ny).map(|y| t[(x * ny + y) * nz..(x * ny + y + 1) * nz].to_vec()).collect()).collect()
        };
        let v = serde_json::json!({
            "X": nx, "Y": ny, "Z": nz, "Ztilde": nzt,
            "W": nest(self.w.table(), nz),
            "Wtilde": nest(self.w_tilde.table(), nzt),
        });
        serde_json::to_string_pretty(&v).expect("json")
    }

    fn canon(&self) -> ChannelCanon<'_> {
        let (nx, ny, nz) = self.w.dims();
        ChannelCanon { x: nx, y: ny, z: nz, z_tilde: self.w_tilde.nz(), w: self.w.table(), w_tilde: self.w_tilde.table() }
    }
}

fn dist(field: &str, v: &[Prob]) -> Result<FiniteDist> {
    let vals = v.iter().enumerate().map(|(i, p)| p.value(&format!("{field}[{i}]"))).collect::<Result<Vec<f64>>>()?;
    FiniteDist::new(vals).map_err(|e| Error::Parse(format!("{field}: {e}")))
}

/// Parses `"p0,p1,..."`.
pub fn parse_dist_list(field: &str, s: &str) -> Result<FiniteDist> {
    let v: Vec<Prob> = s.split(',').map(|t| Prob::Str(t.to_string())).collect();
    dist(field, &v)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub p_u: Vec<Prob>,
    pub p_x_given_u: Vec<Vec<Prob>>,
    pub p_y_given_u: Vec<Vec<Prob>>,
}

impl ProfileFile {
    pub fn resolve(&self) -> Result<TimeShareProfile> {
        let p_u = dist("p_u", &self.p_u)?;
        let px = self.p_x_given_u.iter().enumerate().map(|(u, v)| dist(&format!("p_x_given_u[{u}]"), v)).collect::<Result<_>>()?;
        let py = self.p_y_given_u.iter().enumerate().map(|(u, v)| dist(&format!("p_y_given_u[{u}]"), v)).collect::<Result<_>>()?;
        TimeShareProfile::new(p_u, px, py)
    }
}

pub fn load_profile(path: &Path) -> Result<TimeShareProfile> {
    let f: ProfileFile = parse_json(&read(path)?, &path.display().to_string())?;
    f.resolve()
}

/// `steps + 1` points per axis from 0 to the maxima.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateGrid {
    pub rx_max: f64,
    pub ry_max: f64,
    pub steps: usize,
}

impl RateGrid {
    /// Parses `"rx_max,ry_max,steps"`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("rate grid '{s}': expected rx_max,ry_max,steps")));
        }
        let f = |t: &str| t.parse::<f64>().map_err(|_| Error::Parse(format!("rate grid: '{t}' is not a number")));
        let steps = parts[2].parse::<usize>().map_err(|_| Error::Parse(format!("rate grid: '{}' is not a count", parts[2])))?;
        Ok(Self { rx_max: f(parts[0])?, ry_max: f(parts[1])?, steps })
    }

    pub fn points(&self) -> Result<Vec<RatePair>> {
        if self.steps == 0 || self.steps > 1000 {
            return Err(Error::arg(format!("rate grid steps {} outside 1..=1000", self.steps)));
        }
        let mut out = Vec::with_capacity((self.steps + 1) * (self.steps + 1));
        for i in 0..=self.steps {
            for j in 0..=self.steps {
                let k = self.steps as f64;
                out.push(RatePair::new(self.rx_max * i as f64 / k, self.ry_max * j as f64 / k)?);
            }
        }
        Ok(out)
    }
}

/// Exponent solver settings as they appear in a scenario file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSettings {
    pub method: Option<Method>,
    pub grid_resolution: Option<f64>,
    pub restarts: Option<usize>,
    pub grid_budget: Option<f64>,
    pub max_iters: Option<usize>,
}

/// A scenario file. Every field is optional except the channel; command-line
/// flags override what is given here.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Channel file, relative to the scenario file.
    pub channel: PathBuf,
    pub comp_x: Option<Vec<Prob>>,
    pub comp_y: Option<Vec<Prob>>,
    pub profile: Option<ProfileFile>,
    pub rates: Option<Vec<[f64; 2]>>,
    pub rate_grid: Option<RateGrid>,
    pub n_list: Option<Vec<usize>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub decoder: Option<DecoderKind>,
    pub converse_mode: Option<bool>,
    pub exact_check: Option<bool>,
    pub exponent: Option<ExponentSettings>,
    pub witness: Option<WitnessOptions>,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self> {
        let mut f: ScenarioFile = parse_json(&read(path)?, &path.display().to_string())?;
        if f.channel.is_relative() {
            if let Some(dir) = path.parent() {
                f.channel = dir.join(&f.channel);
            }
        }
        Ok(f)
    }

    pub fn comp_x(&self) -> Result<Option<FiniteDist>> {
        self.comp_x.as_ref().map(|v| dist("comp_x", v)).transpose()
    }

    pub fn comp_y(&self) -> Result<Option<FiniteDist>> {
        self.comp_y.as_ref().map(|v| dist("comp_y", v)).transpose()
    }
}

/// Input distributions of a run. A one-atom profile is stored as plain
/// compositions so that both spellings produce identical outputs.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Inputs {
    Compositions { p_x: FiniteDist, p_y: FiniteDist },
    Profile(TimeShareProfile),
}

impl Inputs {
    pub fn from_profile(p: TimeShareProfile) -> Self {
        if p.atoms() == 1 {
            Inputs::Compositions { p_x: p.p_x_given_u[0].clone(), p_y: p.p_y_given_u[0].clone() }
        } else {
            Inputs::Profile(p)
        }
    }

    pub fn profile(&self) -> TimeShareProfile {
        match self {
            Inputs::Compositions { p_x, p_y } => TimeShareProfile::single(p_x.clone(), p_y.clone()),
            Inputs::Profile(p) => p.clone(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            Inputs::Compositions { p_x, p_y } => (p_x.len(), p_y.len()),
            Inputs::Profile(p) => (p.p_x_given_u[0].len(), p.p_y_given_u[0].len()),
        }
    }
}

/// Fully resolved settings of one command invocation. Its canonical JSON
/// is what the config hash covers.
#[derive(Clone, Debug, Serialize)]
pub struct ScenarioConfig {
    pub command: String,
    #[serde(serialize_with = "ser_channel")]
    pub channel: ChannelPair,
    pub inputs: Inputs,
    pub rates: Vec<RatePair>,
    pub n_list: Vec<usize>,
    pub trials: u64,
    pub seed: Option<u64>,
    pub decoder: DecoderKind,
    pub converse_mode: bool,
    pub exact_check: bool,
    pub exponent: ExponentConfig,
    pub witness: WitnessOptions,
}

fn ser_channel<S: serde::Serializer>(c: &ChannelPair, s: S) -> std::result::Result<S::Ok, S::Error> {
    c.canon().serialize(s)
}

impl ScenarioConfig {
    /// Checks that every dimension agrees with the channel.
    pub fn validate(&self) -> Result<()> {
        let (nx, ny) = self.inputs.dims();
        let (wx, wy, _) = self.channel.w.dims();
        if (nx, ny) != (wx, wy) {
            return Err(Error::dim(format!("compositions have sizes ({nx}, {ny}) but the channel inputs are ({wx}, {wy})")));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Formats with 12 significant digits in plain decimal notation, trailing
/// zeros trimmed. Output is identical on every platform.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-30..=20).contains(&mag) {
        return format!("{v:.11e}");
    }
    // rounding can carry into a new leading digit; format once more if so
    let mut decimals = (11 - mag).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    let digits = s.trim_start_matches('-').replace('.', "").trim_start_matches('0').len();
    if digits > 12 && decimals > 0 {
        decimals -= 1;
        s = format!("{v:.decimals$}");
    }
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// CSV document with `#` metadata lines and LF endings.
pub struct Csv {
    meta: Vec<String>,
    header: String,
    rows: Vec<String>,
}

impl Csv {
    pub fn new(command: &str, config_hash: &str, seed: Option<u64>, columns: &[&str]) -> Self {
        let meta = vec![
            format!("fcic {command}"),
            format!("config_sha256={config_hash}"),
            format!("seed={}", seed.map_or("none".to_string(), |s| s.to_string())),
        ];
        Self { meta, header: columns.join(","), rows: Vec::new() }
    }

    pub fn comment(&mut self, line: &str) {
        self.meta.push(line.to_string());
    }

    pub fn row(&mut self, fields: &[String]) {
        self.rows.push(fields.join(","));
    }

    pub fn finish(self) -> String {
        let mut text = String::new();
        for m in &self.meta {
            let _ = writeln!(text, "# {m}");
        }
        let _ = writeln!(text, "{}", self.header);
        for r in &self.rows {
            let _ = writeln!(text, "{r}");
        }
        text
    }
}

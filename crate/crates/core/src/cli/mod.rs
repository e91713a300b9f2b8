//! Command-line front end. Every command resolves its flags (and an optional
//! scenario file) into a [`ScenarioConfig`], whose hash and seed head each
//! output file.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::exponents::{exponent_suite, timeshared_exponent_suite, ExponentConfig, Method, RatePair};
use crate::io::{fmt_num, load_profile, parse_dist_list, ChannelPair, Csv, Inputs, RateGrid, ScenarioConfig, ScenarioFile};
use crate::prob::{info_quantities, InfoReport, JointDist3};
use crate::regions::{
    profile_gap_search, region_x, region_x_timeshare, region_xy, region_xy_timeshare, region_y, region_y_timeshare,
    Membership, RegionPolygon,
};
use crate::simulator::{
    estimate_error, estimate_error_given_codebook, exact_error_given_codebook, sample_codebook, DecoderKind, SimConfig,
    SimResult, MAX_OUTPUTS,
};
use crate::types::quantize_composition;
use crate::{Error, Result};

mod verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "fcic", version, about = "Fixed-composition interference channel regions, exponents and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mutual informations of both channels at the given inputs.
    Info(Common),
    /// Vertex lists of R_x, R_y and R_xy, plus hull and gap witness for profiles.
    Region(Common),
    /// Error exponents over a rate grid.
    Exponent(Common),
    /// Monte Carlo error rates versus block length.
    Simulate(Common),
    /// Runs the invariant suite; exit code 0 when everything holds.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Scenario file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Channel spec file.
    #[arg(long)]
    channel: Option<PathBuf>,
    /// Composition of encoder X, "p0,p1,...".
    #[arg(long = "comp-x")]
    comp_x: Option<String>,
    /// Composition of encoder Y, "p0,p1,...".
    #[arg(long = "comp-y")]
    comp_y: Option<String>,
    /// Time-sharing profile file.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Rate of user X in bits per symbol.
    #[arg(long)]
    rx: Option<f64>,
    /// Rate of user Y in bits per symbol.
    #[arg(long)]
    ry: Option<f64>,
    /// "rx_max,ry_max,steps".
    #[arg(long = "rate-grid")]
    rate_grid: Option<String>,
    /// Block lengths, "20,40,60".
    #[arg(long = "n-list")]
    n_list: Option<String>,
    /// Monte Carlo trials per block length [default: 1000].
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed; required by simulate and by non-grid exponent methods.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, value_enum)]
    decoder: Option<DecoderArg>,
    /// Encoder Y sends a single message.
    #[arg(long = "converse-mode")]
    converse_mode: bool,
    /// Adds exact and fixed-codebook rows for block lengths small enough to enumerate.
    #[arg(long = "exact-check")]
    exact_check: bool,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Simplex grid step for the exponent search.
    #[arg(long = "grid-resolution")]
    grid_resolution: Option<f64>,
    /// Random descent restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Grid step of the gap witness search, in bits.
    #[arg(long = "witness-resolution")]
    witness_resolution: Option<f64>,
    /// Smallest accepted distance between witness and hull, in bits.
    #[arg(long = "min-gap")]
    min_gap: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct VerifyArgs {
    /// Directory of scenario files to check.
    #[arg(long, default_value = "scenarios")]
    scenarios: PathBuf,
    /// Extra channel files to validate.
    #[arg(long)]
    channel: Vec<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum DecoderArg {
    Joint,
    XOnly,
    Sequential,
}

impl From<DecoderArg> for DecoderKind {
    fn from(d: DecoderArg) -> Self {
        match d {
            DecoderArg::Joint => DecoderKind::Joint,
            DecoderArg::XOnly => DecoderKind::XOnly,
            DecoderArg::Sequential => DecoderKind::Sequential,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MethodArg {
    Grid,
    Descent,
    Hybrid,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Grid => Method::Grid,
            MethodArg::Descent => Method::Descent,
            MethodArg::Hybrid => Method::Hybrid,
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Info(c) => cmd_info(&c),
        Command::Region(c) => cmd_region(&c),
        Command::Exponent(c) => cmd_exponent(&c),
        Command::Simulate(c) => cmd_simulate(&c),
        Command::Verify(v) => return verify::run(&v.scenarios, &v.channel),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Guard { .. } => EXIT_GUARD,
        _ => EXIT_CONFIG,
    }
}

fn parse_list<T: std::str::FromStr>(what: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| Error::Parse(format!("{what}: '{t}' is not valid"))))
        .collect()
}

/// Merges a scenario file with flag overrides.
fn resolve(command: &str, c: &Common) -> Result<ScenarioConfig> {
    let file = c.config.as_deref().map(ScenarioFile::load).transpose()?;
    let channel_path = c
        .channel
        .clone()
        .or_else(|| file.as_ref().map(|f| f.channel.clone()))
        .ok_or_else(|| Error::arg("a channel is required (--channel or --config)"))?;
    let channel = ChannelPair::load(&channel_path)?;

    let inputs = if let Some(p) = &c.profile {
        Inputs::from_profile(load_profile(p)?)
    } else if c.comp_x.is_some() || c.comp_y.is_some() {
        let (Some(x), Some(y)) = (&c.comp_x, &c.comp_y) else {
            return Err(Error::arg("--comp-x and --comp-y must be given together"));
        };
        Inputs::Compositions { p_x: parse_dist_list("--comp-x", x)?, p_y: parse_dist_list("--comp-y", y)? }
    } else if let Some(f) = &file {
        match (&f.profile, f.comp_x()?, f.comp_y()?) {
            (Some(p), _, _) => Inputs::from_profile(p.resolve()?),
            (None, Some(p_x), Some(p_y)) => Inputs::Compositions { p_x, p_y },
            _ => return Err(Error::arg("scenario needs comp_x and comp_y, or a profile")),
        }
    } else {
        return Err(Error::arg("inputs are required (--comp-x/--comp-y, --profile or --config)"));
    };

    let rates = if c.rx.is_some() || c.ry.is_some() {
        vec![RatePair::new(c.rx.unwrap_or(0.0), c.ry.unwrap_or(0.0))?]
    } else if let Some(g) = &c.rate_grid {
        RateGrid::parse(g)?.points()?
    } else if let Some(f) = &file {
        match (&f.rates, &f.rate_grid) {
            (Some(r), _) => r.iter().map(|&[x, y]| RatePair::new(x, y)).collect::<Result<_>>()?,
            (None, Some(g)) => g.points()?,
            (None, None) => Vec::new(),
        }
    } else {
        Vec::new()
    };

    let n_list = match (&c.n_list, file.as_ref().and_then(|f| f.n_list.clone())) {
        (Some(s), _) => parse_list("--n-list", s)?,
        (None, Some(v)) => v,
        (None, None) => Vec::new(),
    };
    let seed = c.seed.or(file.as_ref().and_then(|f| f.seed));

    let mut exponent = ExponentConfig::default();
    if let Some(s) = file.as_ref().and_then(|f| f.exponent.clone()) {
        exponent.method = s.method.unwrap_or(exponent.method);
        exponent.grid_resolution = s.grid_resolution.unwrap_or(exponent.grid_resolution);
        exponent.restarts = s.restarts.unwrap_or(exponent.restarts);
        exponent.grid_budget = s.grid_budget.unwrap_or(exponent.grid_budget);
        exponent.max_iters = s.max_iters.unwrap_or(exponent.max_iters);
    }
    if let Some(m) = c.method {
        exponent.method = m.into();
    }
    exponent.grid_resolution = c.grid_resolution.unwrap_or(exponent.grid_resolution);
    exponent.restarts = c.restarts.unwrap_or(exponent.restarts);
    exponent.seed = seed.unwrap_or(0);

    let mut witness = file.as_ref().and_then(|f| f.witness).unwrap_or_default();
    witness.resolution = c.witness_resolution.unwrap_or(witness.resolution);
    witness.min_gap = c.min_gap.unwrap_or(witness.min_gap);

    let cfg = ScenarioConfig {
        command: command.to_string(),
        channel,
        inputs,
        rates,
        n_list,
        trials: c.trials.or(file.as_ref().and_then(|f| f.trials)).unwrap_or(1000),
        seed,
        decoder: c.decoder.map(Into::into).or(file.as_ref().and_then(|f| f.decoder)).unwrap_or(DecoderKind::Joint),
        converse_mode: c.converse_mode || file.as_ref().and_then(|f| f.converse_mode).unwrap_or(false),
        exact_check: c.exact_check || file.as_ref().and_then(|f| f.exact_check).unwrap_or(false),
        exponent,
        witness,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Rounds to the 12 significant digits used in CSV output.
fn r12(v: f64) -> Value {
    if v.is_finite() {
        json!(fmt_num(v).parse::<f64>().unwrap_or(v))
    } else {
        json!(fmt_num(v))
    }
}

fn emit(c: &Common, command: &str, default: Format, csv: impl FnOnce() -> String, body: impl FnOnce() -> Value) -> Result<()> {
    let format = c.format.unwrap_or(default);
    let (text, ext) = match format {
        Format::Csv => (csv(), "csv"),
        Format::Json => (serde_json::to_string_pretty(&body()).expect("json") + "\n", "json"),
    };
    match &c.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{command}.{ext}"));
            std::fs::write(&path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn header(cfg: &ScenarioConfig) -> Value {
    json!({
        "config_sha256": cfg.hash(),
        "seed": cfg.seed,
        "config": serde_json::to_value(cfg).expect("config serializes"),
    })
}

fn with_header(cfg: &ScenarioConfig, body: Value) -> Value {
    let mut h = header(cfg);
    if let (Value::Object(h), Value::Object(b)) = (&mut h, body) {
        h.extend(b);
    }
    h
}

fn info_fields(r: &InfoReport) -> [f64; 5] {
    [r.i_x_z, r.i_y_z, r.i_x_z_given_y, r.i_y_z_given_x, r.i_xy_z]
}

fn cmd_info(c: &Common) -> Result<()> {
    let cfg = resolve("info", c)?;
    let profile = cfg.inputs.profile();
    let mut rows = Vec::new();
    for (name, w) in [("W", &cfg.channel.w), ("Wtilde", &cfg.channel.w_tilde)] {
        for u in 0..profile.atoms() {
            let q = JointDist3::product(&profile.p_x_given_u[u], &profile.p_y_given_u[u], w)?;
            rows.push((name, u, profile.p_u.get(u), info_quantities(&q)));
        }
    }
    emit(
        c,
        "info",
        Format::Json,
        || {
            let mut csv = Csv::new(
                "info",
                &cfg.hash(),
                cfg.seed,
                &["channel", "atom", "weight", "i_x_z", "i_y_z", "i_x_z_given_y", "i_y_z_given_x", "i_xy_z"],
            );
            for (name, u, wt, r) in &rows {
                let mut f = vec![name.to_string(), u.to_string(), fmt_num(*wt)];
                f.extend(info_fields(r).iter().map(|&v| fmt_num(v)));
                csv.row(&f);
            }
            csv.finish()
        },
        || {
            let entries: Vec<Value> = rows
                .iter()
                .map(|(name, u, wt, r)| {
                    let v = info_fields(r);
                    json!({
                        "channel": name, "atom": u, "weight": r12(*wt),
                        "i_x_z": r12(v[0]), "i_y_z": r12(v[1]), "i_x_z_given_y": r12(v[2]),
                        "i_y_z_given_x": r12(v[3]), "i_xy_z": r12(v[4]),
                    })
                })
                .collect();
            with_header(&cfg, json!({ "info": entries }))
        },
    )
}

fn polygon_json(p: &RegionPolygon) -> Value {
    Value::Array(p.vertices().iter().map(|&(x, y)| json!([r12(x), r12(y)])).collect())
}

fn cmd_region(c: &Common) -> Result<()> {
    let cfg = resolve("region", c)?;
    let (w, wt) = (&cfg.channel.w, &cfg.channel.w_tilde);
    let mut named: Vec<(String, RegionPolygon)> = Vec::new();
    let mut witness = None;
    match &cfg.inputs {
        Inputs::Compositions { p_x, p_y } => {
            named.push(("R_x".into(), region_x(p_x, p_y, w)?));
            named.push(("R_y".into(), region_y(p_x, p_y, wt)?));
            named.push(("R_xy".into(), region_xy(p_x, p_y, w, wt)?));
        }
        Inputs::Profile(p) => {
            named.push(("R_x".into(), region_x_timeshare(p, w)?));
            named.push(("R_y".into(), region_y_timeshare(p, wt)?));
            named.push(("R_xy".into(), region_xy_timeshare(p, w, wt)?));
            let gap = profile_gap_search(p, w, wt, cfg.witness)?;
            for (u, r) in gap.atom_regions.iter().enumerate() {
                named.push((format!("R_xy_atom{u}"), r.clone()));
            }
            named.push(("hull".into(), gap.hull.clone()));
            witness = gap.witness.map(|r| (r, gap.hull.distance((r.r_x, r.r_y))));
        }
    }
    emit(
        c,
        "region",
        Format::Csv,
        || {
            let mut csv = Csv::new("region", &cfg.hash(), cfg.seed, &["region", "vertex", "r_x", "r_y"]);
            if matches!(cfg.inputs, Inputs::Profile(_)) {
                csv.comment(&format!(
                    "witness_resolution={} min_gap={}",
                    fmt_num(cfg.witness.resolution),
                    fmt_num(cfg.witness.min_gap)
                ));
            }
            for (name, poly) in &named {
                for (i, &(x, y)) in poly.vertices().iter().enumerate() {
                    csv.row(&[name.clone(), i.to_string(), fmt_num(x), fmt_num(y)]);
                }
            }
            if let Some((r, _)) = witness {
                csv.row(&["witness".into(), "0".into(), fmt_num(r.r_x), fmt_num(r.r_y)]);
            }
            csv.finish()
        },
        || {
            let regions: serde_json::Map<String, Value> = named.iter().map(|(n, p)| (n.clone(), polygon_json(p))).collect();
            let wit = witness.map(|(r, d)| json!({ "r_x": r12(r.r_x), "r_y": r12(r.r_y), "hull_distance": r12(d) }));
            with_header(&cfg, json!({ "regions": regions, "witness": wit }))
        },
    )
}

fn require_seed(cfg: &ScenarioConfig, why: &str) -> Result<u64> {
    cfg.seed.ok_or_else(|| Error::arg(format!("{why} requires an explicit --seed")))
}

fn cmd_exponent(c: &Common) -> Result<()> {
    let cfg = resolve("exponent", c)?;
    if cfg.exponent.method != Method::Grid {
        require_seed(&cfg, "randomized descent")?;
    }
    if cfg.rates.is_empty() {
        return Err(Error::arg("exponent needs rates (--rx/--ry, --rate-grid or a scenario)"));
    }
    let w = &cfg.channel.w;
    let profile = cfg.inputs.profile();
    let region = match &cfg.inputs {
        Inputs::Compositions { p_x, p_y } => region_x(p_x, p_y, w)?,
        Inputs::Profile(p) => region_x_timeshare(p, w)?,
    };
    let reports = cfg
        .rates
        .par_iter()
        .map(|&r| match &cfg.inputs {
            Inputs::Compositions { p_x, p_y } => exponent_suite(p_x, p_y, w, r, &cfg.exponent),
            Inputs::Profile(_) => timeshared_exponent_suite(&profile, w, r, &cfg.exponent),
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<(RatePair, [f64; 6], bool)> = cfg
        .rates
        .iter()
        .zip(&reports)
        .map(|(&r, e)| {
            let inside = region.contains(r, Membership::Strict);
            (r, [e.e_xy, e.e_x_given_y, e.e_y_given_x, e.e_x, e.mac(), e.achievable()], inside)
        })
        .collect();
    let cols = ["e_xy", "e_x_given_y", "e_y_given_x", "e_x", "mac", "achievable"];
    emit(
        c,
        "exponent",
        Format::Csv,
        || {
            let mut header = vec!["r_x", "r_y"];
            header.extend(cols);
            header.push("in_region_x");
            let mut csv = Csv::new("exponent", &cfg.hash(), cfg.seed, &header);
            csv.comment(&format!(
                "method={} grid_resolution={}",
                serde_json::to_value(cfg.exponent.method).expect("method").as_str().unwrap_or("?"),
                fmt_num(cfg.exponent.grid_resolution)
            ));
            for (r, v, inside) in &rows {
                let mut f = vec![fmt_num(r.r_x), fmt_num(r.r_y)];
                f.extend(v.iter().map(|&x| fmt_num(x)));
                f.push((*inside as u8).to_string());
                csv.row(&f);
            }
            csv.finish()
        },
        || {
            let entries: Vec<Value> = rows
                .iter()
                .map(|(r, v, inside)| {
                    let mut m = serde_json::Map::new();
                    m.insert("r_x".into(), r12(r.r_x));
                    m.insert("r_y".into(), r12(r.r_y));
                    for (k, &x) in cols.iter().zip(v) {
                        m.insert(k.to_string(), r12(x));
                    }
                    m.insert("in_region_x".into(), json!(inside));
                    Value::Object(m)
                })
                .collect();
            with_header(&cfg, json!({ "exponents": entries }))
        },
    )
}

/// One output row of the simulate command.
struct SimRow {
    kind: &'static str,
    n: usize,
    rates: RatePair,
    result: Option<SimResult>,
    exact: Option<(f64, f64)>,
    messages: (u64, u64),
}

fn cmd_simulate(c: &Common) -> Result<()> {
    let cfg = resolve("simulate", c)?;
    let seed = require_seed(&cfg, "simulate")?;
    let Inputs::Compositions { p_x, p_y } = &cfg.inputs else {
        return Err(Error::arg("simulate takes single compositions, not a time-sharing profile"));
    };
    if cfg.rates.is_empty() || cfg.n_list.is_empty() {
        return Err(Error::arg("simulate needs rates and --n-list"));
    }
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        for &rates in &cfg.rates {
            let r = estimate_error(&SimConfig {
                n,
                rates,
                p_x: p_x.clone(),
                p_y: p_y.clone(),
                w: cfg.channel.w.clone(),
                w_tilde: cfg.channel.w_tilde.clone(),
                decoder: cfg.decoder,
                trials: cfg.trials,
                seed,
                single_y_message: cfg.converse_mode,
            })?;
            rows.push(SimRow { kind: "ensemble", n, rates, messages: (r.messages_x, r.messages_y), result: Some(r), exact: None });
        }
    }
    if cfg.exact_check {
        let nz = cfg.channel.w.nz() as u128;
        let small = cfg.n_list.iter().copied().filter(|&n| nz.checked_pow(n as u32).is_some_and(|v| v <= MAX_OUTPUTS)).min();
        let n = small.ok_or_else(|| Error::arg("--exact-check needs a block length with |Z|^n <= 2^20"))?;
        for &rates in &cfg.rates {
            // stream u64::MAX is never used by a trial
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u64::MAX);
            let ry = if cfg.converse_mode { 0.0 } else { rates.r_y };
            let cx = sample_codebook(n, rates.r_x, &quantize_composition(p_x, n as u64)?, &mut rng)?;
            let cy = sample_codebook(n, ry, &quantize_composition(p_y, n as u64)?, &mut rng)?;
            let exact = exact_error_given_codebook(&cx, &cy, &cfg.channel.w, cfg.decoder)?;
            let mc = estimate_error_given_codebook(&cx, &cy, &cfg.channel.w, &cfg.channel.w_tilde, cfg.decoder, cfg.trials, seed)?;
            let messages = (cx.len() as u64, cy.len() as u64);
            rows.push(SimRow { kind: "codebook_exact", n, rates, result: None, exact: Some((exact.x, exact.joint)), messages });
            rows.push(SimRow { kind: "codebook_mc", n, rates, result: Some(mc), exact: None, messages });
        }
    }
    let cols = [
        "row", "n", "r_x", "r_y", "messages_x", "messages_y", "trials", "errors_x", "p_x", "p_x_lo", "p_x_hi", "errors_y", "p_y",
        "p_y_lo", "p_y_hi", "errors_joint", "p_joint", "p_joint_lo", "p_joint_hi", "ties",
    ];
    emit(
        c,
        "simulate",
        Format::Csv,
        || {
            let mut csv = Csv::new("simulate", &cfg.hash(), cfg.seed, &cols);
            csv.comment(&format!(
                "decoder={} converse_mode={}",
                serde_json::to_value(cfg.decoder).expect("decoder").as_str().unwrap_or("?"),
                cfg.converse_mode
            ));
            for row in &rows {
                let mut f = vec![
                    row.kind.to_string(),
                    row.n.to_string(),
                    fmt_num(row.rates.r_x),
                    fmt_num(row.rates.r_y),
                    row.messages.0.to_string(),
                    row.messages.1.to_string(),
                ];
                match (&row.result, row.exact) {
                    (Some(r), _) => {
                        f.push(r.trials.to_string());
                        for (k, iv) in [(r.errors_x, r.p_x), (r.errors_y, r.p_y), (r.errors_joint, r.p_joint)] {
                            f.extend([k.to_string(), fmt_num(iv.p_hat), fmt_num(iv.lo), fmt_num(iv.hi)]);
                        }
                        f.push(r.ties_declared.to_string());
                    }
                    (None, Some((ex, ej))) => {
                        f.push(String::new());
                        f.extend([String::new(), fmt_num(ex), fmt_num(ex), fmt_num(ex)]);
                        f.extend(std::iter::repeat_n(String::new(), 4));
                        f.extend([String::new(), fmt_num(ej), fmt_num(ej), fmt_num(ej)]);
                        f.push(String::new());
                    }
                    (None, None) => unreachable!("every row carries a result"),
                }
                csv.row(&f);
            }
            csv.finish()
        },
        || {
            let entries: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let mut v = json!({
                        "row": row.kind, "n": row.n, "r_x": r12(row.rates.r_x), "r_y": r12(row.rates.r_y),
                        "messages_x": row.messages.0, "messages_y": row.messages.1,
                    });
                    let m = v.as_object_mut().expect("object");
                    if let Some(r) = &row.result {
                        m.insert("trials".into(), json!(r.trials));
                        m.insert("ties".into(), json!(r.ties_declared));
                        for (name, k, iv) in [("x", r.errors_x, r.p_x), ("y", r.errors_y, r.p_y), ("joint", r.errors_joint, r.p_joint)] {
                            m.insert(format!("errors_{name}"), json!(k));
                            m.insert(format!("p_{name}"), json!({ "p_hat": r12(iv.p_hat), "lo": r12(iv.lo), "hi": r12(iv.hi) }));
                        }
                    }
                    if let Some((ex, ej)) = row.exact {
                        m.insert("exact_x".into(), r12(ex));
                        m.insert("exact_joint".into(), r12(ej));
                    }
                    v
                })
                .collect();
            with_header(&cfg, json!({ "simulations": entries }))
        },
    )
}

/// Resolves a scenario file as the given command would; used by `verify`.
fn resolve_scenario(path: &Path, command: &str) -> Result<ScenarioConfig> {
    resolve(command, &Common { config: Some(path.to_path_buf()), ..Common::default() })
}

/// Gap search of a scenario, for reproducibility checks.
fn scenario_witness(cfg: &ScenarioConfig) -> Result<Option<RatePair>> {
    match &cfg.inputs {
        Inputs::Profile(p) => Ok(profile_gap_search(p, &cfg.channel.w, &cfg.channel.w_tilde, cfg.witness)?.witness),
        Inputs::Compositions { .. } => Ok(None),
    }
}

//! Invariant suite behind `fcic verify`: randomized identity checks on the
//! library plus validation of every shipped scenario and channel file.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{resolve_scenario, scenario_witness};
use crate::exponents::{exponent_suite, ExponentConfig, ExponentKind, Method, RatePair};
use crate::io::ChannelPair;
use crate::prob::{conditional_kl, entropy, info_quantities, kl_divergence, ChannelKernel, FiniteDist, JointDist3};
use crate::regions::{region_x, timeshare_bounds, Membership, RegionBounds};
use crate::simulator::{
    estimate_error, estimate_error_given_codebook, exact_error_given_codebook, sample_codebook, wilson, DecoderKind,
    SimConfig,
};
use crate::types::{empirical_type, log2_type_class_size, quantize_composition, sample_from_type_class};
use crate::exponents::TimeShareProfile;
use crate::Result;

type Check = std::result::Result<String, String>;

fn kl_split(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..500 {
        let (nx, ny, nz) = (rng.gen_range(1..4), rng.gen_range(1..4), rng.gen_range(2..4));
        let q = JointDist3::random(nx, ny, nz, rng);
        let w = ChannelKernel::random(nx, ny, nz, rng);
        let p_x = FiniteDist::random(nx, rng);
        let p_y = FiniteDist::random(ny, rng);
        let full = kl_divergence(&q.flatten(), &JointDist3::product(&p_x, &p_y, &w).map_err(|e| e.to_string())?.flatten())
            .map_err(|e| e.to_string())?;
        let qxy = FiniteDist::new(q.q_xy()).map_err(|e| e.to_string())?;
        let split = conditional_kl(&q, &w).map_err(|e| e.to_string())?
            + kl_divergence(&qxy, &p_x.product(&p_y)).map_err(|e| e.to_string())?;
        if (full - split).abs() > 1e-10 {
            return Err(format!("split {split} vs joint {full}"));
        }
    }
    Ok("500 instances".into())
}

fn chain_rule(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..500 {
        let q = JointDist3::random(rng.gen_range(1..4), rng.gen_range(1..4), rng.gen_range(1..4), rng);
        let i = info_quantities(&q);
        let gap = (i.i_xy_z - i.i_x_z - i.i_y_z_given_x).abs().max((i.i_xy_z - i.i_y_z - i.i_x_z_given_y).abs());
        if gap > 1e-10 {
            return Err(format!("chain rule off by {gap}"));
        }
    }
    Ok("500 instances".into())
}

fn type_machinery(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..200 {
        let k = rng.gen_range(1..5);
        let n = rng.gen_range(1..60u64);
        let c = quantize_composition(&FiniteDist::random(k, rng), n).map_err(|e| e.to_string())?;
        let s = sample_from_type_class(&c, rng);
        if empirical_type(&s).map_err(|e| e.to_string())? != c {
            return Err("sample left its type class".into());
        }
        let h = entropy(&c.to_dist());
        let size = log2_type_class_size(&c);
        let lower = n as f64 * h - k as f64 * ((n + 1) as f64).log2();
        if size > n as f64 * h + 1e-9 || size < lower - 1e-9 {
            return Err(format!("type class size {size} outside [{lower}, {}]", n as f64 * h));
        }
    }
    Ok("200 compositions".into())
}

fn region_membership(rng: &mut ChaCha8Rng) -> Check {
    let mut disagreements = 0;
    for _ in 0..20 {
        let w = ChannelKernel::random(2, 2, 2, rng);
        let (p_x, p_y) = (FiniteDist::random(2, rng), FiniteDist::random(2, rng));
        let poly = region_x(&p_x, &p_y, &w).map_err(|e| e.to_string())?;
        let bounds = timeshare_bounds(&TimeShareProfile::single(p_x, p_y), &w).map_err(|e| e.to_string())?;
        for _ in 0..500 {
            let r = RatePair { r_x: rng.gen_range(0.0..1.2), r_y: rng.gen_range(0.0..1.2) };
            if poly.contains(r, Membership::Strict) != bounds.contains(r) && bounds.margin(r).abs() > 1e-9 {
                disagreements += 1;
            }
        }
    }
    if disagreements > 0 {
        return Err(format!("{disagreements} points disagree away from the boundary"));
    }
    Ok("10000 points".into())
}

fn exponent_signs(rng: &mut ChaCha8Rng) -> Check {
    let cfg = ExponentConfig { method: Method::Descent, restarts: 4, ..ExponentConfig::default() };
    for _ in 0..3 {
        let w = ChannelKernel::random(2, 2, 2, rng);
        let (p_x, p_y) = (FiniteDist::random(2, rng), FiniteDist::random(2, rng));
        let i = info_quantities(&JointDist3::product(&p_x, &p_y, &w).map_err(|e| e.to_string())?);
        let b = RegionBounds::from_info(&i);
        let beyond = RatePair { r_x: i.i_x_z + 0.05, r_y: 0.0 };
        let e = exponent_suite(&p_x, &p_y, &w, beyond, &cfg).map_err(|e| e.to_string())?;
        if e.get(ExponentKind::XOnly) != 0.0 {
            return Err(format!("e_x = {} beyond I(X;Z)", e.e_x));
        }
        let inside = RatePair { r_x: 0.5 * b.a.max(b.b.min(b.c)), r_y: 0.0 };
        if b.margin(inside) > 0.01 {
            let e = exponent_suite(&p_x, &p_y, &w, inside, &cfg).map_err(|e| e.to_string())?;
            if !(e.achievable() > 0.0) {
                return Err(format!("zero exponent at margin {}", b.margin(inside)));
            }
        }
    }
    Ok("3 channels".into())
}

fn simulator_checks() -> Check {
    let w = ChannelKernel::from_fn(2, 2, 2, |x, y, z| if z == x ^ y { 0.85 } else { 0.15 }).map_err(|e| e.to_string())?;
    let u = FiniteDist::uniform(2).map_err(|e| e.to_string())?;
    let cfg = SimConfig {
        n: 12,
        rates: RatePair { r_x: 0.17, r_y: 0.09 },
        p_x: u.clone(),
        p_y: u,
        w: w.clone(),
        w_tilde: w.clone(),
        decoder: DecoderKind::Joint,
        trials: 4000,
        seed: 3,
        single_y_message: false,
    };
    let a = estimate_error(&cfg).map_err(|e| e.to_string())?;
    let b = estimate_error(&cfg).map_err(|e| e.to_string())?;
    if a != b {
        return Err("identical seeds gave different results".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let comp = quantize_composition(&cfg.p_x, 12).map_err(|e| e.to_string())?;
    let cx = sample_codebook(12, 0.17, &comp, &mut rng).map_err(|e| e.to_string())?;
    let cy = sample_codebook(12, 0.09, &comp, &mut rng).map_err(|e| e.to_string())?;
    let exact = exact_error_given_codebook(&cx, &cy, &w, DecoderKind::Joint).map_err(|e| e.to_string())?;
    let mc = estimate_error_given_codebook(&cx, &cy, &w, &w, DecoderKind::Joint, 20_000, 5).map_err(|e| e.to_string())?;
    let iv = wilson(mc.errors_joint, mc.trials, 0.999);
    if !(iv.lo <= exact.joint && exact.joint <= iv.hi) {
        return Err(format!("exact {} outside Monte Carlo interval [{}, {}]", exact.joint, iv.lo, iv.hi));
    }
    Ok(format!("exact {:.4}, Monte Carlo {:.4}", exact.joint, iv.p_hat))
}

fn scenario(path: &Path) -> Check {
    let mut notes = Vec::new();
    for command in ["info", "region"] {
        resolve_scenario(path, command).map_err(|e| e.to_string())?;
    }
    let cfg = resolve_scenario(path, "region").map_err(|e| e.to_string())?;
    let first = scenario_witness(&cfg).map_err(|e| e.to_string())?;
    let again = scenario_witness(&cfg).map_err(|e| e.to_string())?;
    if first.map(|r| (r.r_x.to_bits(), r.r_y.to_bits())) != again.map(|r| (r.r_x.to_bits(), r.r_y.to_bits())) {
        return Err("gap witness is not reproducible".into());
    }
    if let Some(r) = first {
        notes.push(format!("witness ({}, {})", r.r_x, r.r_y));
    }
    notes.push(format!("hash {}", &cfg.hash()[..12]));
    Ok(notes.join(", "))
}

fn channel_file(path: &Path) -> Check {
    let c = ChannelPair::load(path).map_err(|e| e.to_string())?;
    Ok(format!("{:?} / {:?}", c.w.dims(), c.w_tilde.dims()))
}

fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if dir.is_dir() {
        for entry in std::fs::read_dir(dir)? {
            let p = entry?.path();
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if name.ends_with(".scenario.json") {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Runs every check, printing one line each; returns the process exit code.
pub(super) fn run(scenarios: &Path, channels: &[PathBuf]) -> i32 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut results: Vec<(String, Check)> = vec![
        ("kl split identity".into(), kl_split(&mut rng)),
        ("information chain rule".into(), chain_rule(&mut rng)),
        ("type classes".into(), type_machinery(&mut rng)),
        ("region membership".into(), region_membership(&mut rng)),
        ("exponent signs".into(), exponent_signs(&mut rng)),
        ("simulator".into(), simulator_checks()),
    ];
    match scenario_files(scenarios) {
        Ok(files) => {
            for f in files {
                results.push((format!("scenario {}", f.display()), scenario(&f)));
            }
        }
        Err(e) => results.push((format!("scenarios {}", scenarios.display()), Err(e.to_string()))),
    }
    for c in channels {
        results.push((format!("channel {}", c.display()), channel_file(c)));
    }
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(note) => println!("PASS {name}: {note}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} checks, {} failed", results.len(), failed);
    (failed > 0) as i32
}

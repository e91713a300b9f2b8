use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fcic::exponents::{minimize_exponent, ExponentConfig, ExponentKind, Method, RatePair};
use fcic::prob::FiniteDist;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fcic"))
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// Rows of a CSV body as string fields, comments and header dropped.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn channel_json(w: impl Fn(usize, usize) -> [f64; 2]) -> String {
    let row = |x: usize| format!("[{:?}, {:?}]", w(x, 0), w(x, 1));
    let t = format!("[{}, {}]", row(0), row(1));
    format!(r#"{{"X": 2, "Y": 2, "Z": 2, "Ztilde": 2, "W": {t}, "Wtilde": {t}}}"#)
}

fn info_row(out: &str, channel: &str) -> Vec<f64> {
    let r = rows(out).into_iter().find(|r| r[0] == channel).unwrap();
    r[3..].iter().map(|v| v.parse().unwrap()).collect()
}

#[test]
fn info_examples() {
    let dir = tempfile::tempdir().unwrap();
    let identity = write(dir.path(), "id.json", &channel_json(|x, _| if x == 0 { [1.0, 0.0] } else { [0.0, 1.0] }));
    let noise = write(dir.path(), "noise.json", &channel_json(|_, _| [0.5, 0.5]));
    let xor = scenarios().join("xor.channel.json");
    let base = ["info", "--comp-x", "0.5,0.5", "--comp-y", "0.5,0.5", "--format", "csv", "--channel"];
    // columns: I(X;Z), I(Y;Z), I(X;Z|Y), I(Y;Z|X), I(XY;Z)
    let o = run(&[&base[..], &[identity.as_str()]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(info_row(&stdout(&o), "W"), vec![1.0, 0.0, 1.0, 0.0, 1.0]);
    let o = run(&[&base[..], &[noise.as_str()]].concat());
    assert_eq!(info_row(&stdout(&o), "Wtilde"), vec![0.0; 5]);
    let o = run(&[&base[..], &[xor.to_str().unwrap()]].concat());
    assert_eq!(info_row(&stdout(&o), "W"), vec![0.0, 0.0, 1.0, 1.0, 1.0]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&run(&[
        "info",
        "--channel",
        xor.to_str().unwrap(),
        "--comp-x",
        "0.5,0.5",
        "--comp-y",
        "0.5,0.5",
    ])))
    .unwrap();
    assert_eq!(json["info"][0]["i_xy_z"], 1.0);
    assert!(json["config_sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn malformed_channel_reports_field_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", &channel_json(|_, _| [0.5, 0.4]));
    let o = run(&["info", "--channel", &bad, "--comp-x", "0.5,0.5", "--comp-y", "0.5,0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("W[0][0]"), "{}", stderr(&o));
    let broken = write(dir.path(), "broken.json", "{\"X\": 2,\n \"Y\": }");
    let o = run(&["info", "--channel", &broken, "--comp-x", "0.5,0.5", "--comp-y", "0.5,0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    let o = run(&["info", "--channel", &bad]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_atom_profile_matches_plain_region_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write(dir.path(), "p.json", r#"{"p_u": [1], "p_x_given_u": [[0.3, 0.7]], "p_y_given_u": [["0.6", "0.4"]]}"#);
    let ch = scenarios().join("gap.channel.json");
    let ch = ch.to_str().unwrap();
    let plain = run(&["region", "--channel", ch, "--comp-x", "0.3,0.7", "--comp-y", "0.6,0.4"]);
    let shared = run(&["region", "--channel", ch, "--profile", &profile]);
    assert!(plain.status.success() && shared.status.success());
    assert_eq!(plain.stdout, shared.stdout);
    assert!(!stdout(&plain).contains("hull"));
}

#[test]
fn xor_region_is_the_unit_triangle() {
    let o = run(&["region", "--config", scenarios().join("xor.scenario.json").to_str().unwrap()]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    for name in ["R_x", "R_y", "R_xy"] {
        let v: Vec<(String, String)> = r.iter().filter(|f| f[0] == name).map(|f| (f[2].clone(), f[3].clone())).collect();
        let expect: Vec<(String, String)> = [("0", "0"), ("1", "0"), ("0", "1")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        assert_eq!(v, expect, "{name}");
    }
}

#[test]
fn gap_scenario_emits_hull_and_witness_reproducibly() {
    let cfg = scenarios().join("gap.scenario.json");
    let a = run(&["region", "--config", cfg.to_str().unwrap()]);
    let b = run(&["region", "--config", cfg.to_str().unwrap()]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("\nhull,0,0,0\n"));
    let w: Vec<Vec<String>> = rows(&text).into_iter().filter(|r| r[0] == "witness").collect();
    assert_eq!(w.len(), 1);
    assert!(text.starts_with("# fcic region\n# config_sha256="));
    assert!(text.contains("# seed=none\n"));
}

#[test]
fn exponent_table_examples() {
    let ch = scenarios().join("gap.channel.json");
    let ch = ch.to_str().unwrap();
    let common = ["exponent", "--channel", ch, "--comp-x", "0.3,0.7", "--comp-y", "0.6,0.4", "--seed", "5", "--restarts", "4"];
    // beyond every corner: all exponents vanish
    let o = run(&[&common[..], &["--rx", "1.5", "--ry", "1.5"]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let r = &rows(&stdout(&o))[0];
    assert_eq!(&r[2..8], &["0", "0", "0", "0", "0", "0"]);
    assert_eq!(r[8], "0");
    // deep inside: positive
    let o = run(&[&common[..], &["--rx", "0.01", "--ry", "0.01"]].concat());
    let r = &rows(&stdout(&o))[0];
    assert_eq!(r[8], "1");
    assert!(r[7].parse::<f64>().unwrap() > 0.0);
    // against the library grid oracle
    let e_xy: f64 = r[2].parse().unwrap();
    let w = fcic::io::ChannelPair::load(Path::new(ch)).unwrap().w;
    let grid = minimize_exponent(
        ExponentKind::Xy,
        &FiniteDist::new(vec![0.3, 0.7]).unwrap(),
        &FiniteDist::new(vec![0.6, 0.4]).unwrap(),
        &w,
        RatePair::new(0.01, 0.01).unwrap(),
        &ExponentConfig { method: Method::Grid, ..ExponentConfig::default() },
    )
    .unwrap();
    assert!(e_xy <= grid.value + 1e-9 && e_xy >= grid.value - 0.05, "{e_xy} vs {}", grid.value);
}

#[test]
fn exponent_with_descent_requires_seed() {
    let ch = scenarios().join("gap.channel.json");
    let o = run(&["exponent", "--channel", ch.to_str().unwrap(), "--comp-x", "0.5,0.5", "--comp-y", "0.5,0.5", "--rx", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
}

fn simulate(extra: &[&str]) -> Output {
    let cfg = scenarios().join("achievability.scenario.json");
    run(&[&["simulate", "--config", cfg.to_str().unwrap()][..], extra].concat())
}

#[test]
fn simulate_is_deterministic_and_decreasing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let a = simulate(&["--trials", "4000", "--n-list", "10,30", "--out", out]);
    assert!(a.status.success(), "{}", stderr(&a));
    let text = std::fs::read_to_string(dir.path().join("simulate.csv")).unwrap();
    let b = simulate(&["--trials", "4000", "--n-list", "10,30"]);
    assert_eq!(text, stdout(&b));
    assert!(text.contains("# seed=1\n"));
    let r = rows(&text);
    let p: Vec<f64> = r.iter().map(|f| f[16].parse().unwrap()).collect();
    assert!(p[1] < p[0], "{p:?}");
}

#[test]
fn simulate_exact_check_rows_agree() {
    let o = simulate(&["--trials", "20000", "--n-list", "12", "--exact-check", "--rx", "0.17", "--ry", "0.09"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r.iter().map(|f| f[0].as_str()).collect::<Vec<_>>(), ["ensemble", "codebook_exact", "codebook_mc"]);
    let exact: f64 = r[1][16].parse().unwrap();
    let (lo, hi): (f64, f64) = (r[2][17].parse().unwrap(), r[2][18].parse().unwrap());
    let half = 0.5 * (hi - lo);
    let mc: f64 = r[2][16].parse().unwrap();
    assert!((mc - exact).abs() <= 3.0 * half, "{mc} vs {exact}");
}

#[test]
fn converse_mode_keeps_error_high() {
    let cfg = scenarios().join("converse.scenario.json");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--n-list", "30", "--trials", "300"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = &rows(&stdout(&o))[0];
    assert_eq!(r[5], "1");
    assert!(r[8].parse::<f64>().unwrap() >= 0.25, "{r:?}");
}

#[test]
fn simulate_guards_and_seed() {
    let ch = scenarios().join("bsc014.channel.json");
    let o = simulate(&["--rx", "2.0", "--n-list", "60"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = run(&["simulate", "--channel", ch.to_str().unwrap(), "--comp-x", "0.5,0.5", "--comp-y", "0.5,0.5", "--rx", "0.1", "--n-list", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
}

#[test]
fn verify_passes_on_shipped_scenarios_and_fails_on_corruption() {
    let o = run(&["verify", "--scenarios", scenarios().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
    let dir = tempfile::tempdir().unwrap();
    let good = std::fs::read_to_string(scenarios().join("gap.channel.json")).unwrap();
    let bad = write(dir.path(), "corrupt.json", &good.replacen("0.95", "0.75", 1));
    let o = run(&["verify", "--scenarios", scenarios().to_str().unwrap(), "--channel", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL channel"));
}

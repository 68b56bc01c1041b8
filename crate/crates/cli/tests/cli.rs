use std::fs;
use std::path::Path;
use std::process::Command;

use ergolab::bundle::{ReportBundle, VerdictValue};
use ergolab::config::ExperimentConfig;
use ergolab::output::write_outputs;
use ergolab::run::run_experiment;
use ergolab_core::cover::Boundedness;

const NAME_CONFIG: &str = r#"{
  "task": "name",
  "system": {"family": "doubling", "params": {}},
  "target": {"partition": {"kind": "circle_intervals", "cuts": [0.0, 0.5]}},
  "params": {"points": [0.375], "n": 4}
}"#;

const TRIVIAL_CONFIG: &str = r#"{
  "task": "complexity",
  "system": {"family": "rotation", "params": {"theta": 0.6180339887498949}},
  "target": {"partition": {"kind": "trivial"}},
  "params": {"eps": 0.1, "horizons": [4, 16, 64, 256], "samples": 300, "seed": 7}
}"#;

const SPECTRAL_CONFIG: &str = r#"{
  "task": "spectral",
  "system": {"family": "rotation", "params": {"theta": 0.6180339887498949}},
  "target": {"observable": {"kind": "character", "k": 1}},
  "params": {"horizons": [16, 32, 64], "radius": 0.5, "samples": 1000, "seed": 3,
             "lambda": [-0.7373688780783197, -0.6754902942615238], "dump_matrix": true}
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ergolab"))
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

#[test]
fn name_task_writes_the_orbit_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(NAME_CONFIG);
    let bundle = run_experiment(&cfg).unwrap();
    write_outputs(&bundle, &cfg, dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("names.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], format!("# ergolab v{} config={}", env!("CARGO_PKG_VERSION"), cfg.hash()));
    assert_eq!(lines[1], "s0,s1,s2,s3");
    assert_eq!(lines[2], "0,1,1,0");
}

#[test]
fn trivial_partition_curve_is_constant_one() {
    let bundle = run_experiment(&config(TRIVIAL_CONFIG)).unwrap();
    let curve = &bundle.curves[0];
    assert!(curve.curve.points.iter().all(|p| p.k_est == 1 && !p.budget_hit));
    assert_eq!(curve.boundedness, Boundedness::Bounded);
    assert!(bundle.is_traceable());
}

#[test]
fn curve_csv_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(TRIVIAL_CONFIG);
    let bundle = run_experiment(&cfg).unwrap();
    write_outputs(&bundle, &cfg, dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[1], "n,K_est,K_lo,K_hi,eps,samples,seed,budget_hit");
    assert_eq!(lines[2], "4,1,1,1,0.1,300,7,0");
    assert_eq!(lines.len(), 6);
    let svg = fs::read_to_string(dir.path().join("curve.svg")).unwrap();
    assert!(svg.starts_with(&format!("<!-- {} -->", lines[0])));
    assert_eq!(svg.matches("class=\"marker\"").count(), 4);
}

#[test]
fn bundle_json_round_trips() {
    let bundle = run_experiment(&config(SPECTRAL_CONFIG)).unwrap();
    let text = serde_json::to_string_pretty(&bundle).unwrap();
    let back: ReportBundle = serde_json::from_str(&text).unwrap();
    assert_eq!(back, bundle);
    assert!(bundle.geometries[0].eigen_residual.unwrap() <= 1e-10);
    assert_eq!(
        bundle.verdicts[0].value,
        VerdictValue::AlmostPeriodicity(ergolab_core::spectral::AlmostPeriodicity::Ap)
    );
}

#[test]
fn every_output_file_carries_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(SPECTRAL_CONFIG);
    let bundle = run_experiment(&cfg).unwrap();
    let written = write_outputs(&bundle, &cfg, dir.path()).unwrap();
    assert!(written.iter().any(|p| p.ends_with("orbit_distances.csv")));
    for path in written {
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains(&cfg.hash()), "{}", path.display());
    }
}

fn run_bin(args: &[&str], dir: &Path) -> std::process::Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

#[test]
fn binary_runs_a_config_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), NAME_CONFIG).unwrap();
    let out = run_bin(&["name", "--config", "c.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("o/names.csv").exists());
    assert!(dir.path().join("o/report.json").exists());
}

#[test]
fn invalid_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"task": "complexity", "bogus": 1}"#).unwrap();
    let out = run_bin(&["complexity", "--config", "bad.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    fs::write(dir.path().join("eps.json"), TRIVIAL_CONFIG.replace("0.1", "1.5")).unwrap();
    let out = run_bin(&["complexity", "--config", "eps.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mismatched_subcommand_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), NAME_CONFIG).unwrap();
    let out = run_bin(&["spectral", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("systems").env("ERGOLAB_THREADS", "zero").current_dir(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exhausted_time_budget_exits_three_with_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"task": "dichotomy-report", "params": {"eps": 0.1, "samples": 300, "seed": 1, "time_budget_secs": 1e-9}}"#;
    fs::write(dir.path().join("r.json"), cfg).unwrap();
    let out = run_bin(&["report", "--config", "r.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let bundle: ReportBundle = serde_json::from_str(&fs::read_to_string(dir.path().join("o/report.json")).unwrap()).unwrap();
    assert!(bundle.budget_exceeded);
}

#[test]
fn systems_lists_the_catalog() {
    let out = bin().arg("systems").env("ERGOLAB_THREADS", "1").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 5);
    assert!(text.contains("\"family\":\"rotation\""));
}

#[test]
fn seed_flag_changes_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), NAME_CONFIG).unwrap();
    run_bin(&["name", "--config", "c.json", "--out", "a", "--seed", "1"], dir.path());
    run_bin(&["name", "--config", "c.json", "--out", "b", "--seed", "2"], dir.path());
    let a = fs::read_to_string(dir.path().join("a/names.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("b/names.csv")).unwrap();
    assert_ne!(a.lines().next(), b.lines().next());
    assert_eq!(a.lines().nth(2), b.lines().nth(2));
}

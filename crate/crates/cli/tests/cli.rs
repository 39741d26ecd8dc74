use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{
    "n_f": 200, "n_h": 100, "n_cal": 100, "m_ratio": 200, "n_eval": 100,
    "mean_model": {"kind": "ridge", "lambda": 0.001},
    "quantile_model": {"kind": "linear", "epochs": 300},
    "ratio": "trivial",
    "n_mc": 5
}"#;

fn oodro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oodro")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, scenario: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(SMALL).unwrap();
    v["scenario"] = serde_json::from_str(scenario).unwrap();
    let path = dir.join("cfg.json");
    std::fs::write(&path, v.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn toy_run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kind": "toy"}"#);
    let out = dir.path().join("toy.csv");
    let o = oodro(&["toy", "--config", &cfg, "--shift", "1", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("seed,scenario,ratio_kind,alpha"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("3,toy,trivial,0.8"), "{row}");
}

#[test]
fn report_goes_to_stdout_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kind": "simple", "d": 2}"#);
    let o = oodro(&["simple", "--config", &cfg, "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"][0]["d"], 2);
    assert!(v["medians"].is_array());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kind": "simple", "d": 2}"#);
    let o = oodro(&["simple", "--config", &cfg, "--d", "3", "--alpha", "0.7", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"][0]["d"], 3);
    assert_eq!(v["rows"][0]["alpha"], 0.7);
}

#[test]
fn bad_alpha_is_a_config_error() {
    let o = oodro(&["toy", "--alpha", "1.5"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn inapplicable_flags_are_rejected() {
    assert_eq!(code(&oodro(&["simple", "--shift-kind", "label"])), 1);
    assert_eq!(code(&oodro(&["toy", "--d", "4"])), 1);
    assert_eq!(code(&oodro(&["knapsack", "--ratio", "oracle"])), 1);
}

#[test]
fn unknown_flag_and_help() {
    assert_eq!(code(&oodro(&["toy", "--bogus"])), 1);
    assert_eq!(code(&oodro(&["--help"])), 0);
}

#[test]
fn malformed_or_mismatched_config() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"alpha": 0.8, "unknown_field": 1}"#).unwrap();
    assert_eq!(code(&oodro(&["toy", "--config", bad.to_str().unwrap()])), 1);
    let cfg = write_config(dir.path(), r#"{"kind": "knapsack"}"#);
    assert_eq!(code(&oodro(&["toy", "--config", &cfg])), 1);
    assert_eq!(code(&oodro(&["toy", "--config", "/nonexistent/cfg.json"])), 1);
}

#[test]
fn unwritable_output_is_a_run_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kind": "toy"}"#);
    let out = dir.path().join("missing").join("out.csv");
    let o = oodro(&["toy", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn selftest_passes() {
    let o = oodro(&["selftest"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(!stdout.contains("FAIL"));
    assert!(stdout.lines().count() >= 3);
}

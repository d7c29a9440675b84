use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_periodlab");
const TESTBED: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/testbed.json");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn analyze_reports_critical_values() {
    let out = run(&["analyze", TESTBED]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], "periodlab/1");
    assert_eq!(v["critical"]["n"], 2);
    assert_eq!(v["critical"]["enclosing_disc"]["radius"], 6.0);
}

#[test]
fn output_is_deterministic() {
    let a = run(&["--seed", "7", "normalize", TESTBED]);
    let b = run(&["--seed", "7", "normalize", TESTBED]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn normalized_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("normalized.json");
    let out = run(&["--out", path.to_str().unwrap(), "normalize", TESTBED]);
    assert_eq!(out.status.code(), Some(0));
    let again = run(&["analyze", path.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0), "{}", String::from_utf8_lossy(&again.stderr));
    let v = json(&again);
    assert!((v["critical"]["c_prime"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn malformed_json_is_located() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n \"schema\": \"periodlab/1\",,").unwrap();
    let out = run(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("periodlab: error: malformed JSON at line 2"), "{err}");
}

#[test]
fn invalid_arguments_exit_with_two() {
    assert_eq!(run(&["bounds", "--n", "1", "--cprime", "1", "--cdoubleprime", "1"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "/nonexistent/input.json"]).status.code(), Some(2));
    assert!(!Path::new("/nonexistent/input.json").exists());
}

#[test]
fn bounds_table_values() {
    let out = run(&["bounds", "--n", "2", "--cprime", "1", "--cdoubleprime", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r0 = json(&out)["entries"]["r0"]["log10"].as_f64().unwrap();
    assert!((r0 - 520.0 * 2f64.log10()).abs() < 1e-9);
}

#[test]
fn verify_formula_passes_on_testbed() {
    let out = run(&["--mode", "normalized", "verify-formula", TESTBED]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert!(v["max_rel_err"].as_f64().unwrap() < 1e-4);
}

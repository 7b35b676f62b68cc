use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn e1lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_e1lab"))
        .args(args)
        .env_remove("E1LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn scenario(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn results(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("results.json")).unwrap()).unwrap()
}

const CONSTANTS: &str = r#"{"n": 32, "form": {"kind": "uniform"},
    "potentials": {"u": {"kind": "constant", "value": 0}, "v": {"kind": "constant", "value": -1}}}"#;

#[test]
fn dist_of_constants() {
    let tmp = TempDir::new().unwrap();
    let s = scenario(tmp.path(), CONSTANTS);
    let out = tmp.path().join("out");
    let run = e1lab(&["dist", "--scenario", &s, "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let r = results(&out);
    assert_eq!(r["outputs"]["d1"].as_f64(), Some(1.0));
    assert_eq!(r["outputs"]["i1"].as_f64(), Some(2.0));
    assert_eq!(r["outputs"]["bound"]["lower"].as_f64(), Some(2.0 / 24.0));
    assert_eq!(r["pass"], Value::Bool(true));
    let csv = fs::read_to_string(out.join("dist.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,u,v,rooftop"));
    assert_eq!(csv.lines().count(), 33);
}

#[test]
fn every_claim_names_its_tolerance() {
    let tmp = TempDir::new().unwrap();
    let s = scenario(tmp.path(), CONSTANTS);
    let out = tmp.path().join("out");
    e1lab(&["dist", "--scenario", &s, "--out", out.to_str().unwrap()]);
    let r = results(&out);
    let claims = r["claims"].as_array().unwrap();
    assert!(!claims.is_empty());
    assert!(claims
        .iter()
        .all(|c| c["tolerance"].is_number() && c["name"].is_string()));
}

#[test]
fn floats_have_seventeen_digits() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    e1lab(&["venv", "--n", "16", "--out", out.to_str().unwrap()]);
    let text = fs::read_to_string(out.join("results.json")).unwrap();
    let r: Value = serde_json::from_str(&text).unwrap();
    let renorm = r["outputs"]["renormalization"].as_f64().unwrap();
    assert!(text.contains(&format!("\"renormalization\": {renorm:.16e}")));
    let csv = fs::read_to_string(out.join("venv.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().starts_with("6.2500000000000000e-2,"));
}

#[test]
fn schema_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    let bad = scenario(tmp.path(), r#"{"n": 32, "colour": "red"}"#);
    assert_eq!(
        e1lab(&["energy", "--scenario", &bad, "--out", out]).status.code(),
        Some(2)
    );
    let missing = tmp.path().join("nope.json");
    assert_eq!(
        e1lab(&["energy", "--scenario", missing.to_str().unwrap(), "--out", out])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(e1lab(&["dist", "--n", "4", "--out", out]).status.code(), Some(2));
    let unmarked = scenario(
        tmp.path(),
        r#"{"potentials": {"u": {"kind": "green", "node": 3, "mass": 0.5}}}"#,
    );
    assert_eq!(
        e1lab(&["energy", "--scenario", &unmarked, "--out", out]).status.code(),
        Some(2)
    );
    let threads = Command::new(env!("CARGO_BIN_EXE_e1lab"))
        .args(["venv", "--out", out])
        .env("E1LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn failed_claims_exit_1() {
    let tmp = TempDir::new().unwrap();
    let s = scenario(
        tmp.path(),
        r#"{"n": 32, "form": {"kind": "uniform"}, "tolerances": {"bound": -1.5},
            "potentials": {"u": {"kind": "constant", "value": 0}, "v": {"kind": "constant", "value": -1}}}"#,
    );
    let out = tmp.path().join("out");
    let run = e1lab(&["dist", "--scenario", &s, "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    assert_eq!(results(&out)["pass"], Value::Bool(false));
}

#[test]
fn ray_writes_slices_within_budget() {
    let tmp = TempDir::new().unwrap();
    let s = scenario(tmp.path(), r#"{"n": 64, "marked": [16], "ray": {"m": 41, "n_t": 16}}"#);
    let out = tmp.path().join("out");
    let run = e1lab(&["ray", "--scenario", &s, "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stdout));
    let r = results(&out);
    let rt = &r["outputs"]["round_trip"];
    assert!(rt["hat_check"].as_f64().unwrap() <= rt["budget"].as_f64().unwrap() + 1e-9);
    let header = fs::read_to_string(out.join("ray_slices.csv")).unwrap();
    assert!(header.starts_with("x,t0,t1,"));
    assert!(out.join("ray_t.csv").exists());
}

#[test]
fn check_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let digest = |name: &str| {
        let out = tmp.path().join(name);
        let run = e1lab(&[
            "check",
            "--seed",
            "7",
            "--check-level",
            "fast",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(run.status.code().is_some_and(|c| c == 0 || c == 1));
        let stdout = String::from_utf8(run.stdout).unwrap();
        assert_eq!(
            stdout
                .lines()
                .filter(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]"))
                .count(),
            12
        );
        results(&out)["digest"].as_str().unwrap().to_string()
    };
    assert_eq!(digest("a"), digest("b"));
}

#[test]
fn seed_override_changes_the_record() {
    let tmp = TempDir::new().unwrap();
    let s = scenario(
        tmp.path(),
        r#"{"n": 32, "potentials": {"u": {"kind": "random", "seed": 1}, "v": {"kind": "random", "seed": 2}}}"#,
    );
    let run = |seed: &str, name: &str| {
        let out = tmp.path().join(name);
        e1lab(&["dist", "--scenario", &s, "--seed", seed, "--out", out.to_str().unwrap()]);
        results(&out)["digest"].as_str().unwrap().to_string()
    };
    assert_ne!(run("1", "a"), run("2", "b"));
    assert_eq!(run("1", "a"), run("1", "c"));
}

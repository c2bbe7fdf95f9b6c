//! The `nehari` binary: exit codes and output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn nehari(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_nehari"))
        .args(args)
        .output()
        .expect("spawn nehari")
        .status
        .code()
        .unwrap_or(-1)
}

fn config_file(dir: &TempDir, text: &str) -> String {
    let path = dir.path().join("config.json");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn shipped(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn params(p: f64, q: f64, s1: f64, s2: f64) -> String {
    format!(
        r#"{{"params": {{"N": 3, "lambda": 1.0, "s1": {s1:?}, "s2": {s2:?}, "p": {p:?}, "q": {q:?}}},
            "grid": {{"n": 256, "radius": 20.0, "gamma": 2.0}}"#
    )
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(nehari(&["validate", "--config", &shipped("desk.json")]), 0);
    let equal_weights = config_file(&dir, &(params(5.0, 3.8, 1.0, 1.0) + "}"));
    assert_eq!(nehari(&["validate", "--config", &equal_weights]), 2);
    let missing = dir.path().join("absent.json");
    assert_eq!(
        nehari(&["validate", "--config", missing.to_str().unwrap()]),
        2
    );
    let unknown = config_file(&dir, &(params(5.0, 3.8, 0.0, 1.0) + r#", "tolerance": 1}"#));
    assert_eq!(nehari(&["validate", "--config", &unknown]), 2);
}

#[test]
fn fiber_roots_of_quadratic_fiber() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let code = nehari(&[
        "fiber",
        "--config",
        &shipped("fiber_quadratic.json"),
        "--out",
        out.to_str().unwrap(),
        "--coeffs",
        "0.5,0.5,1,3",
    ]);
    assert_eq!(code, 0);
    // g(t) = 1 + t^2 - 3t
    let doc = json(&out.join("fiber.json"));
    let sqrt5 = 5f64.sqrt();
    assert!((doc["t0"].as_f64().unwrap() - (3.0 - sqrt5) / 2.0).abs() <= 1e-12);
    assert!((doc["t1"].as_f64().unwrap() - (3.0 + sqrt5) / 2.0).abs() <= 1e-12);
    assert!(doc["psi_t0"].as_f64().unwrap() < 0.0);
    let csv = fs::read_to_string(out.join("fiber.csv")).unwrap();
    assert!(csv.starts_with("t,g\n"));
    assert_eq!(csv.lines().count(), 401);
}

#[test]
fn fiber_without_negative_direction() {
    let dir = TempDir::new().unwrap();
    let code = nehari(&[
        "fiber",
        "--config",
        &shipped("fiber_quadratic.json"),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "--coeffs",
        "0.5,0.5,1,1",
    ]);
    assert_eq!(code, 4);
}

#[test]
fn m0_requires_the_exponent_condition() {
    let dir = TempDir::new().unwrap();
    // q < p/2 + 1 with s1 = 0, s2 = 1
    let cfg = config_file(&dir, &(params(5.0, 3.0, 0.0, 1.0) + "}"));
    let out = dir.path().join("out");
    assert_eq!(
        nehari(&["m0", "--config", &cfg, "--out", out.to_str().unwrap()]),
        2
    );

    let out = dir.path().join("ok");
    let code = nehari(&[
        "m0",
        "--config",
        &shipped("desk.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(
        json(&out.join("m0.json"))["perturbation_sign"]
            .as_f64()
            .unwrap()
            > 0.0
    );
}

#[test]
fn solve_headline_config() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let code = nehari(&[
        "solve",
        "--config",
        &shipped("desk.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let doc = json(&out.join("report.json"));
    assert_eq!(doc["status"], "converged");
    assert!(doc["m_plus"].as_f64().unwrap() > 0.0);
    assert!(doc["psi_value"].as_f64().unwrap() < 0.0);
    assert!(doc["residual"].as_f64().unwrap() <= 1e-6);
    let solution = fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(solution.starts_with("r,u\n"));
    assert_eq!(solution.lines().count(), 1024 + 2);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,I,phi,psi,residual\n"));
}

#[test]
fn solve_refuses_critical_regime() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let code = nehari(&[
        "solve",
        "--config",
        &shipped("critical.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn solve_iteration_cap_keeps_partial_output() {
    let dir = TempDir::new().unwrap();
    let cfg = config_file(
        &dir,
        &(params(5.0, 3.8, 0.0, 1.0) + r#", "solver": {"max_iter": 1}}"#),
    );
    let out = dir.path().join("out");
    assert_eq!(
        nehari(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]),
        3
    );
    let doc = json(&out.join("report.json"));
    assert_eq!(doc["status"], "max_iterations");
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.lines().count() >= 2);
}

#[test]
fn certify_critical_configs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p5");
    let code = nehari(&[
        "certify",
        "--config",
        &shipped("critical.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let doc = json(&out.join("certify.json"));
    assert!((doc["certificate_coeff"].as_f64().unwrap() - 0.1).abs() <= 1e-12);
    assert_eq!(doc["all_hold"], true);

    let cfg = config_file(
        &dir,
        r#"{"params": {"N": 3, "lambda": 1.0, "s1": 0.0, "s2": 1.0, "p": 6.0, "q": 4.0},
            "grid": {"n": 256, "radius": 20.0, "gamma": 2.0}, "certify": {"samples": 20}}"#,
    );
    let out = dir.path().join("p6");
    assert_eq!(
        nehari(&["certify", "--config", &cfg, "--out", out.to_str().unwrap()]),
        0
    );
    let doc = json(&out.join("certify.json"));
    assert_eq!(doc["certificate_coeff"].as_f64().unwrap(), 0.0);
}

#[test]
fn certify_refuses_existence_regime() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let code = nehari(&[
        "certify",
        "--config",
        &shipped("desk.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn scan_grid_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = config_file(
        &dir,
        &(params(5.0, 3.8, 0.0, 1.0)
            + r#", "scan": {"p_min": 4.0, "p_max": 5.6, "p_steps": 5, "q_min": 3.0, "q_max": 4.0, "q_steps": 5}}"#),
    );
    let out = dir.path().join("out");
    assert_eq!(
        nehari(&["scan", "--config", &cfg, "--out", out.to_str().unwrap()]),
        0
    );
    let text = fs::read_to_string(out.join("scan.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("p,q,regime,cond21,m_plus,converged,residual")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 25);
    let critical: Vec<_> = rows.iter().filter(|r| r[2] == "critical").collect();
    // q = 4 and p > 4; the p = q cell is invalid
    assert_eq!(critical.len(), 4);
    assert!(critical.iter().all(|r| r[4].is_empty()));
    assert!(rows.iter().any(|r| r[5] == "true" && !r[4].is_empty()));
}

#[test]
fn scan_requires_axes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let code = nehari(&[
        "scan",
        "--config",
        &shipped("desk.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

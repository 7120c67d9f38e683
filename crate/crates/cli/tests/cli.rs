use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ddm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddm"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_config(dir: &Path, text: &str, extra: &[&str]) -> Output {
    let cfg = write_config(dir, text);
    let out = dir.join("out");
    let mut args = vec!["--config", cfg.as_str(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ddm(&args)
}

const CONVERGE: &str = r#"{
  "command": "converge",
  "case": "paper-1d",
  "cells": 1024,
  "epsilons": [0.2, 0.1, 0.05, 0.025]
}"#;

#[test]
fn converge_writes_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(dir.path(), CONVERGE, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "epsilon,h,n_cells,l2_error,linf_error,mg_cycles,final_residual,wall_seconds"
    );
    assert_eq!(lines.len(), 6);
    assert!(lines[5].starts_with("# slopes "));
    assert!(lines[1].starts_with("2.0000000000000001e-1,1.953125"));
    assert!(!csv.contains('\r'));
    let svg = fs::read_to_string(dir.path().join("out/convergence.svg")).unwrap();
    assert!(svg.contains("slope"));
}

#[test]
fn converge_is_bit_stable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_config(a.path(), CONVERGE, &["--no-plot"]).status.success());
    assert!(run_config(b.path(), CONVERGE, &["--no-plot"]).status.success());
    let read = |d: &Path| fs::read(d.join("out/convergence.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert!(!a.path().join("out/convergence.svg").exists());
}

#[test]
fn solve_dumps_field_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        dir.path(),
        r#"{"command":"solve","case":"ellipse-2d","cells":64,"epsilon":0.05}"#,
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/solution.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,value"));
    assert_eq!(csv.lines().count(), 64 * 64 + 1);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/solution.json")).unwrap()).unwrap();
    assert_eq!(meta["cells"], serde_json::json!([64, 64]));
    assert_eq!(meta["report"]["converged"], serde_json::json!(true));
    assert!(meta["error"]["linf"].as_f64().unwrap() < 0.5);
}

#[test]
fn distance_dump() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(dir.path(), r#"{"command":"distance","case":"pentagon-2d","cells":32}"#, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/distance.csv")).unwrap();
    assert_eq!(csv.lines().count(), 32 * 32 + 1);
    assert!(dir.path().join("out/distance.json").exists());
}

#[test]
fn refine_onesided_and_asymptotic_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        dir.path(),
        r#"{"command":"refine","case":"paper-1d","refinement":{"ratio":0.1,"base_cells":128,"levels":3}}"#,
        &["--no-plot"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    let o = run_config(
        dir.path(),
        r#"{"command":"onesided","cells":2048,"epsilon_sequence":{"start":0.1,"count":3},"alpha":{"power":2}}"#,
        &["--no-plot"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    assert!(csv.contains("subdomain=inner"));

    let o = run_config(
        dir.path(),
        r#"{"command":"asymptotic","case":"paper-1d","cells":4096,"epsilons":[0.04,0.02],"probes":[-0.5,0.5],"sharp_cells":2048}"#,
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/asymptotic.csv")).unwrap();
    assert!(csv.starts_with("epsilon,probe,remainder,raw,mg_cycles\n"));
    assert!(dir.path().join("out/asymptotic.svg").exists());
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(dir.path(), "{\n  \"command\": \"solve\",\n  \"cels\": 10\n}", &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("run.json:3:") && err.contains("unknown field `cels`"), "{err}");

    let o = run_config(dir.path(), r#"{"command":"solve","case":"paper-1d","cells":64,"epsilon":-1}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("field `epsilon`"));
    assert!(!dir.path().join("out").exists(), "nothing is computed for an invalid config");
}

#[test]
fn unconverged_rows_exit_nonzero_and_keep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        dir.path(),
        r#"{"command":"converge","case":"paper-1d","cells":1024,"epsilons":[0.1,0.05],"solver":{"max_cycles":1,"rounding_guard":0}}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(dir.path().join("out/convergence.csv").exists());
}

#[test]
fn selftest_without_config() {
    let o = ddm(&["selftest"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().count() >= 9);
    assert!(stdout.lines().all(|l| l.starts_with("[PASS]")));
}

#[test]
fn missing_config_is_an_error() {
    let o = ddm(&["converge"]);
    assert_eq!(o.status.code(), Some(2));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn rbeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbeam")).args(args).output().unwrap()
}

fn scenario(dir: &Path, horizon: f64, mode: &str) -> String {
    let s = json!({
        "gains": {"K1": 0.2, "K2": 0.1},
        "trigger": {"beta": 0.01, "beta0": 0.005, "theta": 0.2},
        "certificate_inputs": {"alpha": 0.75, "lambda": 0.1, "mu": 0.08},
        "ic": {"preset": "sine"},
        "T": horizon,
        "n_elements": 16,
        "dt": 1e-3,
        "mode": mode,
        "output_stride": 10
    });
    let path = dir.join(format!("{mode}.json"));
    fs::write(&path, s.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn cert_inputs(dir: &Path, beta: f64) -> String {
    let i = json!({
        "K1": 0.2, "K2": 0.1, "alpha": 0.75, "lambda": 0.1, "mu": 0.08,
        "beta": beta, "beta0": 0.005, "theta": 0.2,
        "epsilon_variant": "theorem_statement"
    });
    let path = dir.join(format!("cert_{beta}.json"));
    fs::write(&path, i.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_outputs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario(dir.path(), 0.2, "event_triggered");
    let out = dir.path().join("run");
    let o = rbeam(&["simulate", "--scenario", &sc, "--out", out.to_str().unwrap(), "--dump-field", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(summary["E0"].as_f64().unwrap() > 0.29);
    for f in ["trajectory.csv", "events.csv", "summary.json", "field.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,E,rho,V,wt1,wxt1,U1,U2,envelope_bound"));
    // 200 steps at stride 10 plus the initial row and header
    assert_eq!(traj.lines().count(), 22);
    let field = fs::read_to_string(out.join("field.csv")).unwrap();
    assert!(field.starts_with("t,x,w"));
    assert_eq!(field.lines().count(), 1 + 5 * 64);
}

#[test]
fn invalid_scenario_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"gains": {"k1": 0.2}}"#).unwrap();
    let o = rbeam(&["simulate", "--scenario", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn certify_valid_and_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbeam(&["certify", "--inputs", &cert_inputs(dir.path(), 0.01)]);
    assert!(o.status.success());
    let cert: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((cert["delta"].as_f64().unwrap() - 0.051286).abs() < 1e-6);

    let o = rbeam(&["certify", "--inputs", &cert_inputs(dir.path(), 0.5)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0.234375"));
}

#[test]
fn certify_search() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = cert_inputs(dir.path(), 0.01);
    let o = rbeam(&["certify", "--inputs", &inputs, "--target-delta", "0.01"]);
    assert!(o.status.success());
    let o = rbeam(&["certify", "--inputs", &inputs, "--target-delta", "10"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn compare_writes_both_runs() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario(dir.path(), 0.2, "event_triggered");
    let out = dir.path().join("cmp");
    let o = rbeam(&["compare", "--scenario", &sc, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c: Value = serde_json::from_str(&fs::read_to_string(out.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(c["reference_updates"].as_u64(), Some(201));
    assert!(out.join("event_triggered/events.csv").is_file());
    assert!(out.join("continuous/events.csv").is_file());
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario(dir.path(), 0.2, "event_triggered");
    let out = dir.path().join("sweep");
    let o = rbeam(&[
        "sweep", "--scenario", &sc, "--axis", "beta", "--values", "0.005,0.01,0.02", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(out.join("run_002/summary.json").is_file());

    let o = rbeam(&["sweep", "--scenario", &sc, "--axis", "gamma", "--values", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

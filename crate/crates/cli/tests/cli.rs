//! Black-box tests of the `idn-cot` binary.

use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_idn-cot"));
    cmd.args(args);
    for k in ["LLM_API_BASE", "LLM_API_KEY", "EMBED_API_BASE", "EMBED_API_KEY"] {
        cmd.env_remove(k);
    }
    cmd.envs(envs.iter().copied());
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn simulate_prints_a_run_record() {
    let out = run(&["simulate", "--seed", "42", "--range", "400", "--pipeline", "cot"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rec: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec["seed"], 42);
    assert_eq!(rec["range_m"], 400.0);
    assert_eq!(rec["pipeline"], "cot");
    assert_eq!(rec["backend_id"], "mock-cot");
    assert_eq!(rec["config_hash"].as_str().unwrap().len(), 64);

    let direct = run(&["simulate", "--seed", "42", "--range", "400", "--pipeline", "non-cot"], &[]);
    let d: Value = serde_json::from_slice(&direct.stdout).unwrap();
    assert!(d["utility"]["q_total"].as_f64() < rec["utility"]["q_total"].as_f64());
}

#[test]
fn default_sweep_is_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["sweep", "--out", out.to_str().unwrap()], &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("measured sum-rate gain"));
    }
    let csv_a = std::fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("sweep.csv")).unwrap());
    assert_eq!(std::fs::read(a.join("sweep.svg")).unwrap(), std::fs::read(b.join("sweep.svg")).unwrap());
    assert_eq!(String::from_utf8(csv_a.clone()).unwrap().lines().count(), 17);

    let replot = dir.path().join("replot");
    let o = run(
        &["plot", "--input", a.join("sweep.json").to_str().unwrap(), "--out", replot.to_str().unwrap()],
        &[],
    );
    assert!(o.status.success());
    assert_eq!(std::fs::read(replot.join("sweep.csv")).unwrap(), csv_a);
    assert!(std::fs::read_to_string(replot.join("sweep.svg")).unwrap().contains("<polyline"));
}

#[test]
fn train_activation_writes_policy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"seeds": [0, 1, 2], "range_sweep": [300, 450]}"#);
    let out_dir = dir.path().join("out");
    let o = run(&["train-activation", "--config", &cfg, "--out", out_dir.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("greedy module"));
    assert!(stdout.contains("trained mean q_total"));
    let policy: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("policy.json")).unwrap()).unwrap();
    assert!(policy.is_object());
}

#[test]
fn build_exemplars_appends_k_records() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("ex");
    let o = run(&["build-exemplars", "--k", "3", "--out", out_dir.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out_dir.join("exemplars.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 3);
    for line in text.lines() {
        let rec: Value = serde_json::from_str(line).unwrap();
        assert!(!rec["reasoning_chain"].as_array().unwrap().is_empty());
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), r#"{"seeds": []}"#);
    assert_eq!(run(&["simulate", "--config", &bad], &[]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--config", "/nonexistent/config.json"], &[]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--range", "150"], &[]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--pipeline", "bogus"], &[]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--backend", "http"], &[]).status.code(), Some(2));
}

#[test]
fn transport_errors_exit_with_three() {
    // bind then drop to get a local port with nothing listening
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"retries": 0, "timeout_s": 5}"#);
    let base = format!("http://127.0.0.1:{port}");
    let o = run(&["simulate", "--config", &cfg, "--backend", "http"], &[("LLM_API_BASE", &base)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use smoother_entropy::experiments::{build_cloud_model, CSV_HEADER};
use tempfile::TempDir;

fn sment(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sment")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes the cloud model and cost files into `dir`.
fn cloud_files(dir: &TempDir) -> (PathBuf, PathBuf) {
    let (m, c) = build_cloud_model();
    let model = dir.path().join("model.json");
    let cost = dir.path().join("cost.json");
    std::fs::write(&model, m.to_json()).unwrap();
    std::fs::write(&cost, c.to_json()).unwrap();
    (model, cost)
}

fn solve_cloud(dir: &TempDir) -> (PathBuf, PathBuf, PathBuf) {
    let (model, cost) = cloud_files(dir);
    let policy = dir.path().join("policy.json");
    let o = sment(&[
        "solve",
        "--model",
        s(&model),
        "--cost",
        s(&cost),
        "--objective",
        "active_obfuscation",
        "--tolerance",
        "1e-4",
        "--out",
        s(&policy),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    (model, cost, policy)
}

#[test]
fn solve_writes_one_entry_per_decision_stage() {
    let dir = TempDir::new().unwrap();
    let (model, cost, policy) = solve_cloud(&dir);
    let file: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&policy).unwrap()).unwrap();
    assert_eq!(file["num_stages"], 9);
    let mut stages: Vec<u64> =
        file["stages"].as_array().unwrap().iter().map(|r| r["stage"].as_u64().unwrap()).collect();
    stages.dedup();
    assert_eq!(stages, (1..=9).collect::<Vec<_>>());
    // inputs untouched
    let (m, c) = build_cloud_model();
    assert_eq!(std::fs::read_to_string(model).unwrap(), m.to_json());
    assert_eq!(std::fs::read_to_string(cost).unwrap(), c.to_json());
}

#[test]
fn solve_prints_stats_on_stdout() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p.json");
    let o = sment(&["solve", "--benchmark", "cloud", "--objective", "standard_pomdp", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let stats: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stats["vectors_per_stage"].as_array().unwrap().len(), 10);
}

#[test]
fn convex_objective_exits_with_solver_code() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p.json");
    for objective in ["active_estimation_convex", "active_obfuscation_convex"] {
        let o = sment(&["solve", "--benchmark", "cloud", "--objective", objective, "--out", s(&out)]);
        assert_eq!(code(&o), 3);
        assert!(String::from_utf8_lossy(&o.stderr).contains("convex"));
    }
    assert!(!out.exists());
}

#[test]
fn missing_file_exits_with_validation_code() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    let out = dir.path().join("p.json");
    let o = sment(&["solve", "--model", s(&missing), "--cost", s(&missing), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&sment(&["solve", "--benchmark", "cloud"])), 1);
    assert_eq!(code(&sment(&["frobnicate"])), 1);
    assert_eq!(code(&sment(&["reproduce", "moon"])), 1);
    assert_eq!(code(&sment(&["--help"])), 0);
}

#[test]
fn evaluate_is_deterministic_and_matches_schema() {
    let dir = TempDir::new().unwrap();
    let (model, cost, policy) = solve_cloud(&dir);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = sment(&[
            "evaluate",
            "--model",
            s(&model),
            "--cost",
            s(&cost),
            "--policy",
            s(&policy),
            "--runs",
            "10",
            "--seed",
            "7",
            "--out",
            s(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), CSV_HEADER.len());
    assert_eq!(row[0], "active_obfuscation");
    assert!(lines.next().is_none());
}

#[test]
fn evaluate_json_carries_full_precision() {
    let dir = TempDir::new().unwrap();
    let (model, cost, policy) = solve_cloud(&dir);
    let o = sment(&[
        "evaluate",
        "--model",
        s(&model),
        "--cost",
        s(&cost),
        "--policy",
        s(&policy),
        "--runs",
        "5",
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 1);
    assert!(rows[0]["smoother_entropy"].as_f64().unwrap() > 0.0);
}

#[test]
fn policy_for_another_model_is_rejected() {
    let dir = TempDir::new().unwrap();
    let (_, _, policy) = solve_cloud(&dir);
    let o = sment(&["evaluate", "--benchmark", "navigation", "--policy", s(&policy), "--runs", "2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_emits_one_line_per_run() {
    let dir = TempDir::new().unwrap();
    let (model, cost, policy) = solve_cloud(&dir);
    let o = sment(&["simulate", "--model", s(&model), "--cost", s(&cost), "--policy", s(&policy), "--runs", "4"]);
    assert_eq!(code(&o), 0);
    let lines: Vec<serde_json::Value> =
        String::from_utf8(o.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    for (r, l) in lines.iter().enumerate() {
        assert_eq!(l["run"], r as u64);
        assert_eq!(l["record"]["states"].as_array().unwrap().len(), 10);
    }
}

#[test]
fn verify_rejects_corrupted_model() {
    let dir = TempDir::new().unwrap();
    let (model, _) = cloud_files(&dir);
    let text = std::fs::read_to_string(&model).unwrap();
    std::fs::write(&model, &text[..text.len() / 2]).unwrap();
    assert_eq!(code(&sment(&["verify", "--scope", "identities", "--model", s(&model)])), 2);

    // well-formed JSON, but a transition column that does not sum to one
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["transition"][0][0][0] = serde_json::json!(5.0);
    std::fs::write(&model, v.to_string()).unwrap();
    assert_eq!(code(&sment(&["verify", "--scope", "identities", "--model", s(&model)])), 2);
}

#[test]
fn verify_identities_and_structure_pass() {
    for scope in ["identities", "structure"] {
        let o = sment(&["verify", "--scope", scope, "--seed", "11"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
        let out = String::from_utf8(o.stdout).unwrap();
        assert!(out.lines().any(|l| l.starts_with("PASS")));
        assert!(!out.lines().any(|l| l.starts_with("FAIL")));
    }
}

#[test]
fn reproduce_smoke_run() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("table.csv");
    let trace = dir.path().join("trace.jsonl");
    let started = std::time::Instant::now();
    let o = sment(&["reproduce", "cloud", "--runs", "10", "--out", s(&out), "--trace", s(&trace)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(started.elapsed().as_secs() < 60);
    let text = std::fs::read_to_string(&out).unwrap();
    let policies: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(policies, ["active_obfuscation", "min_directed_info", "standard_pomdp"]);
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 30);
}

#[test]
fn output_into_missing_directory_fails_before_work() {
    let o = sment(&["reproduce", "cloud", "--runs", "10", "--out", "/nonexistent-dir/table.csv"]);
    assert_eq!(code(&o), 2);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn walklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walklab")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn gen_complete_graph() {
    let out = walklab(&["gen", "--family", "complete", "--n", "4"]);
    assert!(out.status.success());
    let g = stdout_json(&out);
    assert_eq!(g["n"], 4);
    assert_eq!(g["edges"], serde_json::json!([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]));
}

#[test]
fn gen_lollipop() {
    let out = walklab(&["gen", "--family", "lollipop", "--d", "3", "--n", "8"]);
    assert!(out.status.success());
    let g = stdout_json(&out);
    assert_eq!(g["n"], 8);
    // A 3-regular body on 4 vertices plus a 4-edge pendant path.
    assert_eq!(g["edges"].as_array().unwrap().len(), 10);
}

#[test]
fn empty_path_is_a_usage_error() {
    let out = walklab(&["gen", "--family", "path", "--n", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_reads_a_graph_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k2.json");
    fs::write(&path, r#"{"n": 2, "edges": [[0, 1]]}"#).unwrap();
    let out = walklab(&["analyze", "--graph", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dump = stdout_json(&out);
    assert_eq!(dump["n"], 2);
}

#[test]
fn empty_families_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"families": []}"#).unwrap();
    let out = walklab(&["verify", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_field_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"replica": 3}"#).unwrap();
    let out = walklab(&["verify", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_size_sweep_is_a_usage_error() {
    let out = walklab(&["sweep", "--kind", "lollipop", "--sizes", "16"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_reports_slopes() {
    let out = walklab(&["sweep", "--kind", "lollipop", "--fixed", "3", "--sizes", "16,24,32"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["points"].as_array().unwrap().len(), 3);
    assert!(report["t_rel_slope"].as_f64().unwrap() > 1.0);
}

const SMALL_CONFIG: &str = r#"{
  "families": [
    {"family": "path", "n": 4},
    {"family": "cycle", "n": 5},
    {"family": "lollipop", "d": 3, "n": 8, "seed": 1}
  ],
  "horizon": 64,
  "replicas": 40,
  "meeting_trials": 5,
  "checks": ["hitting", "return", "green", "network", "meeting", "coalescing"]
}"#;

fn run_verify(dir: &Path) -> Output {
    let config = dir.join("config.json");
    fs::write(&config, SMALL_CONFIG).unwrap();
    let out_dir = dir.join("report");
    walklab(&["verify", "--config", config.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()])
}

#[test]
fn verify_passes_and_lists_the_negative_control() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_verify(dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["failures"], serde_json::json!([]));
    let expected = summary["expected_failures"].as_array().unwrap();
    assert!(!expected.is_empty());
    assert!(expected.iter().all(|f| f["context"].as_str().unwrap().starts_with("simple_walk(K2)")));
    for file in ["hitting.csv", "return.csv", "green.csv", "network.csv", "meeting.csv", "survival.csv", "coalescence.json"] {
        assert!(dir.path().join("report").join(file).exists(), "{file}");
    }
}

#[test]
fn verify_and_simulate_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_verify(a.path()).status.success());
    assert!(run_verify(b.path()).status.success());
    let mut names: Vec<_> = fs::read_dir(a.path().join("report")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8);
    for name in names {
        let left = fs::read(a.path().join("report").join(&name)).unwrap();
        let right = fs::read(b.path().join("report").join(&name)).unwrap();
        assert_eq!(left, right, "{name:?} differs");
    }

    let sim = || walklab(&["simulate", "--family", "cycle", "--n", "6", "--replicas", "200", "--sim-seed", "7", "--domination"]);
    let (x, y) = (sim(), sim());
    assert!(x.status.success());
    assert_eq!(x.stdout, y.stdout);
    let report = stdout_json(&x);
    assert_eq!(report["estimate"]["replicas"], 200);
    assert!(report["domination"]["worst_gap"].as_i64().unwrap() <= 0);
}

#[test]
fn thread_count_does_not_change_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, SMALL_CONFIG).unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.path().join(format!("t{threads}"));
        let out = Command::new(env!("CARGO_BIN_EXE_walklab"))
            .env("WALKLAB_THREADS", threads)
            .args(["verify", "--config", config.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(out.status.success());
        outputs.push(fs::read(out_dir.join("survival.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_walklab"))
        .env("WALKLAB_THREADS", "zero")
        .args(["gen", "--family", "path", "--n", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

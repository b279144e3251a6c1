use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ccdarp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccdarp")).args(args).env_remove("CCDARP_LOG").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn generate(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let p = dir.join(name);
    let mut args = vec!["generate", "--out", p.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = ccdarp(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    p
}

fn tiny(dir: &Path) -> PathBuf {
    generate(dir, "tiny.txt", &["--vehicles", "2", "--requests", "4", "--seed", "3", "--tiny"])
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn solve_report_schema_and_oracle_agree() {
    let dir = TempDir::new().unwrap();
    let inst = tiny(dir.path());
    let path = inst.to_str().unwrap();
    let o = ccdarp(&["solve", "--instance", path, "--mode", "tfr", "--flex-ratio", "0.5", "--capacity", "7", "--psi", "0.1"]);
    assert_eq!(code(&o), 0);
    let rep = json(&o);
    for key in [
        "instance",
        "mode",
        "psi",
        "flex_ratio",
        "objective",
        "optimal",
        "gap",
        "vehicles_used",
        "routes",
        "labels_explored",
        "cuts_added",
        "nodes_explored",
        "wall_seconds",
        "status",
    ] {
        assert!(rep.get(key).is_some(), "missing {key}");
    }
    assert_eq!(rep["mode"], "tfr");
    let o = ccdarp(&["oracle", "--instance", path, "--mode", "tfr", "--flex-ratio", "0.5", "--capacity", "7", "--psi", "0.1"]);
    assert_eq!(code(&o), 0);
    let orc = json(&o);
    match (rep["objective"].as_f64(), orc["objective"].as_f64()) {
        (Some(a), Some(b)) => assert!((a - b).abs() < 1e-6, "{a} vs {b}"),
        (None, None) => assert_eq!(rep["status"], "infeasible"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn csv_format_has_a_header_and_one_row() {
    let dir = TempDir::new().unwrap();
    let inst = tiny(dir.path());
    let o = ccdarp(&["solve", "--instance", inst.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("instance,"));
}

#[test]
fn missing_file_exits_one() {
    let o = ccdarp(&["solve", "--instance", "/nonexistent/b2-16.txt"]);
    assert_eq!(code(&o), 1);
    assert!(!o.stderr.is_empty());
}

#[test]
fn bad_flag_exits_one() {
    assert_eq!(code(&ccdarp(&["solve", "--frobnicate"])), 1);
    let dir = TempDir::new().unwrap();
    let inst = tiny(dir.path());
    assert_eq!(code(&ccdarp(&["solve", "--instance", inst.to_str().unwrap(), "--mode", "xyz"])), 1);
    assert_eq!(code(&ccdarp(&["solve", "--instance", inst.to_str().unwrap(), "--psi", "1.5", "--mode", "r"])), 1);
}

#[test]
fn zero_time_limit_exits_two() {
    let dir = TempDir::new().unwrap();
    let inst = generate(dir.path(), "day.txt", &["--vehicles", "3", "--requests", "24", "--seed", "2"]);
    let o = ccdarp(&["solve", "--instance", inst.to_str().unwrap(), "--mode", "tf", "--flex-ratio", "0.5", "--time-limit", "0"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(json(&o)["status"], "limit");
}

#[test]
fn no_timing_output_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let inst = generate(dir.path(), "day.txt", &["--vehicles", "2", "--requests", "12", "--seed", "4"]);
    let args = ["solve", "--instance", inst.to_str().unwrap(), "--mode", "tfr", "--flex-ratio", "0.5", "--capacity", "20", "--no-timing"];
    let (a, b) = (ccdarp(&args), ccdarp(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["wall_seconds"], 0.0);
}

#[test]
fn simulation_repeats_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let inst = generate(dir.path(), "day.txt", &["--vehicles", "3", "--requests", "10", "--seed", "4"]);
    let plan = dir.path().join("plan.json");
    let p = inst.to_str().unwrap();
    assert_eq!(code(&ccdarp(&["solve", "--instance", p, "--out", plan.to_str().unwrap()])), 0);
    let run = |seed: &str| {
        let o = ccdarp(&["simulate", "--instance", p, "--plan", plan.to_str().unwrap(), "--scenarios", "20", "--sim-seed", seed]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        o
    };
    let (a, b) = (run("7"), run("7"));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
    let rows = String::from_utf8(a.stdout).unwrap().lines().count();
    assert_eq!(rows, 21);
    let summary: Value = serde_json::from_slice(&a.stderr).unwrap();
    assert_eq!(summary["scenarios"], 20);
}

#[test]
fn oracle_refuses_large_instances() {
    let dir = TempDir::new().unwrap();
    let inst = generate(dir.path(), "day.txt", &["--vehicles", "2", "--requests", "16", "--seed", "1"]);
    let o = ccdarp(&["oracle", "--instance", inst.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn empty_suite_gives_a_header_only_csv() {
    let dir = TempDir::new().unwrap();
    let suite = dir.path().join("suite.txt");
    std::fs::write(&suite, "# nothing yet\n").unwrap();
    let o = ccdarp(&["bench", "--suite", suite.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1);
}

#[test]
fn bench_records_bad_rows_and_continues() {
    let dir = TempDir::new().unwrap();
    tiny(dir.path());
    let suite = dir.path().join("suite.txt");
    std::fs::write(&suite, "missing.txt c\ntiny.txt r 0 0.1 7\n").unwrap();
    let o = ccdarp(&["bench", "--suite", suite.to_str().unwrap(), "--no-timing"]);
    assert_eq!(code(&o), 0);
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    assert!(!rows[0][11].is_empty() && !rows[1][11].is_empty());
    assert!(rows[2][11].is_empty() && rows[3][11].is_empty());
    assert_eq!(&rows[3][5], "probabilistic");
}

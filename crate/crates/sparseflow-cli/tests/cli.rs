//! End-to-end runs of the binary: generate, solve, validate, export,
//! exact-solve, and bench, checking files and exit codes.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparseflow"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|line| line.strip_prefix(&format!("{key} ")))
        .unwrap_or_else(|| panic!("missing field {key} in:\n{text}"))
        .to_string()
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "sparseflow_cli_{tag}_{}",
        std::process::id()
    ));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn gen_solve_validate_export_exact_round_trip() {
    let dir = temp_dir("roundtrip");
    let inst = dir.join("inst.json");
    let sol = dir.join("sol.json");
    let exact_sol = dir.join("exact.json");

    let out = run(&[
        "gen",
        "--centers",
        "4",
        "--zones",
        "6",
        "--items",
        "2",
        "--sparsity",
        "2",
        "--seed",
        "7",
        "--out",
        inst.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(inst.exists());

    let out = run(&[
        "solve",
        inst.to_str().unwrap(),
        "--out",
        sol.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let solve_text = stdout(&out);
    assert_eq!(field(&solve_text, "status"), "solved");
    let objective: f64 = field(&solve_text, "objective").parse().unwrap();
    let bound: f64 = field(&solve_text, "relaxed_bound").parse().unwrap();
    assert!(objective >= bound - 1e-6);

    let out = run(&["validate", inst.to_str().unwrap(), sol.to_str().unwrap()]);
    assert!(out.status.success(), "validate failed: {out:?}");
    assert!(stdout(&out).contains("feasible"));

    let out = run(&[
        "exact",
        inst.to_str().unwrap(),
        "--method",
        "enum",
        "--out",
        exact_sol.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let exact_text = stdout(&out);
    let exact_objective: f64 = field(&exact_text, "objective").parse().unwrap();
    assert!(objective >= exact_objective - 1e-6 * (1.0 + exact_objective.abs()));

    let out = run(&[
        "exact",
        inst.to_str().unwrap(),
        "--method",
        "bnb",
        "--node-limit",
        "100000",
    ]);
    assert!(out.status.success(), "{out:?}");
    let bnb_objective: f64 = field(&stdout(&out), "objective").parse().unwrap();
    assert!((bnb_objective - exact_objective).abs() <= 1e-6 * (1.0 + exact_objective.abs()));

    let out = run(&["validate", inst.to_str().unwrap(), exact_sol.to_str().unwrap()]);
    assert!(out.status.success());

    let mps = dir.join("inst.mps");
    let out = run(&["export-mip", inst.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    assert!(mps.exists(), "default output derives from the instance path");
    let mps_text = fs::read_to_string(&mps).unwrap();
    assert!(mps_text.starts_with("NAME"));
    assert!(mps_text.contains("'INTORG'"));
    assert!(mps_text.trim_end().ends_with("ENDATA"));

    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn solve_hand_written_instance_file() {
    let dir = temp_dir("tiny");
    let inst = dir.join("tiny.json");
    let sol = dir.join("tiny_sol.json");
    fs::write(
        &inst,
        r#"{
  "num_centers": 2,
  "num_zones": 2,
  "num_items": 1,
  "cost": [[1.0, 2.0], [3.0, 1.0]],
  "capacity": [20.0, 20.0],
  "demand": [[5.0], [5.0]],
  "sparsity": [1]
}"#,
    )
    .unwrap();

    let out = run(&[
        "solve",
        inst.to_str().unwrap(),
        "--k1",
        "1",
        "--out",
        sol.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    let objective: f64 = field(&text, "objective").parse().unwrap();
    assert!((objective - 15.0).abs() < 1e-7, "objective {objective}");
    let bound: f64 = field(&text, "relaxed_bound").parse().unwrap();
    assert!((bound - 10.0).abs() < 1e-7, "bound {bound}");

    let out = run(&["validate", inst.to_str().unwrap(), sol.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    let out = run(&["exact", inst.to_str().unwrap(), "--method", "enum"]);
    let exact: f64 = field(&stdout(&out), "objective").parse().unwrap();
    assert!((exact - 15.0).abs() < 1e-7);

    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn validate_rejects_corrupted_solution() {
    let dir = temp_dir("corrupt");
    let inst = dir.join("inst.json");
    let sol = dir.join("sol.json");

    assert!(run(&[
        "gen",
        "--centers",
        "3",
        "--zones",
        "4",
        "--items",
        "1",
        "--sparsity",
        "1",
        "--seed",
        "3",
        "--out",
        inst.to_str().unwrap(),
    ])
    .status
    .success());
    assert!(run(&[
        "solve",
        inst.to_str().unwrap(),
        "--out",
        sol.to_str().unwrap(),
    ])
    .status
    .success());

    // Double one inbound flow without touching the edge flows.
    let text = fs::read_to_string(&sol).unwrap();
    let mut parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    let y0 = parsed["y"][0][0].as_f64().unwrap();
    parsed["y"][0][0] = serde_json::json!(y0 + 1.0);
    fs::write(&sol, serde_json::to_string(&parsed).unwrap()).unwrap();

    let out = run(&["validate", inst.to_str().unwrap(), sol.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    assert!(stdout(&out).contains("conservation_in"));

    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn bench_writes_all_report_files() {
    let dir = temp_dir("bench");
    let prefix = dir.join("report");
    let prefix_str = prefix.to_str().unwrap();

    let out = run(&[
        "bench",
        "--centers",
        "4",
        "--zones",
        "5",
        "--items",
        "1,2",
        "--seeds",
        "2",
        "--sparsity",
        "2",
        "--exact",
        "enum",
        "--out",
        prefix_str,
    ]);
    assert!(out.status.success(), "{out:?}");
    for suffix in [".csv", "_aggregates.csv", ".json", "_plot.csv"] {
        let path = PathBuf::from(format!("{prefix_str}{suffix}"));
        assert!(path.exists(), "missing {}", path.display());
    }
    let csv = fs::read_to_string(format!("{prefix_str}.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5, "header plus 4 rows");
    let plot = fs::read_to_string(format!("{prefix_str}_plot.csv")).unwrap();
    assert!(plot.contains("heuristic,1,"));
    assert!(plot.contains("exact,1,"));

    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn usage_errors_exit_with_two() {
    let out = run(&["solve"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["gen", "--centers", "3"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["solve", "/nonexistent/file.json"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["exact", "x.json", "--method", "magic"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["solve", "x.json", "--bogus-flag", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("USAGE"));
}

#[test]
fn malformed_instance_file_exits_with_two() {
    let dir = temp_dir("malformed");
    let path = dir.join("bad.json");
    fs::write(&path, "{\"num_centers\": 2,").unwrap();
    let out = run(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn solve_reports_failure_with_exit_one() {
    let dir = temp_dir("fail");
    let inst = dir.join("inst.json");
    // Budget 1 with per-center capacity at 0.6x total demand: the pair of
    // centers covers demand, no single center does.
    assert!(run(&[
        "gen",
        "--centers",
        "2",
        "--zones",
        "2",
        "--items",
        "1",
        "--sparsity",
        "1",
        "--capacity-factor",
        "0.6",
        "--seed",
        "5",
        "--out",
        inst.to_str().unwrap(),
    ])
    .status
    .success());
    let out = run(&["solve", inst.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    assert!(stdout(&out).contains("status sparsify_failed"));
    let _ = fs::remove_dir_all(&dir);
}

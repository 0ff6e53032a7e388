//! The `fedsel` binary: artifacts, exit codes, and error messages.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fedsel::traces::parse_trace_file;

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn fedsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedsel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"
[scenario]
pool_size = 120
horizon_s = 400000.0
[population]
num_clients = 40
[round]
num_rounds = 60
[task]
num_samples = 2000
[selector]
kind = "tifl_mda"
[seeds]
run_seeds = [1, 2]
"#;

#[test]
fn run_writes_reports_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let args = ["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];
    let out = fedsel(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    for label in [
        "Training time(s)",
        "Failed rounds",
        "Accuracy mean",
        "Accuracy std",
        "Average failed clients",
        "Unique participants",
        "Total participants",
    ] {
        assert!(table.contains(label), "missing {label}");
    }
    let first = std::fs::read(out_dir.join("report.json")).unwrap();
    for seed in [1, 2] {
        let log = std::fs::read_to_string(out_dir.join(format!("rounds_seed{seed}.csv"))).unwrap();
        assert!(log.starts_with("round,start_s,duration_s,selected,failed,skipped,accuracy\n"));
        assert_eq!(log.lines().count(), 61);
    }
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("metric,tifl_mda\n"));

    assert!(fedsel(&args).status.success());
    assert_eq!(first, std::fs::read(out_dir.join("report.json")).unwrap());

    let json: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(json["config"]["round"]["num_rounds"], 60);
    assert_eq!(json["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn seed_override_replaces_run_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("o");
    let out = fedsel(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--seed-override",
        "42",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out_dir.join("rounds_seed42.csv").exists());
    assert!(!out_dir.join("rounds_seed1.csv").exists());
}

#[test]
fn compare_on_the_fixture_flags_mda_over_random() {
    let dir = tempfile::tempdir().unwrap();
    let out = fedsel(&[
        "compare",
        "--config",
        repo("configs/low_availability.toml").to_str().unwrap(),
        "--selectors",
        "random,mda",
        "--jobs",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    let mut rows = csv.lines();
    assert_eq!(rows.next(), Some("metric,random,mda"));
    assert!(csv.lines().all(|l| l.split(',').count() == 3));
    assert_eq!(csv.lines().last(), Some("Fastest,,yes"));
    assert!(String::from_utf8(out.stdout).unwrap().contains("mda*"));
}

#[test]
fn duplicate_selectors_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = fedsel(&["compare", "--config", cfg.to_str().unwrap(), "--selectors", "mda,tifl,mda"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("more than once"));
}

#[test]
fn unknown_key_suggests_the_right_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[selctor]\nkind = \"mda\"\n");
    let out = fedsel(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("selctor") && err.contains("did you mean `selector`"), "{err}");
}

#[test]
fn timeout_below_slowest_client_names_both_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[round]\ntimeout_s = 30.0\n");
    let out = fedsel(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("round.timeout_s") && err.contains("30") && err.contains("slowest"), "{err}");
}

#[test]
fn missing_config_and_bad_flags_exit_one() {
    assert_eq!(fedsel(&["run", "--config", "/nonexistent/cfg.toml"]).status.code(), Some(1));
    assert_eq!(fedsel(&["run"]).status.code(), Some(1));
    assert_eq!(fedsel(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(fedsel(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace("horizon_s = 400000.0", "horizon_s = 3000.0");
    let cfg = write_config(dir.path(), &body);
    let out = fedsel(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("longer trace horizon"));
}

#[test]
fn gen_traces_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = fedsel(&["gen-traces", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("traces.txt")).unwrap();
    let traces = parse_trace_file(&text).unwrap();
    assert_eq!(traces.len(), 40);
    assert!(traces.iter().all(|t| t.trace.horizon() == 400000.0));

    // the written files can be used as inputs; a low scenario over a pool of
    // 40 needs at most 13 clients per block, so use 20 clients
    let body = SMALL
        .replace("pool_size = 120", "source = \"file\"\ntrace_file = \"traces.txt\"")
        .replace("num_clients = 40", "num_clients = 20\ncapability_file = \"capabilities.txt\"");
    let cfg2 = dir.path().join("from_files.toml");
    std::fs::write(&cfg2, body).unwrap();
    let out = fedsel(&["gen-traces", "--config", cfg2.to_str().unwrap(), "--out", dir.path().join("again").to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let again = std::fs::read_to_string(dir.path().join("again/traces.txt")).unwrap();
    assert_eq!(parse_trace_file(&again).unwrap().len(), 20);
}

#[test]
fn plotdata_series_are_monotone_in_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("cmp");
    let out = fedsel(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--selectors",
        "random,tifl",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv_path = dir.path().join("plot.csv");
    let out = fedsel(&[
        "plotdata",
        out_dir.join("comparison.json").to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["series", "time_s", "accuracy"]);
    let mut last: std::collections::HashMap<String, f64> = Default::default();
    let mut points = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[1].parse().unwrap();
        let prev = last.insert(rec[0].to_string(), t).unwrap_or(f64::NEG_INFINITY);
        assert!(t > prev);
        points += 1;
    }
    assert_eq!(last.len(), 4);
    assert_eq!(points, 4 * 6);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"runs\": 3}").unwrap();
    let out = fedsel(&["plotdata", bad.to_str().unwrap(), "--out", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

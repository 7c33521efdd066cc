use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn periomega(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_periomega")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn write_config(name: &str, json: &str) -> String {
    let path = scratch(name);
    std::fs::write(&path, json).unwrap();
    path.display().to_string()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows of a CSV report, skipping the config comment and the header.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn sphere_rotation_compare_reports_p_not_omega() {
    let cfg = write_config(
        "sphere.json",
        r#"{"map": {"family": "sphere", "lambda": 1.0}, "task": {"kind": "compare", "max_period": 12, "depth": 8}}"#,
    );
    let out = stdout(&periomega(&["compare", "--config", &cfg]));
    assert!(out.ends_with('\n'));
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["result"]["report"]["verdict"], "P≠Ω");
    assert_eq!(doc["result"]["catalog"]["orbits"].as_array().unwrap().len(), 2);
    assert_eq!(doc["config"]["task"]["samples_per_box"], 9);
    assert_eq!(doc["config"]["task"]["threshold"], 0.01);
}

#[test]
fn quadratic_cascade_csv_starts_at_the_analytic_values() {
    let out = stdout(&periomega(&["bifurcate", "--family", "quadratic", "--n-max", "5", "--format", "csv"]));
    assert!(out.starts_with("# config: "));
    assert!(out.contains("n,period,flip_param,delta_estimate\n"));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 6);
    let flip = |i: usize| rows[i][2].parse::<f64>().unwrap();
    assert!((flip(0) + 0.25).abs() < 1e-8);
    assert!((flip(1) - 0.75).abs() < 1e-8);
    assert!((flip(2) - 1.25).abs() < 1e-6);
}

#[test]
fn sharkovskii_three_precedes_five() {
    let out = stdout(&periomega(&["sharkovskii", "compare", "3", "5"]));
    let lines: Vec<Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["order"], "precedes");
    let out = stdout(&periomega(&["sharkovskii", "forced", "3", "--cap", "20"]));
    let forced: Value = serde_json::from_str(out.lines().last().unwrap()).unwrap();
    assert_eq!(forced["forced"], Value::from((1..=20).collect::<Vec<u64>>()));
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let cfg = write_config(
        "henon.json",
        r#"{"map": {"family": "henon", "a": 1.0, "b": 0.05}, "task": {"kind": "compare", "max_period": 4, "depth": 7, "seed": 11}}"#,
    );
    let mut outputs = Vec::new();
    for threads in ["1", "8", "8"] {
        let path = scratch(&format!("henon-{threads}-{}.json", outputs.len()));
        let path = path.display().to_string();
        let run = periomega(&["compare", "--config", &cfg, "--threads", threads, "--out", &path]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
        assert!(run.stdout.is_empty());
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
    let doc: Value = serde_json::from_slice(&outputs[0]).unwrap();
    assert_eq!(doc["result"]["report"]["verdict"], "P≈Ω");
}

#[test]
fn echoed_config_reproduces_the_report() {
    let first = stdout(&periomega(&[
        "omega", "--family", "henon", "--a", "1.2", "--b", "0.05", "--depth", "6", "--seed", "4", "--format", "csv",
    ]));
    let echoed = first.lines().next().unwrap().strip_prefix("# config: ").unwrap();
    let cfg = write_config("echoed.json", echoed);
    let second = stdout(&periomega(&["omega", "--config", &cfg, "--format", "csv"]));
    assert_eq!(first, second);
}

#[test]
fn flags_override_the_config_file() {
    let cfg = write_config(
        "entropy.json",
        r#"{"map": {"family": "quadratic", "a": 1.0}, "task": {"kind": "entropy", "iterations": 12}}"#,
    );
    let out = stdout(&periomega(&["entropy", "--config", &cfg, "--a", "2.0", "--sample-density", "16"]));
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["config"]["map"]["a"], 2.0);
    assert_eq!(doc["config"]["task"]["iterations"], 12);
    assert_eq!(doc["config"]["task"]["sample_density"], 16);
    assert!((doc["result"]["entropy"].as_f64().unwrap() - 2f64.ln()).abs() < 0.02);
}

#[test]
fn validation_errors_exit_with_two() {
    let cases = [
        ("unknown.json", r#"{"map": {"family": "quadratic", "a": 1}, "task": {"kind": "periodic", "horizon": 4}}"#),
        ("missing.json", r#"{"map": {"family": "henon", "a": 1}, "task": {"kind": "periodic"}}"#),
        ("range.json", r#"{"map": {"family": "sphere", "lambda": 1}, "task": {"kind": "periodic", "max_period": 99}}"#),
        ("syntax.json", r#"{"map": {"family": "quadratic", "a": 1}, "task": "#),
        ("kind.json", r#"{"map": {"family": "quadratic", "a": 1}, "task": {"kind": "omega"}}"#),
    ];
    for (name, json) in cases {
        let cfg = write_config(name, json);
        let out = periomega(&["periodic", "--config", &cfg]);
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
    for args in [
        &["omega", "--family", "sphere", "--lambda", "1", "--samples-per-box", "2"][..],
        &["entropy", "--family", "henon", "--a", "1", "--b", "0.3"],
        &["bifurcate", "--family", "sphere", "--lambda", "1"],
        &["periodic", "--family", "cubic", "--a", "1"],
        &["periodic", "--a", "1"],
        &["sharkovskii"],
        &["sharkovskii", "compare", "0", "5"],
        &["sharkovskii", "compare", "3", "5", "--format", "csv"],
        &["periodic", "--family", "quadratic", "--a", "1", "--threads", "0"],
    ] {
        let out = periomega(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn numerical_failures_exit_with_three() {
    let out = periomega(&["bifurcate", "--family", "quadratic", "--bracket", "0", "1"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no sign change"));
}

#[test]
fn unreadable_config_exits_with_one() {
    let out = periomega(&["periodic", "--config", "/nonexistent/run.json"]);
    assert_eq!(out.status.code(), Some(1));
}

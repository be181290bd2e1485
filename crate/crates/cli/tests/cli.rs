use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hbspace(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hbspace"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("HBSPACE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn kernel_values(v: &Value) -> Vec<f64> {
    v["values"].as_array().unwrap().iter().map(|e| e["k"][0].as_f64().unwrap()).collect()
}

#[test]
fn h2_kernel_at_origin_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = hbspace(dir.path(), &["--named", "h2", "--json", "--no-plots", "kernel", "--lambda", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let ks = kernel_values(&json(&o));
    assert_eq!(ks.len(), 8);
    assert!(ks.iter().all(|&k| (k - 1.0).abs() < 1e-15), "{ks:?}");
}

#[test]
fn rank_one_kernel_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = hbspace(dir.path(), &["--named", "rank1-half", "--json", "kernel", "--z", "0.5", "--lambda", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let k = kernel_values(&json(&o))[0];
    assert!((k - 7.0 / 6.0).abs() < 1e-14, "{k}");
    assert!(dir.path().join("kernel_diagonal.svg").exists());
}

#[test]
fn malformed_space_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"kind\": \"explicit\", ").unwrap();
    let o = hbspace(dir.path(), &["--space", bad.to_str().unwrap(), "verify"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hbspace(dir.path(), &["--named", "no-such-space", "verify"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hbspace(dir.path(), &["verify"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn contractive_violation_fails_verify() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("big.json");
    std::fs::write(&spec, r#"{"kind":"explicit","components":[[[0,0],[0.8,0]],[[0,0],[0.7,0]]]}"#).unwrap();
    let o = hbspace(dir.path(), &["--space", spec.to_str().unwrap(), "--json", "verify"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["passed"], false);
    assert_eq!(v["checks"][0]["passed"], false);
}

#[test]
fn verify_passes_on_named_spaces() {
    for name in ["h2", "rank1-half", "binomial-half", "dirichlet-pair"] {
        let dir = tempfile::tempdir().unwrap();
        let o = hbspace(dir.path(), &["--named", name, "--grid", "1024", "verify"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stdout));
        assert!(dir.path().join("report.json").exists());
    }
}

#[test]
fn extreme_symbol_has_no_factor() {
    let dir = tempfile::tempdir().unwrap();
    let o = hbspace(dir.path(), &["--named", "inner-z", "factor"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn csv_output_is_deterministic() {
    let read = |args: &[&str], file: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = hbspace(dir.path(), args);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(dir.path().join(file)).unwrap()
    };
    for (args, file) in [
        (&["--named", "binomial-half", "kernel"][..], "kernel.csv"),
        (&["--named", "rank1-half", "--quick", "norm-formula", "--f", "1,0.5:-0.25"][..], "norm_formula.csv"),
        (&["--named", "binomial-half", "factor"][..], "factor.csv"),
        (&["--named", "dirichlet-pair", "embed", "--f", "szego:0.3:0.2"][..], "embed.csv"),
    ] {
        let a = read(args, file);
        assert_eq!(a, read(args, file), "{file}");
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("# hbspace "), "{file}");
        assert!(text.contains("seed=20240601"));
    }
}

#[test]
fn seed_changes_random_points() {
    let dir = tempfile::tempdir().unwrap();
    let a = json(&hbspace(dir.path(), &["--named", "h2", "--json", "--no-plots", "kernel"]));
    let b = json(&hbspace(dir.path(), &["--named", "h2", "--json", "--no-plots", "--seed", "7", "kernel"]));
    assert_ne!(a["values"], b["values"]);
}

#[test]
fn quick_suite_report_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = hbspace(dir.path(), &["--quick", "--json", "suite"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&o);
    let file: Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(v, file);
    assert_eq!(v["schema"], "hbspace-report/1");
    assert_eq!(v["command"], "suite");
    assert_eq!(v["quick"], true);
    assert_eq!(v["passed"], true);
    assert!(v["seconds"].as_f64().unwrap() >= 0.0);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 12);
    for (i, c) in checks.iter().enumerate() {
        assert_eq!(c["id"], i + 1);
        assert!(c["name"].is_string() && c["detail"].is_string());
        assert_eq!(c["passed"], true);
        assert!(c["seconds"].is_f64());
    }
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hbspace"))
        .args(["--named", "h2", "--out"])
        .arg(dir.path())
        .arg("mz-test")
        .env("HBSPACE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

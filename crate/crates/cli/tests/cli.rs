use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nncouple"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Two well separated clusters with labels a/b, plus a noise column.
fn clustered(dir: &Path) -> PathBuf {
    let mut text = String::from("label,x1,x2,noise\n");
    for i in 0..60 {
        let side = if i % 2 == 0 { 0.0 } else { 10.0 };
        let jitter = (i as f64 * 0.37).sin();
        let noise = (i as f64 * 1.91).cos();
        text.push_str(&format!(
            "{},{},{},{}\n",
            if i % 2 == 0 { "a" } else { "b" },
            side + jitter,
            side - jitter * 0.5,
            noise
        ));
    }
    write(dir, "clustered.csv", &text)
}

fn assert_common(v: &Value, command: &str) {
    assert_eq!(v["command"], command);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    for key in ["n", "K", "warnings"] {
        assert!(v.get(key).is_some(), "missing {key} in {v}");
    }
}

#[test]
fn psi_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = clustered(dir.path());
    let v = json(&run(&["psi", "--input", data.to_str().unwrap(), "--response", "label", "--covariates", "x1,x2"]));
    assert_common(&v, "psi");
    assert_eq!(v["n"], 60);
    assert_eq!(v["K"], 2);
    assert!((v["psi_hat"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v.get("w_n").is_some() && v.get("l_n").is_some());
}

#[test]
fn test_report_and_binary_variant() {
    let dir = tempfile::tempdir().unwrap();
    let data = clustered(dir.path());
    let p = data.to_str().unwrap();
    let v = json(&run(&["test", "--input", p, "--response", "label", "--standardize", "--seed", "4"]));
    assert_common(&v, "test");
    assert_eq!(v["df"], 1);
    assert!(v["p_value"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["kind"]["kind"], "full");
    let b = json(&run(&["test", "--input", p, "--response", "label", "--binary-dim", "2"]));
    assert_eq!(b["kind"]["kind"], "plugin_gamma");
    assert_eq!(b["kind"]["as_printed"], false);
}

#[test]
fn cond_and_select() {
    let dir = tempfile::tempdir().unwrap();
    let data = clustered(dir.path());
    let p = data.to_str().unwrap();
    let v = json(&run(&["cond", "--input", p, "--response", "label", "--covariates", "x1", "--given", "noise"]));
    assert_common(&v, "cond");
    assert!(v["psi_conditional"].as_f64().unwrap() > 0.5);
    let s = json(&run(&["select", "--input", p, "--response", "label", "--max-steps", "5"]));
    assert_common(&s, "select");
    assert_eq!(s["chosen_names"][0], "x1");
    assert_eq!(s["stopped_because"], "saturated");
    assert_eq!(s["chosen"].as_array().unwrap().len(), s["scores"].as_array().unwrap().len());
}

#[test]
fn saturated_conditioning_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = clustered(dir.path());
    let out = run(&["cond", "--input", data.to_str().unwrap(), "--response", "label", "--covariates", "noise", "--given", "x1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("undefined"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["psi", "--input", "x.csv"]).status.code(), Some(2));
    assert_eq!(run(&["psi", "--input", "x.csv", "--response", "y", "--bogus"]).status.code(), Some(2));
}

#[test]
fn degenerate_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let single = write(dir.path(), "single.csv", "y,x\na,0\na,1\na,2\n");
    let out = run(&["psi", "--input", single.to_str().unwrap(), "--response", "y"]);
    assert_eq!(out.status.code(), Some(1));
    let bad = write(dir.path(), "bad.csv", "y,x\na,0\nb,zz\n");
    let out = run(&["psi", "--input", bad.to_str().unwrap(), "--response", "y"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 2") && err.contains("'x'"), "{err}");
}

#[test]
fn distance_matrix_mode() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "y.csv", "y\na\na\nb\nb\n");
    let good = write(dir.path(), "d.csv", "0,1,5,5\n1,0,5,5\n5,5,0,1\n5,5,1,0\n");
    let v = json(&run(&[
        "psi", "--input", data.to_str().unwrap(), "--response", "y", "--distance-matrix", good.to_str().unwrap(),
    ]));
    assert_eq!(v["psi_hat"], 1.0);
    let asym = write(dir.path(), "a.csv", "0,1,5,5\n1,0,5,5\n5,4,0,1\n5,5,1,0\n");
    let out = run(&[
        "psi", "--input", data.to_str().unwrap(), "--response", "y", "--distance-matrix", asym.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("distance matrix not symmetric"));
}

#[test]
fn grid_mode_reads_curves() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("y,t0,t1,t2,t3\n");
    for i in 0..20 {
        let level = if i < 10 { 0.0 } else { 3.0 };
        let w = i as f64 * 0.01;
        text.push_str(&format!("{},{},{},{},{}\n", i < 10, level + w, level, level - w, level));
    }
    let data = write(dir.path(), "curves.csv", &text);
    let v = json(&run(&["psi", "--input", data.to_str().unwrap(), "--response", "y", "--grid"]));
    assert!((v["psi_hat"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn simulate_writes_csv() {
    let out = run(&["simulate", "--setting", "sin", "--n", "50", "--reps", "4", "--lambdas", "0,1", "--seed", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,rejections,reps,alpha,n,setting"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].ends_with(",4,0.05,50,sin"));
    let again = run(&["simulate", "--setting", "sin", "--n", "50", "--reps", "4", "--lambdas", "0,1", "--seed", "2"]);
    assert_eq!(text.as_bytes(), again.stdout.as_slice());
    assert_eq!(run(&["simulate", "--setting", "cosine"]).status.code(), Some(2));
}

#[test]
fn synthetic_calibration() {
    let v = json(&run(&["calibrate", "--n", "60", "--levels", "2", "--reps", "40", "--seed", "1"]));
    assert_common(&v, "calibrate");
    assert_eq!(v["mode"], "synthetic");
    assert_eq!(v["df"], 1);
    let rate = v["rejection_rate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&rate));
}

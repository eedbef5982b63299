use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn uem(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uem")).args(args).current_dir(dir).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn sample_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sample", "--d", "4", "--n", "1000", "--eta", "1", "--rho", "0.6", "--seed", "7", "--out", "a.csv"];
    assert!(uem(&args, dir.path()).status.success());
    let first = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 1001);
    assert!(uem(&args, dir.path()).status.success());
    assert_eq!(fs::read(dir.path().join("a.csv")).unwrap(), first);
    let side: Value = serde_json::from_slice(&fs::read(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(side["schema_version"], 1);
    assert_eq!(side["n"], 1000);
}

#[test]
fn domain_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = uem(&["sample", "--d", "2", "--n", "10", "--eta", "1", "--rho", "1.0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("domain"));

    let out =
        uem(&["estimate", "--estimator", "mom-mean", "--d", "2", "--n", "50", "--eta", "1", "--rho", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unidentifiable"));

    let out =
        uem(&["estimate", "--estimator", "nope", "--d", "2", "--n", "50", "--eta", "1", "--rho", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = uem(&["sample", "--d", "2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_files_are_runtime_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = uem(&["estimate", "--estimator", "em", "--data", "missing.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn estimate_from_file_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(uem(&["sample", "--d", "3", "--n", "4000", "--eta", "1", "--rho", "0.6", "--seed", "3"], p)
        .status
        .success());
    let out = uem(
        &[
            "estimate",
            "--estimator",
            "em-adaptive",
            "--data",
            "dataset.csv",
            "--out",
            "est.json",
            "--trace",
            "trace.csv",
        ],
        p,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let est: Value = serde_json::from_slice(&fs::read(p.join("est.json")).unwrap()).unwrap();
    assert_eq!(est["schema_version"], 1);
    assert_eq!(est["branch"], "unbalanced");
    assert_eq!(est["value"].as_array().unwrap().len(), 3);
    assert!(est["loss_l2"].as_f64().unwrap() < 0.2);
    let trace = fs::read_to_string(p.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), est["iterations_used"].as_u64().unwrap() as usize + 2);
}

#[test]
fn spectral_reports_only_the_sign_free_loss() {
    let dir = tempfile::tempdir().unwrap();
    let est = json(&uem(
        &["estimate", "--estimator", "spectral", "--d", "3", "--n", "5000", "--eta", "1", "--rho", "-0.5"],
        dir.path(),
    ));
    assert!(est.get("loss_l2").is_none());
    assert!(est["loss_l0"].as_f64().unwrap() < 0.2);
}

#[test]
fn weight_estimator_needs_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["estimate", "--estimator", "em-weight", "--d", "1", "--n", "20000", "--eta", "1", "--rho", "0.6"];
    assert_eq!(uem(&base, dir.path()).status.code(), Some(2));
    let mut args = base.to_vec();
    args.extend(["--truncation", "0.95"]);
    let est = json(&uem(&args, dir.path()));
    assert!((est["value"].as_f64().unwrap() - 0.6).abs() < 0.05);
}

#[test]
fn population_commands() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let fp = json(&uem(&["population", "fixed-points", "--delta", "0.3", "--eta", "1"], p));
    let roots = fp["roots"].as_array().unwrap();
    assert!((roots[0].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(roots[1..].iter().all(|r| (-1.0..0.0).contains(&r.as_f64().unwrap())));

    let w = json(&uem(&["population", "weight-fixed-point", "--eta", "1", "--rho", "0.6", "--theta-scale", "1.5"], p));
    assert!(w["rho_sharp"].as_f64().unwrap() < 0.6);
    assert_eq!(w["below_rho_star"], true);

    let out = uem(&["population", "landscape", "--delta-grid", "0.05,0.5", "--eta-grid", "1"], p);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "delta,eta,count,roots");
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1].split(',').nth(2), Some("0"));
    assert_eq!(lines[2].split(',').nth(2), Some("1"));

    let e = json(&uem(&["population", "eval", "--eta", "1", "--delta", "0.3", "--theta", "1"], p));
    assert!((e["f"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(e["orthogonal_G"], 0.0);
}

#[test]
fn sweep_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("spec.json"),
        r#"{"d":[2],"n":[1000,4000],"eta":[1.0],"rho_star":[0.6],"trials":4,"estimators":["em","spectral"],"base_seed":1}"#,
    )
    .unwrap();
    for out_dir in ["a", "b"] {
        let out = uem(&["sweep", "--spec", "spec.json", "--trials", "1", "--base-seed", "7", "--out-dir", out_dir], p);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["sweep.csv", "summary.json"] {
        assert_eq!(fs::read(p.join("a").join(file)).unwrap(), fs::read(p.join("b").join(file)).unwrap());
    }
    let csv = fs::read_to_string(p.join("a/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    let summary: Value = serde_json::from_slice(&fs::read(p.join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert!(summary["slopes"][0].get("slope_log_error_vs_log_n").is_some());
}

#[test]
fn sweep_rejects_empty_estimator_list() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("spec.json"),
        r#"{"d":[2],"n":[100],"eta":[1.0],"rho_star":[0.5],"trials":1,"estimators":[],"base_seed":0}"#,
    )
    .unwrap();
    assert_eq!(uem(&["sweep", "--spec", "spec.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn check_prints_a_line_per_property() {
    let dir = tempfile::tempdir().unwrap();
    let out = uem(&["check"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_uem"))
        .args(["population", "eval", "--eta", "1", "--delta", "0.3", "--theta", "1"])
        .env("UEM_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_uem"))
        .args(["population", "eval", "--eta", "1", "--delta", "0.3", "--theta", "1"])
        .env("UEM_THREADS", "1")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
}

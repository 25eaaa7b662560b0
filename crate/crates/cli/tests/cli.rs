use std::process::{Command, Output};

use serde_json::Value;

fn visclimit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_visclimit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn classify_interior() {
    let out = visclimit(&["classify", "--c", "1,1,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["kind"], "InteriorJ0");
    assert_eq!(v["alpha"], 1);
    assert_eq!(v["kappa"], 1);
}

#[test]
fn fractions_are_usage_errors() {
    let out = visclimit(&["solve", "--nu", "0.02", "--c", "25/9,1/9,-2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn region_violations_exit_3() {
    let out = visclimit(&["solve", "--nu", "0.1", "--c", "1,1,-3", "--branch", "upper"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_subcommand_and_help() {
    assert_eq!(visclimit(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(visclimit(&["--help"]).status.code(), Some(0));
}

#[test]
fn solve_writes_csv() {
    let out = visclimit(&["solve", "--nu", "0.1", "--c", "1,1,0", "--branch", "upper"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("x,U,dUdx\n"));
    // the requested grid plus any points the solver adds near layers
    assert!(text.lines().count() >= 2002);
}

#[test]
fn rates_pipeline() {
    let out = visclimit(&[
        "rates",
        "--c",
        "1,1,0",
        "--branch",
        "upper",
        "--nu-grid",
        "1e-1:3e-4:8",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], true);
    assert!(v["fit"]["slope"].as_f64().unwrap() > 0.85);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# upper branch\nc = 1,1,0\nnu = 0.5\nbranch = upper\nformat = json\n",
    )
    .unwrap();
    let out = visclimit(&["solve", "--config", cfg.to_str().unwrap(), "--nu", "0.1"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json(&out)["nu"], 0.1);

    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    let out = visclimit(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fig1_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("fig1");
    let out = visclimit(&["fig1", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert!(files.len() >= 10);
    for f in files {
        assert!(out_dir.join(f["file"].as_str().unwrap()).is_file());
    }
}

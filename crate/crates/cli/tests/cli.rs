use std::path::Path;
use std::process::{Command, Output};

use spingp_core::harness::Report;

fn spingp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spingp")).args(args).output().unwrap()
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn pcf_selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = spingp(&["pcf-selftest", "--out", dir.path().to_str().unwrap(), "--seed", "11"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep = Report::read(dir.path().join("pcf-selftest_report.json")).unwrap();
    assert_eq!(rep.seed, 11);
    assert!(rep.passed());
}

#[test]
fn invalid_step_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{ "scenario": "solitonless", "dt": 1.0 }"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = spingp(&["pipeline", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert!(!out_dir.exists());
}

#[test]
fn missing_config_exits_with_error() {
    let out = spingp(&["scatter", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn soliton_command_writes_report_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("two_soliton.json");
    let out = spingp(&["soliton", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("PASS  soliton_exactness.pde_residual"));
    let rep = Report::read(dir.path().join("soliton_report.json")).unwrap();
    assert!(rep.get("cone_localization.mu").is_some());
    assert!(dir.path().join("closed_form/snapshot_00000.csv").exists());
}

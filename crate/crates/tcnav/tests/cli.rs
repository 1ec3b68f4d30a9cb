//! Exit codes and output files of the command-line tool.

use std::path::{Path, PathBuf};
use std::process::Command;

fn tcnav(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tcnav")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SHORT: &str = r#"{"duration": 3, "trajectory": {"initial_speed": 2, "segments": [{"kind": "straight", "length": 6, "speed": 2}]}}"#;

#[test]
fn run_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.json", SHORT);
    let out = dir.path().join("out");
    let o = tcnav(&["run", scenario.to_str().unwrap(), "--filter", "ehf", "--fd", "on", "--q", "20", "--n-sigma-z", "3", "--seed", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(out.join("run.csv")).unwrap();
    assert_eq!(rows.lines().count(), 302);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["settings"]["seed"], 4);
    assert_eq!(summary["settings"]["q"], 20);
    assert_eq!(summary["settings"]["filter"], "ehf");
}

#[test]
fn run_without_out_prints_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.json", SHORT);
    let o = tcnav(&["run", scenario.to_str().unwrap(), "--filter", "ekf", "--pl", "off"]);
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["epochs"], 301);
}

#[test]
fn simulate_writes_the_streams() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.json", SHORT);
    let out = dir.path().join("sim");
    assert!(tcnav(&["simulate", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
    for f in ["truth.csv", "imu.csv", "controls.csv", "gnss.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn sweep_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "base.json", SHORT);
    let spec = write(
        dir.path(),
        "sweep.json",
        r#"{"base": "base.json", "settings": [{"name": "a"}, {"name": "b", "faults": [{"kind": "imu_noise_burst", "start": 1, "stop": 2, "sigma": 5}]}],
            "q_values": [20, 40]}"#,
    );
    let out = dir.path().join("sweep");
    let o = tcnav(&["sweep", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(out.join("table2.csv")).unwrap().lines().count(), 5);
    assert_eq!(std::fs::read_to_string(out.join("table3.csv")).unwrap().lines().count(), 3);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let bad = write(dir.path(), "bad.json", r#"{"duration": -1}"#);
    let unknown = write(dir.path(), "unknown.json", r#"{"duration": 3, "colour": "red"}"#);
    let out = dir.path().join("o");
    for args in [
        vec!["run", missing.to_str().unwrap()],
        vec!["run", bad.to_str().unwrap()],
        vec!["run", unknown.to_str().unwrap()],
        vec!["simulate", bad.to_str().unwrap(), "--out", out.to_str().unwrap()],
        vec!["sweep", missing.to_str().unwrap(), "--out", out.to_str().unwrap()],
    ] {
        assert_eq!(tcnav(&args).status.code(), Some(2), "{args:?}");
    }
    let good = write(dir.path(), "s.json", SHORT);
    assert_eq!(tcnav(&["run", good.to_str().unwrap(), "--q", "1"]).status.code(), Some(2));
}

#[test]
fn bad_arguments_fail() {
    for args in [vec![], vec!["run"], vec!["run", "x.json", "--filter", "ukf"], vec!["run", "x.json", "--fd", "maybe"], vec!["fly"]] {
        let o = tcnav(&args);
        assert!(!o.status.success(), "{args:?}");
    }
}

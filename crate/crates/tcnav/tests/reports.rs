//! Accuracy indicators, summary recomputation from written rows, and run
//! determinism.

use std::path::Path;

use proptest::prelude::*;

use tcnav::report::{compute_metrics, read_rows, summarize, Window};
use tcnav::{run_scenario, RunOptions, Scenario};

fn short_burst() -> Scenario {
    let mut s = Scenario::load(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/burst.json"))).unwrap();
    s.duration = 40.0;
    s.faults = serde_json::from_str(r#"[{"kind": "imu_noise_burst", "start": 20, "stop": 25, "sigma": 10}]"#).unwrap();
    s.validate().unwrap();
    s
}

/// Smallest sample with at least 95 % of the samples at or below it.
fn p95_by_counting(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    xs.iter()
        .copied()
        .filter(|&v| xs.iter().filter(|&&x| x <= v).count() as f64 >= 0.95 * n)
        .fold(f64::INFINITY, f64::min)
}

/// Structural equality with numbers compared to a relative 1e-14 (JSON text
/// parsing is not exact to the last bit).
fn assert_close(a: &serde_json::Value, b: &serde_json::Value, path: &str) {
    use serde_json::Value;
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= 1e-14 * x.abs().max(y.abs()), "{path}: {x} vs {y}");
        }
        (Value::Array(x), Value::Array(y)) => {
            assert_eq!(x.len(), y.len(), "{path}");
            for (i, (x, y)) in x.iter().zip(y).enumerate() {
                assert_close(x, y, &format!("{path}[{i}]"));
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            assert_eq!(x.len(), y.len(), "{path}");
            for (k, v) in x {
                assert_close(v, &y[k], &format!("{path}.{k}"));
            }
        }
        _ => assert_eq!(a, b, "{path}"),
    }
}

proptest! {
    #[test]
    fn rms_squared_is_mean_squared_plus_variance(xs in prop::collection::vec(-50.0..50.0f64, 1..300)) {
        let m = compute_metrics(&xs).unwrap();
        prop_assert!((m.rms * m.rms - (m.mean * m.mean + m.sigma * m.sigma)).abs() <= 1e-9 * m.rms.max(1.0).powi(2));
    }

    #[test]
    fn p95_is_the_nearest_rank_percentile(xs in prop::collection::vec(0.0..10.0f64, 1..300)) {
        prop_assert_eq!(compute_metrics(&xs).unwrap().p95, p95_by_counting(&xs));
    }
}

#[test]
fn summary_is_recomputable_from_the_written_rows() {
    let report = run_scenario(&short_burst(), &RunOptions::default()).unwrap();
    assert!(report.summary.faults.alarm_epochs > 0);
    assert!(report.summary.pl.is_some());
    let dir = tempfile::tempdir().unwrap();
    report.write(dir.path()).unwrap();

    let rows = read_rows(&dir.path().join("run.csv")).unwrap();
    assert_eq!(rows, report.rows);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let windows: Vec<Window> = serde_json::from_value(doc["fault_windows"].clone()).unwrap();
    let divergent = doc["summary"]["divergent"].as_bool().unwrap();
    let recomputed = summarize(&rows, &windows, divergent).unwrap();
    assert_eq!(recomputed, report.summary);
    assert_close(&serde_json::to_value(&recomputed).unwrap(), &doc["summary"], "summary");
}

#[test]
fn identical_seeds_give_identical_runs() {
    let options = RunOptions { pl: Some(false), ..RunOptions::default() };
    let a = run_scenario(&short_burst(), &options).unwrap();
    let b = run_scenario(&short_burst(), &options).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.summary, b.summary);
    let c = run_scenario(&short_burst(), &RunOptions { seed: Some(99), ..options }).unwrap();
    assert_ne!(a.rows, c.rows);
}

//! Run reports: per-epoch rows, accuracy indicators and summary documents.
//!
//! `run.csv` columns, in order: `t, active_filter, est_n, est_e, est_d,
//! true_n, true_e, true_d, err_n, err_e, err_d, err_2d, err_3d, pl_n, pl_e,
//! pl_d, accel_fault, yaw_fault, switch, gamma, feasible, gnss_used,
//! gnss_rejected, f_x, accel_lo, accel_hi, w_z, yaw_lo, yaw_hi`. Positions are
//! antenna positions in the local NED frame (m); errors are estimate minus
//! truth. Columns without a value for an epoch (no PL, no measurement update,
//! fault detection off) are left empty.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{config_err, Result};

/// Mean, population standard deviation, RMS and nearest-rank 95th percentile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mean: f64,
    pub sigma: f64,
    pub rms: f64,
    pub p95: f64,
}

pub fn compute_metrics(errors: &[f64]) -> Result<Metrics> {
    if errors.is_empty() {
        return Err(config_err("metrics need at least one value"));
    }
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let sigma = (errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n).sqrt();
    let rms = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (0.95 * n).ceil() as usize;
    Ok(Metrics { mean, sigma, rms, p95: sorted[rank.max(1) - 1] })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActiveColumn {
    Main,
    Fallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchColumn {
    None,
    ToFallback,
    ToMain,
}

/// One report row per IMU epoch (the initial state is row 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub t: f64,
    pub active_filter: ActiveColumn,
    pub est_n: f64,
    pub est_e: f64,
    pub est_d: f64,
    pub true_n: f64,
    pub true_e: f64,
    pub true_d: f64,
    pub err_n: f64,
    pub err_e: f64,
    pub err_d: f64,
    pub err_2d: f64,
    pub err_3d: f64,
    pub pl_n: Option<f64>,
    pub pl_e: Option<f64>,
    pub pl_d: Option<f64>,
    pub accel_fault: bool,
    pub yaw_fault: bool,
    pub switch: SwitchColumn,
    pub gamma: Option<f64>,
    pub feasible: Option<bool>,
    pub gnss_used: usize,
    pub gnss_rejected: usize,
    pub f_x: Option<f64>,
    pub accel_lo: Option<f64>,
    pub accel_hi: Option<f64>,
    pub w_z: Option<f64>,
    pub yaw_lo: Option<f64>,
    pub yaw_hi: Option<f64>,
}

impl EpochRow {
    pub fn pl(&self) -> Option<[f64; 3]> {
        Some([self.pl_n?, self.pl_e?, self.pl_d?])
    }

    pub fn error(&self) -> [f64; 3] {
        [self.err_n, self.err_e, self.err_d]
    }

    pub fn alarm(&self) -> bool {
        self.accel_fault || self.yaw_fault
    }
}

/// PL containment rate and mean PL per NED axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlConsistency {
    pub epochs: usize,
    pub containment_rate: f64,
    pub mean_pl: [f64; 3],
}

/// Fraction of epochs whose true error lies inside the PL on every axis;
/// `None` when no row carries a PL.
pub fn pl_consistency(rows: &[EpochRow]) -> Option<PlConsistency> {
    let mut inside = 0usize;
    let mut sum = [0.0; 3];
    let mut epochs = 0usize;
    for row in rows {
        let Some(pl) = row.pl() else { continue };
        epochs += 1;
        let err = row.error();
        if (0..3).all(|a| err[a].abs() <= pl[a]) {
            inside += 1;
        }
        for a in 0..3 {
            sum[a] += pl[a];
        }
    }
    (epochs > 0).then(|| PlConsistency {
        epochs,
        containment_rate: inside as f64 / epochs as f64,
        mean_pl: sum.map(|s| s / epochs as f64),
    })
}

/// Injected IMU fault window; holds the samples ending in `(start, stop]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub stop: f64,
}

impl Window {
    pub fn contains(&self, t: f64) -> bool {
        t > self.start && t <= self.stop
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaultSummary {
    /// Epochs flagged outside every injected fault window.
    pub false_alarms: usize,
    pub alarm_epochs: usize,
    pub switches_to_fallback: usize,
    pub fallback_epochs: usize,
    /// Per injected window: time from window start to the first alarm inside it.
    pub detection_latency: Vec<Option<f64>>,
}

fn fault_summary(rows: &[EpochRow], windows: &[Window]) -> FaultSummary {
    let alarm_epochs = rows.iter().filter(|r| r.alarm()).count();
    let false_alarms = rows.iter().filter(|r| r.alarm() && !windows.iter().any(|w| w.contains(r.t))).count();
    let detection_latency =
        windows.iter().map(|w| rows.iter().find(|r| r.alarm() && w.contains(r.t)).map(|r| r.t - w.start)).collect();
    FaultSummary {
        false_alarms,
        alarm_epochs,
        switches_to_fallback: rows.iter().filter(|r| r.switch == SwitchColumn::ToFallback).count(),
        fallback_epochs: rows.iter().filter(|r| r.active_filter == ActiveColumn::Fallback).count(),
        detection_latency,
    }
}

/// Everything in the summary is a function of the rows and the fault windows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub epochs: usize,
    pub divergent: bool,
    /// Time of the last reported epoch before the run was stopped.
    pub divergence_t: Option<f64>,
    pub error_2d: Metrics,
    pub error_3d: Metrics,
    pub pl: Option<PlConsistency>,
    pub faults: FaultSummary,
    pub updates: usize,
    pub infeasible_updates: usize,
    /// Updates whose γ is larger than the previous update's.
    pub gamma_increases: usize,
    pub gnss_rejected: usize,
}

pub fn summarize(rows: &[EpochRow], windows: &[Window], divergent: bool) -> Result<Summary> {
    let e2: Vec<f64> = rows.iter().map(|r| r.err_2d).collect();
    let e3: Vec<f64> = rows.iter().map(|r| r.err_3d).collect();
    let gammas: Vec<f64> = rows.iter().filter_map(|r| r.gamma).collect();
    Ok(Summary {
        epochs: rows.len(),
        divergent,
        divergence_t: if divergent { rows.last().map(|r| r.t) } else { None },
        error_2d: compute_metrics(&e2)?,
        error_3d: compute_metrics(&e3)?,
        pl: pl_consistency(rows),
        faults: fault_summary(rows, windows),
        updates: rows.iter().filter(|r| r.feasible.is_some()).count(),
        infeasible_updates: rows.iter().filter(|r| r.feasible == Some(false)).count(),
        gamma_increases: gammas.windows(2).filter(|w| w[1] > w[0]).count(),
        gnss_rejected: rows.iter().map(|r| r.gnss_rejected).sum(),
    })
}

/// Wall-clock statistics of the error-zonotope steps (ms per IMU epoch).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub steps: usize,
    pub median_ms: f64,
    pub mean_ms: f64,
    pub max_ms: f64,
    pub total_s: f64,
}

impl RuntimeStats {
    pub fn from_seconds(samples: &[f64]) -> RuntimeStats {
        if samples.is_empty() {
            return RuntimeStats::default();
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let total: f64 = s.iter().sum();
        RuntimeStats {
            steps: s.len(),
            median_ms: s[s.len() / 2] * 1e3,
            mean_ms: total / s.len() as f64 * 1e3,
            max_ms: s[s.len() - 1] * 1e3,
            total_s: total,
        }
    }
}

/// Settings a run was made with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub seed: u64,
    pub filter: String,
    pub fd: bool,
    pub pl: bool,
    pub q: usize,
    pub n_sigma_z: f64,
    pub bounded_noise: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub settings: RunSettings,
    pub rows: Vec<EpochRow>,
    pub summary: Summary,
    pub fault_windows: Vec<Window>,
    /// Measured, hence not reproducible between runs.
    pub runtime: RuntimeStats,
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    settings: &'a RunSettings,
    summary: &'a Summary,
    fault_windows: &'a [Window],
    zonotope_runtime: &'a RuntimeStats,
}

impl RunReport {
    /// Writes `run.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("run.csv"))?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        let doc = SummaryDocument {
            settings: &self.settings,
            summary: &self.summary,
            fault_windows: &self.fault_windows,
            zonotope_runtime: &self.runtime,
        };
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&doc)?)?;
        Ok(())
    }
}

/// Reads the rows of a `run.csv`.
pub fn read_rows(path: &Path) -> Result<Vec<EpochRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

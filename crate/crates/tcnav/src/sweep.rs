//! Settings comparison (EKF against EHF under injected faults) and
//! reduction-order sweep.
//!
//! A sweep spec names a base scenario (a path relative to the spec file or an
//! inline object), the settings, the filter modes, the seeds and the reduction
//! orders. `table2.csv` holds one row per setting, filter and seed with the
//! 2D/3D accuracy indicators; `table3.csv` one row per reduction order with
//! the mean PL, containment rate and measured zonotope run time.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::pipeline::{run_on_data, RunOptions};
use crate::report::{Metrics, RunReport};
use crate::scenario::{FaultInjection, FilterChoice, Scenario};
use crate::sim::{simulate, write_csv};
use crate::{config_err, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseScenario {
    Path(PathBuf),
    Inline(Box<Scenario>),
}

/// One named variant of the base scenario; its faults are added to the base's.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Setting {
    pub name: String,
    #[serde(default)]
    pub faults: Vec<FaultInjection>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: BaseScenario,
    #[serde(default)]
    pub settings: Vec<Setting>,
    #[serde(default = "default_filters")]
    pub filters: Vec<FilterChoice>,
    /// Seeds of the settings runs; empty means the base scenario's seed.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub q_values: Vec<usize>,
    /// Filter used for the reduction-order sweep.
    #[serde(default = "default_q_filter")]
    pub q_filter: FilterChoice,
    /// Compute PLs in the settings runs as well (slower).
    #[serde(default)]
    pub settings_pl: bool,
    /// Directory of the spec file, for resolving a relative base path.
    #[serde(skip)]
    pub root: PathBuf,
}

fn default_filters() -> Vec<FilterChoice> {
    vec![FilterChoice::Ekf, FilterChoice::Ehf]
}

fn default_q_filter() -> FilterChoice {
    FilterChoice::Ehf
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<SweepSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let mut spec: SweepSpec = serde_json::from_str(&text).map_err(|e| config_err(format!("sweep spec: {e}")))?;
        spec.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        spec.base_scenario()?;
        Ok(spec)
    }

    pub fn base_scenario(&self) -> Result<Scenario> {
        let s = match &self.base {
            BaseScenario::Path(p) => Scenario::load(&self.root.join(p))?,
            BaseScenario::Inline(s) => {
                s.validate()?;
                (**s).clone()
            }
        };
        let mut names: Vec<&str> = self.settings.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_err("sweep: setting names must be unique"));
        }
        if self.filters.is_empty() && !self.settings.is_empty() {
            return Err(config_err("sweep: no filter modes given"));
        }
        Ok(s)
    }
}

/// One line of `table2.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingRow {
    pub setting: String,
    pub filter: FilterChoice,
    pub seed: u64,
    pub divergent: bool,
    pub mean_2d: f64,
    pub sigma_2d: f64,
    pub rms_2d: f64,
    pub p95_2d: f64,
    pub mean_3d: f64,
    pub sigma_3d: f64,
    pub rms_3d: f64,
    pub p95_3d: f64,
}

impl SettingRow {
    fn new(setting: &str, filter: FilterChoice, seed: u64, report: &RunReport) -> SettingRow {
        let (a, b): (Metrics, Metrics) = (report.summary.error_2d, report.summary.error_3d);
        SettingRow {
            setting: setting.to_owned(),
            filter,
            seed,
            divergent: report.summary.divergent,
            mean_2d: a.mean,
            sigma_2d: a.sigma,
            rms_2d: a.rms,
            p95_2d: a.p95,
            mean_3d: b.mean,
            sigma_3d: b.sigma,
            rms_3d: b.rms,
            p95_3d: b.p95,
        }
    }
}

/// One line of `table3.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub q: usize,
    pub mean_pl_n: f64,
    pub mean_pl_e: f64,
    pub mean_pl_d: f64,
    pub containment_rate: f64,
    pub runtime_s: f64,
    pub median_step_ms: f64,
}

/// Settings runs: every setting under every filter mode and seed. A setting
/// shares one simulation between the filter modes.
pub fn settings_table(spec: &SweepSpec) -> Result<Vec<SettingRow>> {
    let base = spec.base_scenario()?;
    let seeds = if spec.seeds.is_empty() { vec![base.seed] } else { spec.seeds.clone() };
    let mut rows = Vec::new();
    for setting in &spec.settings {
        for &seed in &seeds {
            let mut scenario = base.clone();
            scenario.seed = seed;
            scenario.faults.extend(setting.faults.iter().cloned());
            scenario.filter.pl = spec.settings_pl;
            scenario.validate()?;
            let data = simulate(&scenario)?;
            for &filter in &spec.filters {
                let s = RunOptions { filter: Some(filter), ..RunOptions::default() }.apply(&scenario)?;
                rows.push(SettingRow::new(&setting.name, filter, seed, &run_on_data(&s, &data)?));
            }
        }
    }
    Ok(rows)
}

/// Reduction-order sweep on one simulation of the base scenario.
pub fn order_table(spec: &SweepSpec) -> Result<Vec<OrderRow>> {
    let base = spec.base_scenario()?;
    let data = simulate(&base)?;
    spec.q_values
        .iter()
        .map(|&q| {
            let options = RunOptions { filter: Some(spec.q_filter), pl: Some(true), q: Some(q), ..RunOptions::default() };
            let report = run_on_data(&options.apply(&base)?, &data)?;
            let pl = report.summary.pl.ok_or_else(|| config_err("sweep: run produced no protection levels"))?;
            Ok(OrderRow {
                q,
                mean_pl_n: pl.mean_pl[0],
                mean_pl_e: pl.mean_pl[1],
                mean_pl_d: pl.mean_pl[2],
                containment_rate: pl.containment_rate,
                runtime_s: report.runtime.total_s,
                median_step_ms: report.runtime.median_ms,
            })
        })
        .collect()
}

/// Runs both parts of the sweep and writes `table2.csv` and `table3.csv`.
pub fn run_sweep(spec: &SweepSpec, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let header = ["setting", "filter", "seed", "divergent", "mean_2d", "sigma_2d", "rms_2d", "p95_2d", "mean_3d", "sigma_3d", "rms_3d", "p95_3d"];
    write_csv(&out.join("table2.csv"), &header, settings_table(spec)?)?;
    let header = ["q", "mean_pl_n", "mean_pl_e", "mean_pl_d", "containment_rate", "runtime_s", "median_step_ms"];
    write_csv(&out.join("table3.csv"), &header, order_table(spec)?)
}

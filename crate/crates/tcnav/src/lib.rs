//! Simulation, end-to-end pipeline and reporting around `tcnav-core`.
//!
//! - [`scenario`]: the JSON scenario schema and its validation.
//! - [`sim`]: ground truth, IMU, GNSS and control-signal synthesis.
//! - [`pipeline`]: main filter + protection level + fault detection with the
//!   fallback filter, producing a [`report::RunReport`].
//! - [`report`]: per-epoch rows, summary metrics, CSV/JSON output.
//! - [`sweep`]: EKF/EHF settings comparison and reduction-order sweep.

pub mod pipeline;
pub mod report;
pub mod scenario;
pub mod sim;
pub mod sweep;

pub use pipeline::{run_scenario, RunOptions};
pub use report::RunReport;
pub use scenario::Scenario;

/// Errors surfaced by configuration loading and runs.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] tcnav_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

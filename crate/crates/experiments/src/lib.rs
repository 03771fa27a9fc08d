//! Numerical experiments for harmonic analysis in the Bessel setting: weighted
//! norm scans, kernel bound reports, sparse domination and kernel-family checks.
//!
//! Every command produces a [`Report`]; the binary writes it as `report.csv`,
//! `summary.json` and `run.log`.

pub mod config;
pub mod corollaries;
pub mod kernel_report;
pub mod report;
pub mod scans;
pub mod setup;
pub mod sparse_demo;

pub use config::Config;
pub use report::{Check, Report};
pub use setup::{OperatorKind, Setup};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] bessel_harmonic::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

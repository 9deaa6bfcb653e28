//! Scenario harness: config files, plant/regression builders, the run loop,
//! parameter sweeps, paired comparisons, and CSV/metrics emission.

mod checks;
mod config;
mod diagnose;
mod runner;
mod scenario;
mod sweep;

pub use checks::{independence_decay, DecayCheck};
pub use config::{
    load_config, parse_config, EstimatorCfg, GridCfg, Harmonic, InputCfg, NoiseCfg, OutputCfg,
    PlantCfg, ScenarioConfig, SweepParam,
};
pub use diagnose::{diagnose, DiagnosticsReport, RankCheck};
pub use runner::{
    compute_metrics, run_scenario, write_run, Metrics, ObserverRow, RunResult, TelemetryRow,
};
pub use scenario::{build_first_order, build_oscillator, BuiltLre};
pub use sweep::{compare, sweep, write_sweep, CompareReport, SweepRow};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Config-file problems; the list is exhaustive, not first-failure.
    #[error("invalid config:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("assumption check failed: {0}")]
    Assumption(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("run failed: {0}")]
    Run(String),
}

impl From<crate::regext::RegextError> for HarnessError {
    fn from(e: crate::regext::RegextError) -> Self {
        HarnessError::Run(e.to_string())
    }
}

impl From<crate::sigproc::SigError> for HarnessError {
    fn from(e: crate::sigproc::SigError) -> Self {
        HarnessError::Run(e.to_string())
    }
}

impl From<crate::estimators::EstError> for HarnessError {
    fn from(e: crate::estimators::EstError) -> Self {
        HarnessError::Run(e.to_string())
    }
}

impl From<crate::gpebo::ObserverError> for HarnessError {
    fn from(e: crate::gpebo::ObserverError) -> Self {
        HarnessError::Run(e.to_string())
    }
}

impl From<crate::matcore::MatError> for HarnessError {
    fn from(e: crate::matcore::MatError) -> Self {
        HarnessError::Run(e.to_string())
    }
}

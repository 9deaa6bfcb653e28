//! Signal layer: uniform time grids, sampled vector traces, stable rational
//! filters discretized by fixed-step RK4, seeded band-limited noise, and the
//! empirical diagnostics (autocovariance, excitation bounds, windowed
//! cross-correlation) used to check scenario assumptions.

mod diag;
mod filter;
mod noise;
mod trace;

pub use diag::{cross_correlation, empirical_autocovariance, pe_bounds, PeScan};
pub use filter::{MinimumPhase, RationalFilter};
pub use noise::{band_limited_noise, HeldNoise, NoiseSpec};
pub use trace::{read_trace_csv, write_trace_csv, SignalTrace, TimeGrid};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SigError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error(
        "unstable filter denominator; root at {root_re}+{root_im}j not in the open left half-plane"
    )]
    UnstableDenominator { root_re: f64, root_im: f64 },
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// Indexed loops over parallel arrays mirror the matrix arithmetic they
// implement, and negated comparisons are NaN-rejecting domain guards.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

//! Online parameter estimation for linear regression equations corrupted by
//! perturbations and measurement noise, built around a sliding-window
//! regressor extension and annihilator-based estimation laws, plus an
//! initial-condition observer for state-affine systems and a scenario
//! harness with CSV telemetry.
//!
//! Module map:
//! - [`matcore`] — small dense matrix kernel (determinant, adjugate, rank).
//! - [`sigproc`] — time grids, traces, rational filters, reproducible noise,
//!   and stationarity / excitation / independence diagnostics.
//! - [`regext`] — measurable regression streams and the sliding-window
//!   extension producing averaged normal-equation data.
//! - [`estimators`] — estimation laws A/B/C and annihilator construction.
//! - [`gpebo`] — initial-condition observer for state-affine systems, with a
//!   gradient-based baseline for comparison.
//! - [`harness`] — scenario configs, runner, sweeps, comparisons, CSV output.

pub mod estimators;
pub mod gpebo;
pub mod harness;
pub mod matcore;
pub mod par;
pub mod regext;
pub mod sigproc;

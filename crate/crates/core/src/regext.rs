//! Measurable regression streams and the sliding-window regressor extension.
//!
//! A stream pairs a vector regressor trace with a scalar regressand trace,
//! optionally carrying ground-truth parameters and the perturbation trace
//! for diagnostics. [`WindowState`] turns the stream into averaged
//! normal-equation data: the windowed means of the regressor outer product
//! and the regressor-regressand product, updated recursively from a delay
//! buffer of raw integrand samples.

use thiserror::Error;

use crate::matcore::{MatError, Matrix};
use crate::sigproc::{RationalFilter, SigError, SignalTrace};

#[derive(Debug, Error)]
pub enum RegextError {
    #[error("stream inconsistency: {0}")]
    Inconsistent(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("diagnostic unavailable: {0}")]
    DiagnosticUnavailable(String),
    #[error(transparent)]
    Signal(#[from] SigError),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// A measurable linear regression stream: regressand samples equal
/// `regressorᵀ · theta + perturbation` when the optional ground truth is
/// attached (checked at construction).
#[derive(Debug, Clone)]
pub struct LreStream {
    regressor: SignalTrace,
    regressand: SignalTrace,
    theta: Option<Vec<f64>>,
    perturbation: Option<SignalTrace>,
}

impl LreStream {
    pub fn new(regressor: SignalTrace, regressand: SignalTrace) -> Result<Self, RegextError> {
        if regressand.dim() != 1 {
            return Err(RegextError::Inconsistent(
                "regressand must be scalar".into(),
            ));
        }
        if regressor.grid() != regressand.grid() {
            return Err(RegextError::Inconsistent(
                "regressor and regressand on differing grids".into(),
            ));
        }
        Ok(Self {
            regressor,
            regressand,
            theta: None,
            perturbation: None,
        })
    }

    /// Attach ground truth and the perturbation trace. Verifies the stream
    /// identity `regressand = regressorᵀ theta + perturbation` at every
    /// sample to 1e-9 absolute.
    pub fn with_truth(
        mut self,
        theta: Vec<f64>,
        perturbation: SignalTrace,
    ) -> Result<Self, RegextError> {
        if theta.len() != self.regressor.dim() {
            return Err(RegextError::Inconsistent(
                "theta length != regressor dim".into(),
            ));
        }
        if perturbation.grid() != self.regressor.grid() || perturbation.dim() != 1 {
            return Err(RegextError::Inconsistent("perturbation trace shape".into()));
        }
        for k in 0..self.regressor.grid().n_steps() {
            let phi = self.regressor.sample(k);
            let predicted: f64 =
                phi.iter().zip(&theta).map(|(p, th)| p * th).sum::<f64>() + perturbation.value(k);
            let z = self.regressand.value(k);
            if (predicted - z).abs() > 1e-9 {
                return Err(RegextError::Inconsistent(format!(
                    "regression identity violated at sample {k}: |{predicted} - {z}| > 1e-9"
                )));
            }
        }
        self.theta = Some(theta);
        self.perturbation = Some(perturbation);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.regressor.dim()
    }

    pub fn regressor(&self) -> &SignalTrace {
        &self.regressor
    }

    pub fn regressand(&self) -> &SignalTrace {
        &self.regressand
    }

    pub fn theta(&self) -> Option<&[f64]> {
        self.theta.as_deref()
    }

    pub fn perturbation(&self) -> Option<&SignalTrace> {
        self.perturbation.as_ref()
    }
}

/// Snap a window width to a whole number of grid steps. Returns the snapped
/// width, the lag in steps, and whether snapping moved the value.
pub fn snap_window(window: f64, h: f64) -> Result<(f64, usize, bool), RegextError> {
    if !(window > 0.0) {
        return Err(RegextError::Config(format!("window {window} <= 0")));
    }
    let lag = (window / h).round() as usize;
    if lag < 1 {
        return Err(RegextError::Config(format!(
            "window {window} shorter than one grid step {h}"
        )));
    }
    let snapped = lag as f64 * h;
    let moved = (snapped - window).abs() > 1e-9 * window.max(1.0);
    Ok((snapped, lag, moved))
}

/// Sliding-window extension state.
///
/// Maintains `cross_avg = (1/T)∫ φ̂ ẑ` and `outer_avg = (1/T)∫ φ̂ φ̂ᵀ` over
/// the trailing window `[max(t0, t-T), t]`, both zero-initialized at t0.
/// Each grid step adds the trapezoid panel entering the window and removes
/// the panel leaving it, with the pre-window delayed integrand defined as
/// exactly zero. The buffer stores raw integrand samples, and the state is
/// recomputed from the buffer every 10^6 steps to arrest drift.
#[derive(Debug, Clone)]
pub struct WindowState {
    dim: usize,
    window: f64,
    lag: usize,
    step: f64,
    /// ring of (φ̂ ẑ, φ̂ φ̂ᵀ) integrand samples for the trailing window
    buf_cross: Vec<Vec<f64>>,
    buf_outer: Vec<Matrix>,
    head: usize,
    filled: usize,
    steps_taken: usize,
    cross_avg: Vec<f64>,
    outer_avg: Matrix,
}

const RESUM_PERIOD: usize = 1_000_000;

impl WindowState {
    /// `window` must already be snapped to the grid (see [`snap_window`]).
    pub fn new(dim: usize, window: f64, step: f64) -> Result<Self, RegextError> {
        let (snapped, lag, moved) = snap_window(window, step)?;
        if moved {
            return Err(RegextError::Config(format!(
                "window {window} is not a grid multiple; snap it to {snapped} first"
            )));
        }
        Ok(Self {
            dim,
            window: snapped,
            lag,
            step,
            buf_cross: Vec::with_capacity(lag + 2),
            buf_outer: Vec::with_capacity(lag + 2),
            head: 0,
            filled: 0,
            steps_taken: 0,
            cross_avg: vec![0.0; dim],
            outer_avg: Matrix::zeros(dim, dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn cross_avg(&self) -> &[f64] {
        &self.cross_avg
    }

    pub fn outer_avg(&self) -> &Matrix {
        &self.outer_avg
    }

    /// Consume the sample at the next grid point and advance the averages by
    /// one step. The first call only records the initial integrand.
    pub fn push(&mut self, regressor_now: &[f64], regressand_now: f64) -> Result<(), RegextError> {
        if regressor_now.len() != self.dim {
            return Err(RegextError::Config(format!(
                "regressor sample dim {} != window dim {}",
                regressor_now.len(),
                self.dim
            )));
        }
        let cross: Vec<f64> = regressor_now.iter().map(|p| p * regressand_now).collect();
        let outer = Matrix::outer(regressor_now, regressor_now);
        self.store(cross, outer);
        if self.filled == 1 {
            return Ok(()); // initial sample; averages stay at the zero initial condition
        }
        let half = self.step / (2.0 * self.window);
        let newest = self.ring_index(0);
        let prev = self.ring_index(1);
        // panel entering the window
        for i in 0..self.dim {
            self.cross_avg[i] += half * (self.buf_cross[newest][i] + self.buf_cross[prev][i]);
        }
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.outer_avg[(i, j)] +=
                    half * (self.buf_outer[newest][(i, j)] + self.buf_outer[prev][(i, j)]);
            }
        }
        // panel falling out of the window (integrand is zero before t0)
        if self.filled == self.lag + 2 {
            let oldest = self.ring_index(self.lag + 1);
            let second = self.ring_index(self.lag);
            for i in 0..self.dim {
                self.cross_avg[i] -= half * (self.buf_cross[oldest][i] + self.buf_cross[second][i]);
            }
            for i in 0..self.dim {
                for j in 0..self.dim {
                    self.outer_avg[(i, j)] -=
                        half * (self.buf_outer[oldest][(i, j)] + self.buf_outer[second][(i, j)]);
                }
            }
            self.filled -= 1;
        }
        self.steps_taken += 1;
        if self.steps_taken.is_multiple_of(RESUM_PERIOD) {
            self.recompute_from_buffer();
        }
        Ok(())
    }

    fn store(&mut self, cross: Vec<f64>, outer: Matrix) {
        if self.buf_cross.len() < self.lag + 2 {
            self.buf_cross.push(cross);
            self.buf_outer.push(outer);
            self.head = self.buf_cross.len() - 1;
        } else {
            self.head = (self.head + 1) % self.buf_cross.len();
            self.buf_cross[self.head] = cross;
            self.buf_outer[self.head] = outer;
        }
        self.filled = (self.filled + 1).min(self.lag + 2);
    }

    /// Index into the ring, `age` steps behind the newest sample.
    fn ring_index(&self, age: usize) -> usize {
        let len = self.buf_cross.len();
        (self.head + len - age % len) % len
    }

    /// Rebuild the averages by direct trapezoidal summation over the buffer.
    pub fn recompute_from_buffer(&mut self) {
        let count = self.filled;
        if count < 2 {
            return;
        }
        let mut cross = vec![0.0; self.dim];
        let mut outer = Matrix::zeros(self.dim, self.dim);
        for age in 0..count {
            let idx = self.ring_index(age);
            let w = if age == 0 || age == count - 1 {
                0.5
            } else {
                1.0
            };
            for i in 0..self.dim {
                cross[i] += w * self.buf_cross[idx][i];
            }
            for i in 0..self.dim {
                for j in 0..self.dim {
                    outer[(i, j)] += w * self.buf_outer[idx][(i, j)];
                }
            }
        }
        let scale = self.step / self.window;
        self.cross_avg = cross.iter().map(|v| v * scale).collect();
        self.outer_avg = outer.scale(scale);
    }
}

/// Build the filtered-difference extension of a stream: the output regressor
/// stacks the original on top of its per-component filtered copy, and the
/// output regressand is the difference between the original regressand and
/// its filtered copy. Ground truth maps through `[I; -I]`, doubling the
/// parameter vector.
pub fn extend_regressor(
    lre: &LreStream,
    filter: &RationalFilter,
) -> Result<LreStream, RegextError> {
    use crate::sigproc::MinimumPhase;
    if filter.minimum_phase() == MinimumPhase::No {
        return Err(RegextError::Config(
            "extension filter must be minimum-phase (zeros in the closed left half-plane)".into(),
        ));
    }
    let n = lre.dim();
    let mut parts: Vec<SignalTrace> = Vec::with_capacity(2 * n);
    for i in 0..n {
        parts.push(lre.regressor().component(i));
    }
    for i in 0..n {
        parts.push(filter.apply(&lre.regressor().component(i))?);
    }
    let refs: Vec<&SignalTrace> = parts.iter().collect();
    let extended_regressor = SignalTrace::stack(&refs)?;

    let z_f = filter.apply(lre.regressand())?;
    let grid = *lre.regressand().grid();
    let diff: Vec<f64> = (0..grid.n_steps())
        .map(|k| lre.regressand().value(k) - z_f.value(k))
        .collect();
    let extended_regressand = SignalTrace::new(grid, 1, diff)?;

    let out = LreStream::new(extended_regressor, extended_regressand)?;
    match lre.theta() {
        None => Ok(out),
        Some(theta) => {
            // extended truth [theta; -theta]; residual perturbation keeps the identity exact
            let mut big = theta.to_vec();
            big.extend(theta.iter().map(|v| -v));
            let resid: Vec<f64> = (0..grid.n_steps())
                .map(|k| {
                    let phi = out.regressor().sample(k);
                    out.regressand().value(k)
                        - phi.iter().zip(&big).map(|(p, th)| p * th).sum::<f64>()
                })
                .collect();
            let w = SignalTrace::new(grid, 1, resid)?;
            out.with_truth(big, w)
        }
    }
}

/// Extension direction map `[I; -I]` relating original to extended
/// parameters.
pub fn extension_map(n: usize) -> Matrix {
    let mut d = Matrix::zeros(2 * n, n);
    for i in 0..n {
        d[(i, i)] = 1.0;
        d[(n + i, i)] = -1.0;
    }
    d
}

/// Diagnostic split of the windowed perturbation average into its projections
/// onto the independent and dependent regressor directions. Requires the
/// stream to carry the perturbation trace; never used by the estimation laws.
pub fn perturbation_split(
    lre: &LreStream,
    l1: &Matrix,
    l2: Option<&Matrix>,
    t: f64,
    window: f64,
) -> Result<(Vec<f64>, Vec<f64>), RegextError> {
    let w_trace = lre.perturbation().ok_or_else(|| {
        RegextError::DiagnosticUnavailable("stream carries no perturbation trace".into())
    })?;
    let avg = crate::sigproc::cross_correlation(lre.regressor(), w_trace, t, window)?;
    let w: Vec<f64> = (0..lre.dim()).map(|i| avg[(i, 0)]).collect();
    let project = |l: &Matrix| -> Result<Vec<f64>, RegextError> {
        let lt_w = l.transpose().mul_vec(&w)?;
        Ok(l.mul_vec(&lt_w)?)
    };
    let w1 = project(l1)?;
    let w2 = match l2 {
        Some(l2) => project(l2)?,
        None => vec![0.0; lre.dim()],
    };
    Ok((w1, w2))
}

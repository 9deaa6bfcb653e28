//! Empirical stationarity / excitation / independence diagnostics. All
//! windowed averages use trapezoidal quadrature on the trace grid, matching
//! the accuracy order of the fixed-step simulator that produces the traces.

use crate::matcore::{sym_eigenvalues, Matrix};
use crate::par;

use super::{SigError, SignalTrace};

/// Windowed average of the outer product `x xᵀ` over
/// `[max(t0, t - window), t]`, normalized by the full window width.
pub fn empirical_autocovariance(x: &SignalTrace, t: f64, window: f64) -> Result<Matrix, SigError> {
    if !(window > 0.0) {
        return Err(SigError::Range(format!("window {window} <= 0")));
    }
    let grid = x.grid();
    let hi = grid.index_of(t)?;
    let lo_t = (t - window).max(grid.t0());
    let lo = grid.index_of(lo_t)?;
    Ok(windowed_outer(x, x, lo, hi, window))
}

/// Windowed average of `f gᵀ` over `[max(t0, t - window), t]`. The caller
/// classifies independence (decay to zero as the window grows) versus
/// dependence (convergence to a nonzero constant).
pub fn cross_correlation(
    f: &SignalTrace,
    g: &SignalTrace,
    t: f64,
    window: f64,
) -> Result<Matrix, SigError> {
    if f.grid() != g.grid() {
        return Err(SigError::Dimension(
            "cross_correlation on differing grids".into(),
        ));
    }
    if !(window > 0.0) {
        return Err(SigError::Range(format!("window {window} <= 0")));
    }
    let grid = f.grid();
    let hi = grid.index_of(t)?;
    let lo_t = (t - window).max(grid.t0());
    let lo = grid.index_of(lo_t)?;
    Ok(windowed_outer(f, g, lo, hi, window))
}

fn windowed_outer(f: &SignalTrace, g: &SignalTrace, lo: usize, hi: usize, window: f64) -> Matrix {
    let (n, m) = (f.dim(), g.dim());
    let mut acc = Matrix::zeros(n, m);
    if hi == lo {
        return acc;
    }
    let h = f.grid().step();
    for k in lo..=hi {
        // trapezoidal end-point weights
        let w = if k == lo || k == hi { 0.5 } else { 1.0 };
        let fs = f.sample(k);
        let gs = g.sample(k);
        for i in 0..n {
            let fi = w * fs[i];
            if fi == 0.0 {
                continue;
            }
            for j in 0..m {
                acc[(i, j)] += fi * gs[j];
            }
        }
    }
    acc.scale(h / window)
}

/// Result of a sliding excitation scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeScan {
    /// Smallest windowed-average eigenvalue over all scanned start times.
    pub alpha_lower: f64,
    /// Largest windowed-average eigenvalue over all scanned start times.
    pub alpha_upper: f64,
}

/// Scan windowed outer-product averages `(1/T)∫_s^{s+T} x xᵀ` over sliding
/// start times and report the extreme eigenvalues. `alpha_lower > 0`
/// certifies persistent excitation empirically at this window width.
///
/// The trace must be at least two windows long. Start times are decimated to
/// at most ~2048 positions on long traces; eigenvalue extraction per start
/// runs through [`par::map`].
pub fn pe_bounds(x: &SignalTrace, window: f64) -> Result<PeScan, SigError> {
    let grid = x.grid();
    let h = grid.step();
    let total = grid.t_end() - grid.t0();
    if !(window > 0.0) {
        return Err(SigError::Range(format!("window {window} <= 0")));
    }
    if total < 2.0 * window {
        return Err(SigError::Range(format!(
            "trace span {total} shorter than two windows ({window})"
        )));
    }
    let w_steps = (window / h).round() as usize;
    if w_steps < 2 {
        return Err(SigError::Range("window shorter than two grid steps".into()));
    }
    let n = x.dim();
    let steps = grid.n_steps();

    // prefix[k] = trapezoid integral of x xᵀ over [t0, t_k], packed row-major
    let mut prefix = vec![0.0; steps * n * n];
    let mut prev = outer_flat(x.sample(0), n);
    for k in 1..steps {
        let cur = outer_flat(x.sample(k), n);
        let base = (k - 1) * n * n;
        for e in 0..n * n {
            prefix[k * n * n + e] = prefix[base + e] + 0.5 * h * (prev[e] + cur[e]);
        }
        prev = cur;
    }

    let last_start = steps - 1 - w_steps;
    let stride = (last_start / 2048).max(1);
    let mut starts: Vec<usize> = (0..=last_start).step_by(stride).collect();
    if *starts.last().unwrap() != last_start {
        starts.push(last_start);
    }
    let eigs = par::map(starts, |s| {
        let e = s + w_steps;
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] =
                    (prefix[e * n * n + i * n + j] - prefix[s * n * n + i * n + j]) / window;
            }
        }
        let ev = sym_eigenvalues(&m).expect("square");
        (ev[0], ev[n - 1])
    });
    let mut scan = PeScan {
        alpha_lower: f64::INFINITY,
        alpha_upper: f64::NEG_INFINITY,
    };
    for (lo, hi) in eigs {
        scan.alpha_lower = scan.alpha_lower.min(lo);
        scan.alpha_upper = scan.alpha_upper.max(hi);
    }
    // clamp round-off negatives on rank-deficient averages
    if scan.alpha_lower.abs() < 1e-12 {
        scan.alpha_lower = scan.alpha_lower.max(0.0);
    }
    Ok(scan)
}

fn outer_flat(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = v[i] * v[j];
        }
    }
    out
}

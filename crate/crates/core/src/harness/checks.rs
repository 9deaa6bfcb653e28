//! Shared empirical assumption checks. Windowed cross-correlations oscillate
//! with the window phase, so decay is measured on an rms over several end
//! times rather than a single evaluation.

use crate::sigproc::{cross_correlation, SignalTrace};

/// Outcome of an independence-decay measurement between a regressor element
/// and the perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayCheck {
    /// rms magnitudes at the window and at four windows.
    Measured { at_window: f64, at_four: f64 },
    /// The horizon cannot hold four windows; nothing can be concluded.
    Inconclusive,
}

impl DecayCheck {
    /// Decay observed: the wide-window magnitude dropped to 3/4 or is
    /// negligible outright.
    pub fn decays(&self) -> bool {
        match self {
            DecayCheck::Measured { at_window, at_four } => {
                *at_four <= 0.75 * *at_window || *at_four <= 1e-3
            }
            DecayCheck::Inconclusive => true,
        }
    }
}

/// rms of the windowed cross-correlation magnitude over eight end times
/// spread across the usable tail of the trace.
fn correlation_rms(f: &SignalTrace, g: &SignalTrace, window: f64) -> f64 {
    let grid = f.grid();
    let t_lo = grid.t0() + window;
    let t_hi = grid.t_end();
    let mut acc = 0.0;
    let count = 8;
    for i in 0..count {
        let te = t_lo + (t_hi - t_lo) * (i as f64 + 1.0) / count as f64;
        let c = cross_correlation(f, g, te, window).expect("within grid");
        let m = c.max_abs();
        acc += m * m;
    }
    (acc / count as f64).sqrt()
}

/// Measure the decay of the windowed cross-correlation between `f` and `g`
/// when the window widens from `window` to four windows.
pub fn independence_decay(f: &SignalTrace, g: &SignalTrace, window: f64) -> DecayCheck {
    let grid = f.grid();
    let span = grid.t_end() - grid.t0();
    if span < 4.0 * window {
        return DecayCheck::Inconclusive;
    }
    DecayCheck::Measured {
        at_window: correlation_rms(f, g, window),
        at_four: correlation_rms(f, g, 4.0 * window),
    }
}

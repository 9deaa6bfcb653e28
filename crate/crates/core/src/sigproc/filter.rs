use super::{SigError, SignalTrace};

/// Minimum-phase classification of a rational filter's numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimumPhase {
    /// All zeros strictly in the open left half-plane (or no zeros).
    Strict,
    /// Zeros in the closed left half-plane with at least one on the axis
    /// (e.g. a differentiator zero at the origin). Usable, but flagged.
    BoundaryZero,
    /// At least one zero in the open right half-plane.
    No,
}

/// Proper rational transfer function with a Hurwitz denominator, realized in
/// controllable canonical form and integrated by fixed-step RK4 with linear
/// interpolation of the input inside each step.
///
/// Coefficients are stored in descending powers of s with the denominator
/// normalized monic. Construction rejects unstable denominators; zeros on
/// the imaginary axis are allowed and reported via [`MinimumPhase`].
#[derive(Debug, Clone)]
pub struct RationalFilter {
    /// Numerator, descending powers, padded to denominator length.
    num: Vec<f64>,
    /// Monic denominator, descending powers.
    den: Vec<f64>,
    /// Direct feedthrough (leading numerator coefficient after normalization).
    feedthrough: f64,
    /// Output row of the canonical realization, ascending state order.
    output_row: Vec<f64>,
    minimum_phase: MinimumPhase,
}

impl RationalFilter {
    pub fn new(num: &[f64], den: &[f64]) -> Result<Self, SigError> {
        let den: Vec<f64> = trim_leading_zeros(den);
        if den.is_empty() {
            return Err(SigError::InvalidFilter("zero denominator".into()));
        }
        let lead = den[0];
        let den: Vec<f64> = den.iter().map(|c| c / lead).collect();
        let order = den.len() - 1;
        let num_t = trim_leading_zeros(num);
        if num_t.len() > den.len() {
            return Err(SigError::InvalidFilter(
                "numerator degree exceeds denominator degree".into(),
            ));
        }
        let mut num_full = vec![0.0; den.len() - num_t.len()];
        num_full.extend(num_t.iter().map(|c| c / lead));

        if order > 0 {
            for root in polynomial_roots(&den) {
                if root.0 >= -1e-9 {
                    return Err(SigError::UnstableDenominator {
                        root_re: root.0,
                        root_im: root.1,
                    });
                }
            }
        }
        let minimum_phase = classify_zeros(&num_full);

        let feedthrough = num_full[0];
        // y = C x + D u with residual numerator c(s) = num(s) - D * den(s)
        let mut output_row = vec![0.0; order];
        for i in 0..order {
            // coefficient of s^i
            let idx = den.len() - 1 - i;
            output_row[i] = num_full[idx] - feedthrough * den[idx];
        }
        Ok(Self {
            num: num_full,
            den,
            feedthrough,
            output_row,
            minimum_phase,
        })
    }

    /// First-order lag `1 / (k s + 1)`.
    pub fn lag(k: f64) -> Result<Self, SigError> {
        Self::new(&[1.0], &[k, 1.0])
    }

    /// Band-limited differentiator `s / (k s + 1)`.
    pub fn washout(k: f64) -> Result<Self, SigError> {
        Self::new(&[1.0, 0.0], &[k, 1.0])
    }

    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    pub fn numerator(&self) -> &[f64] {
        &self.num
    }

    pub fn denominator(&self) -> &[f64] {
        &self.den
    }

    pub fn minimum_phase(&self) -> MinimumPhase {
        self.minimum_phase
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(|c| *c == 0.0)
    }

    /// Frequency response at `s = j omega`: returns (gain, phase).
    pub fn frequency_response(&self, omega: f64) -> (f64, f64) {
        let num = eval_poly_jw(&self.num, omega);
        let den = eval_poly_jw(&self.den, omega);
        let gain = (num.0 * num.0 + num.1 * num.1).sqrt() / (den.0 * den.0 + den.1 * den.1).sqrt();
        let phase = num.1.atan2(num.0) - den.1.atan2(den.0);
        (gain, phase)
    }

    fn state_derivative(&self, state: &[f64], u: f64, out: &mut [f64]) {
        let n = state.len();
        out[..n - 1].copy_from_slice(&state[1..]);
        let mut top = u;
        for i in 0..n {
            // den = [1, d_{n-1}, ..., d_0]; coefficient of s^i is den[n - i]
            top -= self.den[n - i] * state[i];
        }
        out[n - 1] = top;
    }

    /// Run the filter over a scalar trace from zero initial state, producing
    /// an output trace on the same grid.
    pub fn apply(&self, input: &SignalTrace) -> Result<SignalTrace, SigError> {
        if input.dim() != 1 {
            return Err(SigError::Dimension(
                "filter input must be one-dimensional".into(),
            ));
        }
        let grid = *input.grid();
        let n = self.order();
        let steps = grid.n_steps();
        let mut out = Vec::with_capacity(steps);
        if n == 0 {
            for k in 0..steps {
                out.push(self.feedthrough * input.value(k));
            }
            return SignalTrace::new(grid, 1, out);
        }
        let h = grid.step();
        let mut state = vec![0.0; n];
        let mut k1 = vec![0.0; n];
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        let emit = |state: &[f64], u: f64| -> f64 {
            let mut y = self.feedthrough * u;
            for i in 0..n {
                y += self.output_row[i] * state[i];
            }
            y
        };
        out.push(emit(&state, input.value(0)));
        for k in 0..steps - 1 {
            let u0 = input.value(k);
            let u1 = input.value(k + 1);
            let um = 0.5 * (u0 + u1);
            self.state_derivative(&state, u0, &mut k1);
            for i in 0..n {
                tmp[i] = state[i] + 0.5 * h * k1[i];
            }
            self.state_derivative(&tmp, um, &mut k2);
            for i in 0..n {
                tmp[i] = state[i] + 0.5 * h * k2[i];
            }
            self.state_derivative(&tmp, um, &mut k3);
            for i in 0..n {
                tmp[i] = state[i] + h * k3[i];
            }
            self.state_derivative(&tmp, u1, &mut k4);
            for i in 0..n {
                state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            out.push(emit(&state, u1));
        }
        SignalTrace::new(grid, 1, out)
    }
}

fn trim_leading_zeros(p: &[f64]) -> Vec<f64> {
    let first = p.iter().position(|c| *c != 0.0);
    match first {
        Some(i) => p[i..].to_vec(),
        None => Vec::new(),
    }
}

fn classify_zeros(num: &[f64]) -> MinimumPhase {
    let t = trim_leading_zeros(num);
    if t.len() <= 1 {
        return MinimumPhase::Strict;
    }
    let monic: Vec<f64> = t.iter().map(|c| c / t[0]).collect();
    let mut boundary = false;
    for (re, im) in polynomial_roots(&monic) {
        if re > 1e-9 {
            return MinimumPhase::No;
        }
        if re.abs() <= 1e-9 {
            boundary = true;
        }
        let _ = im;
    }
    if boundary {
        MinimumPhase::BoundaryZero
    } else {
        MinimumPhase::Strict
    }
}

fn eval_poly_jw(p: &[f64], omega: f64) -> (f64, f64) {
    // Horner evaluation at s = j*omega
    let mut re = 0.0;
    let mut im = 0.0;
    for &c in p {
        let nre = -im * omega + c;
        let nim = re * omega;
        re = nre;
        im = nim;
    }
    (re, im)
}

/// Roots of a monic real polynomial (descending coefficients) by the
/// Durand-Kerner iteration. Adequate for the low orders used here.
pub fn polynomial_roots(monic: &[f64]) -> Vec<(f64, f64)> {
    let deg = monic.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    if deg == 1 {
        return vec![(-monic[1], 0.0)];
    }
    let radius = 1.0 + monic.iter().skip(1).fold(0.0f64, |m, c| m.max(c.abs()));
    // deterministic non-real seed angles
    let mut roots: Vec<(f64, f64)> = (0..deg)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64 + 0.4;
            (radius * ang.cos(), radius * ang.sin())
        })
        .collect();
    let eval = |z: (f64, f64)| -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for &c in monic {
            let nre = re * z.0 - im * z.1 + c;
            let nim = re * z.1 + im * z.0;
            re = nre;
            im = nim;
        }
        (re, im)
    };
    for _ in 0..200 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let p = eval(roots[i]);
            let mut dre = 1.0;
            let mut dim = 0.0;
            for j in 0..deg {
                if i == j {
                    continue;
                }
                let wre = roots[i].0 - roots[j].0;
                let wim = roots[i].1 - roots[j].1;
                let nre = dre * wre - dim * wim;
                let nim = dre * wim + dim * wre;
                dre = nre;
                dim = nim;
            }
            let denom = dre * dre + dim * dim;
            if denom == 0.0 {
                continue;
            }
            let qre = (p.0 * dre + p.1 * dim) / denom;
            let qim = (p.1 * dre - p.0 * dim) / denom;
            roots[i].0 -= qre;
            roots[i].1 -= qim;
            moved = moved.max(qre.abs() + qim.abs());
        }
        if moved < 1e-13 {
            break;
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigproc::TimeGrid;

    #[test]
    fn lag_step_response_matches_closed_form() {
        let f = RationalFilter::lag(1.0).unwrap();
        let grid = TimeGrid::span(0.0, 1e-3, 10.0).unwrap();
        let step = SignalTrace::scalar_from_fn(grid, |_| 1.0).unwrap();
        let y = f.apply(&step).unwrap();
        for k in (0..grid.n_steps()).step_by(500) {
            let t = grid.time_at(k);
            let expect = 1.0 - (-t).exp();
            assert!(
                (y.value(k) - expect).abs() < 1e-6,
                "t={t}: {} vs {expect}",
                y.value(k)
            );
        }
    }

    #[test]
    fn washout_of_constant_decays() {
        let k_tc = 0.5;
        let f = RationalFilter::washout(k_tc).unwrap();
        assert_eq!(f.minimum_phase(), MinimumPhase::BoundaryZero);
        let grid = TimeGrid::span(0.0, 1e-3, 6.0).unwrap();
        let ones = SignalTrace::scalar_from_fn(grid, |_| 1.0).unwrap();
        let y = f.apply(&ones).unwrap();
        for k in 0..grid.n_steps() {
            let t = grid.time_at(k);
            let bound = (1.0 / k_tc) * (-t / k_tc).exp() * 1.001 + 1e-9;
            assert!(y.value(k).abs() <= bound, "t={t}: {} > {bound}", y.value(k));
        }
    }

    #[test]
    fn sinusoid_tracks_frequency_response() {
        // 1/(s+1) driven by sin(2t): steady-state amplitude 1/sqrt(5), phase -atan(2)
        let f = RationalFilter::lag(1.0).unwrap();
        let grid = TimeGrid::span(0.0, 1e-3, 25.0).unwrap();
        let u = SignalTrace::scalar_from_fn(grid, |t| (2.0 * t).sin()).unwrap();
        let y = f.apply(&u).unwrap();
        let (gain, phase) = f.frequency_response(2.0);
        assert!((gain - 1.0 / 5.0f64.sqrt()).abs() < 1e-12);
        assert!((phase - (-2.0f64.atan())).abs() < 1e-12);
        for k in (0..grid.n_steps()).step_by(137) {
            let t = grid.time_at(k);
            if t < 16.0 {
                continue; // skip transient
            }
            let expect = gain * (2.0 * t + phase).sin();
            assert!(
                (y.value(k) - expect).abs() < 1e-5,
                "t={t}: {} vs {expect}",
                y.value(k)
            );
        }
    }

    #[test]
    fn unstable_denominator_rejected() {
        let r = RationalFilter::new(&[1.0], &[1.0, -1.0]); // 1/(s-1)
        assert!(matches!(r, Err(SigError::UnstableDenominator { .. })));
    }

    #[test]
    fn zero_numerator_is_null_filter() {
        let f = RationalFilter::new(&[0.0], &[1.0, 1.0]).unwrap();
        assert!(f.is_zero());
        let grid = TimeGrid::span(0.0, 0.01, 1.0).unwrap();
        let u = SignalTrace::scalar_from_fn(grid, |t| t.cos()).unwrap();
        let y = f.apply(&u).unwrap();
        assert!(y.sample(grid.n_steps() - 1)[0] == 0.0);
    }

    #[test]
    fn right_half_plane_zero_flagged() {
        let f = RationalFilter::new(&[1.0, -2.0], &[1.0, 3.0, 2.0]).unwrap(); // zero at +2
        assert_eq!(f.minimum_phase(), MinimumPhase::No);
    }

    #[test]
    fn roots_of_quadratic() {
        // s^2 + 3s + 2 -> roots -1, -2
        let mut roots = polynomial_roots(&[1.0, 3.0, 2.0]);
        roots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert!((roots[0].0 + 2.0).abs() < 1e-9 && roots[0].1.abs() < 1e-9);
        assert!((roots[1].0 + 1.0).abs() < 1e-9 && roots[1].1.abs() < 1e-9);
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{SigError, SignalTrace, TimeGrid};

/// Band-limited white-noise specification: values held over `sample_time`
/// intervals with held-value variance `power / sample_time`, drawn from a
/// stream fully determined by `seed`.
///
/// The generator is ChaCha12 keyed by the seed (a counter-mode stream
/// cipher, so streams are reproducible bit-for-bit across platforms), with
/// normal deviates via the `rand_distr` ziggurat sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub power: f64,
    pub sample_time: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(power: f64, sample_time: f64, seed: u64) -> Result<Self, SigError> {
        if !(power >= 0.0) {
            return Err(SigError::Range(format!("noise power {power} < 0")));
        }
        if !(sample_time > 0.0) {
            return Err(SigError::Range(format!("sample time {sample_time} <= 0")));
        }
        Ok(Self {
            power,
            sample_time,
            seed,
        })
    }
}

/// Piecewise-constant noise realization, evaluable at arbitrary times (the
/// held value covers `[t0 + j*sample_time, t0 + (j+1)*sample_time)`).
#[derive(Debug, Clone)]
pub struct HeldNoise {
    t0: f64,
    sample_time: f64,
    values: Vec<f64>,
}

impl HeldNoise {
    /// Generate enough held values to cover `[t0, t0 + span]`.
    pub fn generate(spec: &NoiseSpec, t0: f64, span: f64) -> Self {
        let count = (span / spec.sample_time).floor() as usize + 2;
        let std = (spec.power / spec.sample_time).sqrt();
        let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
        let values = (0..count)
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                std * g
            })
            .collect();
        Self {
            t0,
            sample_time: spec.sample_time,
            values,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let j = ((t - self.t0) / self.sample_time).floor().max(0.0) as usize;
        self.values[j.min(self.values.len() - 1)]
    }

    pub fn held_values(&self) -> &[f64] {
        &self.values
    }
}

/// Sample a band-limited noise realization onto a grid.
pub fn band_limited_noise(spec: &NoiseSpec, grid: &TimeGrid) -> SignalTrace {
    let held = HeldNoise::generate(spec, grid.t0(), grid.t_end() - grid.t0());
    SignalTrace::scalar_from_fn(*grid, |t| held.eval(t)).expect("finite noise")
}

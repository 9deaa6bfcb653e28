//! Scenario configuration: a nested key-value TOML file validated against a
//! fixed schema. Validation is exhaustive — every unknown key, missing key,
//! type mismatch, and domain violation in the file is reported in one pass.
//!
//! Schema (see the shipped files under `configs/`):
//!
//! ```toml
//! id = "oscillator_v_proposed"
//!
//! [grid]        # t0, h, horizon (seconds)
//! [output]      # decimation (steps, default 10), epsilon (default 1e-2)
//! [plant]       # kind = "first_order" (a, b, k) | "oscillator" (omega, x0, transition_cap)
//! [input]       # kind = "constant" (value) | "harmonics" (harmonics) | "feedback" (gain)
//! [perturbation]# harmonics (external disturbance, first_order only)
//! [noise]       # harmonics + power/sample_time/seed for the random part
//! [estimator]   # law = "A"|"B"|"C"|"gd_baseline", gamma, window, independent,
//!               # theta0, constraint (B), filter_num/filter_den +
//!               # extended_estimate (C), big_gamma (gd_baseline)
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use toml::Value;

use crate::estimators::{ExtendedEstimate, Law};
use crate::regext::snap_window;
use crate::sigproc::NoiseSpec;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub amp: f64,
    pub freq: f64,
    pub phase: f64,
}

impl Harmonic {
    pub fn eval(&self, t: f64) -> f64 {
        self.amp * (self.freq * t + self.phase).sin()
    }
}

pub fn eval_harmonics(hs: &[Harmonic], t: f64) -> f64 {
    hs.iter().map(|h| h.eval(t)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCfg {
    pub t0: f64,
    pub h: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputCfg {
    pub decimation: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlantCfg {
    FirstOrder {
        a: f64,
        b: f64,
        k: f64,
    },
    Oscillator {
        omega: f64,
        x0: [f64; 2],
        transition_cap: f64,
    },
}

impl PlantCfg {
    /// Regression dimension (two unknown parameters in both shipped plants).
    pub fn n(&self) -> usize {
        2
    }

    /// Ground-truth parameter vector.
    pub fn theta(&self) -> Vec<f64> {
        match self {
            PlantCfg::FirstOrder { a, b, .. } => vec![*a, *b],
            PlantCfg::Oscillator { x0, .. } => x0.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputCfg {
    Constant(f64),
    Harmonics(Vec<Harmonic>),
    /// Output feedback `u = -gain * y`; makes every regressor direction
    /// noise-dependent (the documented assumption-failure mode).
    Feedback {
        gain: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCfg {
    pub harmonics: Vec<Harmonic>,
    pub random: Option<NoiseSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorCfg {
    pub law: Law,
    pub gamma: f64,
    /// Sliding-window width, grid-snapped at load (laws A/B/C).
    pub window: Option<f64>,
    pub independent: Vec<usize>,
    pub theta0: Option<Vec<f64>>,
    /// Parameter-constraint matrix rows (law B).
    pub constraint: Option<Vec<Vec<f64>>>,
    /// Extension filter (law C), descending powers of s.
    pub filter_num: Option<Vec<f64>>,
    pub filter_den: Option<Vec<f64>>,
    pub extended_estimate: ExtendedEstimate,
    /// Gradient gain matrix rows (gd_baseline).
    pub big_gamma: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub id: String,
    pub grid: GridCfg,
    pub output: OutputCfg,
    pub plant: PlantCfg,
    pub input: InputCfg,
    pub perturbation: Vec<Harmonic>,
    pub noise: NoiseCfg,
    pub estimator: EstimatorCfg,
}

/// Parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Window,
    Gamma,
}

impl std::str::FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "T" | "window" => Ok(SweepParam::Window),
            "gamma" => Ok(SweepParam::Gamma),
            other => Err(format!(
                "unknown sweep parameter `{other}` (expected T or gamma)"
            )),
        }
    }
}

/// Load and validate a scenario config. The second element lists non-fatal
/// load warnings. Window widths that are not grid multiples are accepted
/// here; the runner snaps them and records the snap in the run result.
pub fn load_config(path: &Path) -> Result<(ScenarioConfig, Vec<String>), HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_config(&text)
}

/// Validate config text. Collects every schema violation instead of stopping
/// at the first.
pub fn parse_config(text: &str) -> Result<(ScenarioConfig, Vec<String>), HarnessError> {
    let value: Value = text
        .parse()
        .map_err(|e| HarnessError::Config(vec![format!("toml syntax: {e}")]))?;
    let mut v = Validator::default();
    let cfg = v.scenario(&value);
    if v.issues.is_empty() {
        let cfg = cfg.expect("no issues implies a config");
        if let Some(window) = cfg.estimator.window {
            // reject degenerate widths now; snapping happens at run time
            snap_window(window, cfg.grid.h)
                .map_err(|e| HarnessError::Config(vec![e.to_string()]))?;
        }
        Ok((cfg, Vec::new()))
    } else {
        Err(HarnessError::Config(v.issues))
    }
}

#[derive(Default)]
struct Validator {
    issues: Vec<String>,
}

impl Validator {
    fn err(&mut self, msg: String) {
        self.issues.push(msg);
    }

    fn table<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a toml::map::Map<String, Value>> {
        match v.as_table() {
            Some(t) => Some(t),
            None => {
                self.err(format!("{path}: expected a table"));
                None
            }
        }
    }

    fn known_keys(&mut self, t: &toml::map::Map<String, Value>, path: &str, allowed: &[&str]) {
        let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
        for key in t.keys() {
            if !allowed.contains(key.as_str()) {
                self.err(format!("{path}: unknown key `{key}`"));
            }
        }
    }

    fn require<'a>(
        &mut self,
        t: &'a toml::map::Map<String, Value>,
        path: &str,
        key: &str,
    ) -> Option<&'a Value> {
        match t.get(key) {
            Some(v) => Some(v),
            None => {
                self.err(format!("{path}: missing required key `{key}`"));
                None
            }
        }
    }

    fn f64_value(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.err(format!("{path}: expected a number"));
                None
            }
        }
    }

    fn req_f64(&mut self, t: &toml::map::Map<String, Value>, path: &str, key: &str) -> Option<f64> {
        let v = self.require(t, path, key)?;
        self.f64_value(v, &format!("{path}.{key}"))
    }

    fn opt_f64(&mut self, t: &toml::map::Map<String, Value>, path: &str, key: &str) -> Option<f64> {
        let v = t.get(key)?;
        self.f64_value(v, &format!("{path}.{key}"))
    }

    fn str_value<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a str> {
        match v.as_str() {
            Some(s) => Some(s),
            None => {
                self.err(format!("{path}: expected a string"));
                None
            }
        }
    }

    fn f64_array(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        let arr = match v.as_array() {
            Some(a) => a,
            None => {
                self.err(format!("{path}: expected an array of numbers"));
                return None;
            }
        };
        let mut out = Vec::with_capacity(arr.len());
        for (i, item) in arr.iter().enumerate() {
            out.push(self.f64_value(item, &format!("{path}[{i}]"))?);
        }
        Some(out)
    }

    fn matrix_rows(&mut self, v: &Value, path: &str) -> Option<Vec<Vec<f64>>> {
        let arr = match v.as_array() {
            Some(a) => a,
            None => {
                self.err(format!("{path}: expected an array of rows"));
                return None;
            }
        };
        let mut rows = Vec::with_capacity(arr.len());
        for (i, item) in arr.iter().enumerate() {
            rows.push(self.f64_array(item, &format!("{path}[{i}]"))?);
        }
        Some(rows)
    }

    fn harmonics(&mut self, v: &Value, path: &str) -> Vec<Harmonic> {
        let arr = match v.as_array() {
            Some(a) => a,
            None => {
                self.err(format!("{path}: expected an array of harmonic tables"));
                return Vec::new();
            }
        };
        let mut out = Vec::with_capacity(arr.len());
        for (i, item) in arr.iter().enumerate() {
            let ipath = format!("{path}[{i}]");
            let Some(t) = self.table(item, &ipath) else {
                continue;
            };
            self.known_keys(t, &ipath, &["amp", "freq", "phase"]);
            let amp = self.req_f64(t, &ipath, "amp");
            let freq = self.req_f64(t, &ipath, "freq");
            let phase = self.opt_f64(t, &ipath, "phase").or(Some(0.0));
            if let (Some(amp), Some(freq), Some(phase)) = (amp, freq, phase) {
                if freq <= 0.0 {
                    self.err(format!("{ipath}.freq: must be > 0"));
                }
                out.push(Harmonic { amp, freq, phase });
            }
        }
        out
    }

    fn scenario(&mut self, root: &Value) -> Option<ScenarioConfig> {
        let t = self.table(root, "(root)")?;
        self.known_keys(
            t,
            "(root)",
            &[
                "id",
                "grid",
                "output",
                "plant",
                "input",
                "perturbation",
                "noise",
                "estimator",
            ],
        );

        let id = self
            .require(t, "(root)", "id")
            .and_then(|v| self.str_value(v, "id").map(str::to_string));

        let grid = self.require(t, "(root)", "grid").cloned().and_then(|v| {
            let gt = self.table(&v, "grid")?;
            self.known_keys(gt, "grid", &["t0", "h", "horizon"]);
            let t0 = self.req_f64(gt, "grid", "t0")?;
            let h = self.req_f64(gt, "grid", "h")?;
            let horizon = self.req_f64(gt, "grid", "horizon")?;
            if h <= 0.0 {
                self.err("grid.h: must be > 0".into());
            }
            if horizon <= 0.0 {
                self.err("grid.horizon: must be > 0".into());
            }
            Some(GridCfg { t0, h, horizon })
        });

        let output = match t.get("output") {
            None => Some(OutputCfg {
                decimation: 10,
                epsilon: 1e-2,
            }),
            Some(v) => {
                let ot = self.table(v, "output")?;
                self.known_keys(ot, "output", &["decimation", "epsilon"]);
                let decimation = match ot.get("decimation") {
                    None => 10,
                    Some(Value::Integer(i)) if *i >= 1 => *i as usize,
                    Some(_) => {
                        self.err("output.decimation: expected a positive integer".into());
                        10
                    }
                };
                let epsilon = self.opt_f64(ot, "output", "epsilon").unwrap_or(1e-2);
                if epsilon <= 0.0 {
                    self.err("output.epsilon: must be > 0".into());
                }
                Some(OutputCfg {
                    decimation,
                    epsilon,
                })
            }
        };

        let plant = self.require(t, "(root)", "plant").cloned().and_then(|v| {
            let pt = self.table(&v, "plant")?;
            let kind = self
                .require(pt, "plant", "kind")
                .and_then(|v| self.str_value(v, "plant.kind").map(str::to_string))?;
            match kind.as_str() {
                "first_order" => {
                    self.known_keys(pt, "plant", &["kind", "a", "b", "k"]);
                    let a = self.req_f64(pt, "plant", "a")?;
                    let b = self.req_f64(pt, "plant", "b")?;
                    let k = self.req_f64(pt, "plant", "k")?;
                    if k <= 0.0 {
                        self.err("plant.k: must be > 0".into());
                    }
                    if a >= 0.0 {
                        self.err("plant.a: must be < 0 (stable plant)".into());
                    }
                    Some(PlantCfg::FirstOrder { a, b, k })
                }
                "oscillator" => {
                    self.known_keys(pt, "plant", &["kind", "omega", "x0", "transition_cap"]);
                    let omega = self.req_f64(pt, "plant", "omega")?;
                    if omega <= 0.0 {
                        self.err("plant.omega: must be > 0".into());
                    }
                    let x0v = self.require(pt, "plant", "x0").cloned()?;
                    let x0 = self.f64_array(&x0v, "plant.x0")?;
                    if x0.len() != 2 {
                        self.err(format!("plant.x0: expected 2 entries, got {}", x0.len()));
                        return None;
                    }
                    let cap = self.opt_f64(pt, "plant", "transition_cap").unwrap_or(1e6);
                    if cap <= 0.0 {
                        self.err("plant.transition_cap: must be > 0".into());
                    }
                    Some(PlantCfg::Oscillator {
                        omega,
                        x0: [x0[0], x0[1]],
                        transition_cap: cap,
                    })
                }
                other => {
                    self.err(format!(
                        "plant.kind: unknown kind `{other}` (expected first_order or oscillator)"
                    ));
                    None
                }
            }
        });

        let input = self.require(t, "(root)", "input").cloned().and_then(|v| {
            let it = self.table(&v, "input")?;
            let kind = self
                .require(it, "input", "kind")
                .and_then(|v| self.str_value(v, "input.kind").map(str::to_string))?;
            match kind.as_str() {
                "constant" => {
                    self.known_keys(it, "input", &["kind", "value"]);
                    let value = self.req_f64(it, "input", "value")?;
                    Some(InputCfg::Constant(value))
                }
                "harmonics" => {
                    self.known_keys(it, "input", &["kind", "harmonics"]);
                    let hv = self.require(it, "input", "harmonics").cloned()?;
                    let hs = self.harmonics(&hv, "input.harmonics");
                    if hs.is_empty() {
                        self.err("input.harmonics: needs at least one term".into());
                    }
                    Some(InputCfg::Harmonics(hs))
                }
                "feedback" => {
                    self.known_keys(it, "input", &["kind", "gain"]);
                    let gain = self.req_f64(it, "input", "gain")?;
                    Some(InputCfg::Feedback { gain })
                }
                other => {
                    self.err(format!(
                        "input.kind: unknown kind `{other}` (expected constant, harmonics, or feedback)"
                    ));
                    None
                }
            }
        });

        let perturbation = match t.get("perturbation") {
            None => Vec::new(),
            Some(v) => {
                let pt = self.table(v, "perturbation")?;
                self.known_keys(pt, "perturbation", &["harmonics"]);
                match pt.get("harmonics") {
                    None => Vec::new(),
                    Some(hv) => self.harmonics(hv, "perturbation.harmonics"),
                }
            }
        };

        let noise = match t.get("noise") {
            None => Some(NoiseCfg {
                harmonics: Vec::new(),
                random: None,
            }),
            Some(v) => {
                let nt = self.table(v, "noise")?;
                self.known_keys(nt, "noise", &["harmonics", "power", "sample_time", "seed"]);
                let harmonics = match nt.get("harmonics") {
                    None => Vec::new(),
                    Some(hv) => self.harmonics(hv, "noise.harmonics"),
                };
                let power = self.opt_f64(nt, "noise", "power").unwrap_or(0.0);
                let random = if power > 0.0 {
                    let st = self.req_f64(nt, "noise", "sample_time");
                    let seed = match nt.get("seed") {
                        Some(Value::Integer(i)) if *i >= 0 => Some(*i as u64),
                        Some(_) => {
                            self.err("noise.seed: expected a non-negative integer".into());
                            None
                        }
                        None => {
                            self.err("noise: missing required key `seed` (power > 0)".into());
                            None
                        }
                    };
                    match (st, seed) {
                        (Some(st), Some(seed)) if st > 0.0 => {
                            match NoiseSpec::new(power, st, seed) {
                                Ok(spec) => Some(spec),
                                Err(e) => {
                                    self.err(format!("noise: {e}"));
                                    None
                                }
                            }
                        }
                        (Some(st), _) if st <= 0.0 => {
                            self.err("noise.sample_time: must be > 0".into());
                            None
                        }
                        _ => None,
                    }
                } else {
                    if power < 0.0 {
                        self.err("noise.power: must be >= 0".into());
                    }
                    None
                };
                Some(NoiseCfg { harmonics, random })
            }
        };

        let estimator = self.require(t, "(root)", "estimator").cloned().and_then(|v| {
            let et = self.table(&v, "estimator")?;
            self.known_keys(
                et,
                "estimator",
                &[
                    "law",
                    "gamma",
                    "window",
                    "independent",
                    "theta0",
                    "constraint",
                    "filter_num",
                    "filter_den",
                    "extended_estimate",
                    "big_gamma",
                ],
            );
            let law = self
                .require(et, "estimator", "law")
                .and_then(|v| self.str_value(v, "estimator.law").map(str::to_string))
                .and_then(|s| match s.as_str() {
                    "A" => Some(Law::A),
                    "B" => Some(Law::B),
                    "C" => Some(Law::C),
                    "gd_baseline" => Some(Law::GdBaseline),
                    other => {
                        self.err(format!(
                            "estimator.law: unknown law `{other}` (expected A, B, C, or gd_baseline)"
                        ));
                        None
                    }
                })?;
            let gamma = self.req_f64(et, "estimator", "gamma")?;
            if gamma <= 0.0 {
                self.err("estimator.gamma: must be > 0".into());
            }
            let window = if law == Law::GdBaseline {
                self.opt_f64(et, "estimator", "window")
            } else {
                let w = self.req_f64(et, "estimator", "window");
                if let Some(w) = w {
                    if w <= 0.0 {
                        self.err("estimator.window: must be > 0".into());
                    }
                }
                w
            };
            let independent = match et.get("independent") {
                Some(v) => match v.as_array() {
                    Some(arr) => {
                        let mut out = Vec::new();
                        for (i, item) in arr.iter().enumerate() {
                            match item.as_integer() {
                                Some(idx) if idx >= 0 => out.push(idx as usize),
                                _ => self.err(format!(
                                    "estimator.independent[{i}]: expected a non-negative integer"
                                )),
                            }
                        }
                        out
                    }
                    None => {
                        self.err("estimator.independent: expected an array of indices".into());
                        Vec::new()
                    }
                },
                None => {
                    if law != Law::GdBaseline {
                        self.err("estimator: missing required key `independent`".into());
                    }
                    Vec::new()
                }
            };
            let theta0 = et
                .get("theta0")
                .cloned()
                .and_then(|v| self.f64_array(&v, "estimator.theta0"));
            let constraint = et
                .get("constraint")
                .cloned()
                .and_then(|v| self.matrix_rows(&v, "estimator.constraint"));
            if law == Law::B && constraint.is_none() {
                self.err("estimator: law B requires `constraint`".into());
            }
            let filter_num = et
                .get("filter_num")
                .cloned()
                .and_then(|v| self.f64_array(&v, "estimator.filter_num"));
            let filter_den = et
                .get("filter_den")
                .cloned()
                .and_then(|v| self.f64_array(&v, "estimator.filter_den"));
            if law == Law::C && (filter_num.is_none() || filter_den.is_none()) {
                self.err("estimator: law C requires `filter_num` and `filter_den`".into());
            }
            let extended_estimate = match et.get("extended_estimate") {
                None => ExtendedEstimate::Constrained,
                Some(v) => match self.str_value(v, "estimator.extended_estimate") {
                    Some("constrained") => ExtendedEstimate::Constrained,
                    Some("free") => ExtendedEstimate::Free,
                    Some(other) => {
                        self.err(format!(
                            "estimator.extended_estimate: expected constrained or free, got `{other}`"
                        ));
                        ExtendedEstimate::Constrained
                    }
                    None => ExtendedEstimate::Constrained,
                },
            };
            let big_gamma = et
                .get("big_gamma")
                .cloned()
                .and_then(|v| self.matrix_rows(&v, "estimator.big_gamma"));
            if law == Law::GdBaseline && big_gamma.is_none() {
                self.err("estimator: gd_baseline requires `big_gamma`".into());
            }
            Some(EstimatorCfg {
                law,
                gamma,
                window,
                independent,
                theta0,
                constraint,
                filter_num,
                filter_den,
                extended_estimate,
                big_gamma,
            })
        });

        let (id, grid, output, plant, input, noise, estimator) =
            match (id, grid, output, plant, input, noise, estimator) {
                (Some(a), Some(b), Some(c), Some(d), Some(e), Some(f), Some(g)) => {
                    (a, b, c, d, e, f, g)
                }
                _ => return None,
            };

        let cfg = ScenarioConfig {
            id,
            grid,
            output,
            plant,
            input,
            perturbation,
            noise,
            estimator,
        };
        self.cross_checks(&cfg);
        if self.issues.is_empty() {
            Some(cfg)
        } else {
            None
        }
    }

    /// Dimension and plant/law compatibility checks over the typed config.
    fn cross_checks(&mut self, cfg: &ScenarioConfig) {
        let n = cfg.plant.n();
        let est = &cfg.estimator;
        if est.law != Law::GdBaseline {
            if est.independent.is_empty() {
                self.err("estimator.independent: needs at least one index".into());
            }
            let mut seen = BTreeSet::new();
            for &i in &est.independent {
                if i >= n {
                    self.err(format!(
                        "estimator.independent: index {i} out of range for n={n}"
                    ));
                }
                if !seen.insert(i) {
                    self.err(format!("estimator.independent: duplicate index {i}"));
                }
            }
        }
        if let Some(theta0) = &est.theta0 {
            if theta0.len() != n {
                self.err(format!(
                    "estimator.theta0: expected {n} entries, got {}",
                    theta0.len()
                ));
            }
        }
        if let Some(rows) = &est.constraint {
            let m = est.independent.len().min(n);
            let want_cols = n - m;
            if rows.len() != n || rows.iter().any(|r| r.len() != want_cols) {
                self.err(format!(
                    "estimator.constraint: expected {n} rows of {want_cols} entries"
                ));
            }
        }
        if let Some(rows) = &est.big_gamma {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                self.err(format!("estimator.big_gamma: expected a {n}x{n} matrix"));
            }
        }
        match (&cfg.plant, est.law) {
            (PlantCfg::Oscillator { .. }, Law::C) => {
                self.err("estimator.law: law C is not supported inside the observer".into());
            }
            (PlantCfg::FirstOrder { .. }, Law::GdBaseline) => {
                self.err("estimator.law: gd_baseline runs only with the oscillator plant".into());
            }
            _ => {}
        }
        if matches!(cfg.plant, PlantCfg::Oscillator { .. })
            && matches!(cfg.input, InputCfg::Feedback { .. })
        {
            self.err("input.kind: feedback input applies to first_order plants only".into());
        }
        if matches!(cfg.plant, PlantCfg::Oscillator { .. }) && !cfg.perturbation.is_empty() {
            self.err(
                "perturbation: the oscillator scenario models noise only (use [noise])".into(),
            );
        }
        if est.law == Law::B {
            if let PlantCfg::FirstOrder { a, b, .. } = &cfg.plant {
                if let Some(rows) = &est.constraint {
                    if rows.len() == 2 && rows[0].len() == 1 {
                        let dot = rows[0][0] * a + rows[1][0] * b;
                        if dot.abs() > 1e-9 {
                            self.err(format!(
                                "estimator.constraint: true parameters violate the constraint (h'theta = {dot:.3e})"
                            ));
                        }
                    }
                }
            }
        }
        if est.law == Law::GdBaseline && est.window.is_some() {
            // window is legal but ignored by the baseline; flag loudly
            self.err("estimator.window: gd_baseline does not take a window".into());
        }
        if let (Some(num), Some(den)) = (&est.filter_num, &est.filter_den) {
            match crate::sigproc::RationalFilter::new(num, den) {
                Err(e) => self.err(format!("estimator filter: {e}")),
                Ok(f) => {
                    if f.minimum_phase() == crate::sigproc::MinimumPhase::No {
                        self.err("estimator filter: extension filter must be minimum-phase".into());
                    }
                }
            }
        }
        if let PlantCfg::Oscillator { omega, .. } = &cfg.plant {
            for h in &cfg.noise.harmonics {
                if (h.freq - omega).abs() < 1e-9 {
                    self.err(format!(
                        "noise.harmonics: frequency {} collides with the plant frequency",
                        h.freq
                    ));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OSC: &str = r#"
id = "osc"

[grid]
t0 = 0.0
h = 0.001
horizon = 120.0

[plant]
kind = "oscillator"
omega = 1.0
x0 = [2.0, -1.0]

[input]
kind = "constant"
value = 1.0

[noise]
harmonics = [{ amp = 0.1, freq = 20.0 }]
power = 0.1
sample_time = 0.01
seed = 23341

[estimator]
law = "A"
gamma = 100.0
window = 36.0
independent = [0, 1]
"#;

    #[test]
    fn oscillator_config_parses() {
        let (cfg, warnings) = parse_config(OSC).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(cfg.id, "osc");
        assert_eq!(
            cfg.plant,
            PlantCfg::Oscillator {
                omega: 1.0,
                x0: [2.0, -1.0],
                transition_cap: 1e6
            }
        );
        assert_eq!(cfg.estimator.window, Some(36.0));
        assert_eq!(cfg.noise.random.unwrap().seed, 23341);
        assert_eq!(cfg.output.decimation, 10);
    }

    #[test]
    fn empty_config_lists_every_required_key() {
        let err = parse_config("").unwrap_err();
        let HarnessError::Config(issues) = err else {
            panic!("expected config error")
        };
        let text = issues.join("\n");
        for key in ["id", "grid", "plant", "input", "estimator"] {
            assert!(
                text.contains(&format!("`{key}`")),
                "missing key `{key}` not reported in:\n{text}"
            );
        }
    }

    #[test]
    fn unknown_keys_are_errors() {
        let bad = OSC.replace("[estimator]", "typo_key = 1\n\n[estimator]");
        let err = parse_config(&bad).unwrap_err();
        let HarnessError::Config(issues) = err else {
            panic!()
        };
        assert!(issues.iter().any(|i| i.contains("typo_key")), "{issues:?}");
    }

    #[test]
    fn multiple_issues_reported_together() {
        let bad = OSC
            .replace("gamma = 100.0", "gamma = -5.0")
            .replace("h = 0.001", "h = -0.001");
        let err = parse_config(&bad).unwrap_err();
        let HarnessError::Config(issues) = err else {
            panic!()
        };
        assert!(issues.len() >= 2, "expected both issues: {issues:?}");
    }

    #[test]
    fn off_grid_window_is_accepted_at_load() {
        // snapping is the runner's job; the loader only rejects degenerate widths
        let snappy = OSC.replace("window = 36.0", "window = 36.0004");
        let (cfg, warnings) = parse_config(&snappy).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(cfg.estimator.window, Some(36.0004));
        let degenerate = OSC.replace("window = 36.0", "window = 0.0001");
        assert!(parse_config(&degenerate).is_err());
    }

    #[test]
    fn law_b_requires_constraint_and_consistency() {
        let text = r#"
id = "e2"
[grid]
t0 = 0.0
h = 0.001
horizon = 10.0
[plant]
kind = "first_order"
a = -1.0
b = 1.0
k = 1.0
[input]
kind = "harmonics"
harmonics = [{ amp = 1.0, freq = 1.0 }]
[estimator]
law = "B"
gamma = 100.0
window = 5.0
independent = [1]
"#;
        let err = parse_config(text).unwrap_err();
        let HarnessError::Config(issues) = err else {
            panic!()
        };
        assert!(
            issues.iter().any(|i| i.contains("constraint")),
            "{issues:?}"
        );
        // inconsistent truth: a != -b with h = [1;1]
        let text2 = text
            .replace("law = \"B\"", "law = \"B\"\nconstraint = [[1.0], [1.0]]")
            .replace("b = 1.0", "b = 2.0");
        let err2 = parse_config(&text2).unwrap_err();
        let HarnessError::Config(issues2) = err2 else {
            panic!()
        };
        assert!(
            issues2.iter().any(|i| i.contains("violate the constraint")),
            "{issues2:?}"
        );
    }
}

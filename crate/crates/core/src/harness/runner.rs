//! The scenario run loop: estimation over a built regression stream or a
//! full observer run, telemetry decimation, summary metrics, and CSV output.

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::estimators::{
    check_constraint_rank, check_extended_rank, constraint_transform, extended_transform,
    law_a_step, law_b_step, law_c_step, AnnihilatorSet, EstError, EstimatorState,
    ExtendedAnnihilator, Law, LawCState,
};
use crate::gpebo::{
    baseline_estimator, constraint_estimator, ln_floored, proposed_estimator, GpeboState,
    ObserverError,
};
use crate::matcore::Matrix;
use crate::regext::{extend_regressor, snap_window, LreStream, WindowState};
use crate::sigproc::{empirical_autocovariance, pe_bounds, RationalFilter, SignalTrace};

use super::checks::{independence_decay, DecayCheck};
use super::config::{PlantCfg, ScenarioConfig};
use super::scenario::{build_first_order, build_oscillator, noise_closure};
use super::HarnessError;

/// One decimated estimator telemetry sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRow {
    pub t: f64,
    pub theta_hat: Vec<f64>,
    pub theta_err: Vec<f64>,
    pub residual_norm: f64,
    pub m2: f64,
}

/// One decimated observer sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub x_hat: Vec<f64>,
    pub theta_err: Vec<f64>,
    pub ln_xerr: f64,
}

/// Summary metrics, all re-derivable from the emitted rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Mean of `max_i |theta_err_i|` over the trailing 10% of emitted rows.
    pub steady_state_max_theta_err: f64,
    /// First emission time with `max_i |theta_err_i| <= epsilon`.
    pub time_to_epsilon: Option<f64>,
    pub epsilon: f64,
    /// Last emitted `ln |x_err|` (observer runs only).
    pub final_ln_xerr: Option<f64>,
}

#[derive(Debug)]
pub struct RunResult {
    pub config_id: String,
    pub telemetry: Vec<TelemetryRow>,
    pub observer: Vec<ObserverRow>,
    pub metrics: Metrics,
    pub warnings: Vec<String>,
    /// Abort reason (divergence guard or transition-norm cap); rows up to
    /// the abort are retained.
    pub aborted: Option<String>,
}

/// Compute summary metrics from emitted rows.
pub fn compute_metrics(
    telemetry: &[TelemetryRow],
    observer: &[ObserverRow],
    epsilon: f64,
) -> Metrics {
    let max_err = |row: &TelemetryRow| row.theta_err.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut steady, mut time_to) = (f64::NAN, None);
    if let (Some(first), Some(last)) = (telemetry.first(), telemetry.last()) {
        let tail_start = first.t + 0.9 * (last.t - first.t);
        let tail: Vec<f64> = telemetry
            .iter()
            .filter(|r| r.t >= tail_start)
            .map(max_err)
            .collect();
        if !tail.is_empty() {
            steady = tail.iter().sum::<f64>() / tail.len() as f64;
        }
        time_to = telemetry
            .iter()
            .find(|r| max_err(r) <= epsilon)
            .map(|r| r.t);
    }
    Metrics {
        steady_state_max_theta_err: steady,
        time_to_epsilon: time_to,
        epsilon,
        final_ln_xerr: observer.last().map(|r| r.ln_xerr),
    }
}

/// Run a scenario to its horizon. Writes CSV telemetry, metrics, and the run
/// log into `out_dir` when given. Divergence aborts return `Ok` with partial
/// rows and `aborted` set; hard assumption failures (constraint/extension
/// rank prechecks) return `Err`.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    out_dir: Option<&Path>,
) -> Result<RunResult, HarnessError> {
    let mut result = match cfg.plant {
        PlantCfg::FirstOrder { .. } => run_estimation(cfg)?,
        PlantCfg::Oscillator { .. } => run_observer(cfg)?,
    };
    result.config_id = cfg.id.clone();
    if let Some(dir) = out_dir {
        write_run(&result, dir)?;
    }
    Ok(result)
}

/// Snap the configured window to the grid, recording a warning when it moved.
fn snapped_window(cfg: &ScenarioConfig, warnings: &mut Vec<String>) -> Result<f64, HarnessError> {
    let raw = cfg
        .estimator
        .window
        .ok_or_else(|| HarnessError::Run("estimation laws need a window".into()))?;
    let (snapped, _, moved) = snap_window(raw, cfg.grid.h)?;
    if moved {
        warnings.push(format!("window {raw} snapped to grid multiple {snapped}"));
    }
    Ok(snapped)
}

fn run_estimation(cfg: &ScenarioConfig) -> Result<RunResult, HarnessError> {
    let built = build_first_order(cfg)?;
    let mut warnings = Vec::new();
    let window_width = snapped_window(cfg, &mut warnings)?;
    let grid = built.grid;
    let h = grid.step();
    let t_end = grid.t_end();

    // stream the law actually consumes
    let stream: LreStream = if cfg.estimator.law == Law::C {
        let filter = RationalFilter::new(
            cfg.estimator.filter_num.as_ref().expect("validated"),
            cfg.estimator.filter_den.as_ref().expect("validated"),
        )?;
        extend_regressor(&built.lre, &filter)?
    } else {
        built.lre.clone()
    };

    // empirical autocovariance for the rank prechecks
    let check_t = (grid.t0() + 2.0 * window_width).min(t_end);
    let lambda_hat = empirical_autocovariance(stream.regressor(), check_t, window_width)?;
    let ext = match cfg.estimator.law {
        Law::B => {
            check_constraint_rank(&built.ann, &lambda_hat, 1e-6)
                .map_err(|e| HarnessError::Assumption(e.to_string()))?;
            None
        }
        Law::C => {
            let ext = built.ann.extend()?;
            check_extended_rank(&ext, &lambda_hat, 1e-6)
                .map_err(|e| HarnessError::Assumption(e.to_string()))?;
            Some(ext)
        }
        _ => None,
    };

    excitation_warnings(stream.regressor(), window_width, &mut warnings);
    independence_warnings(
        &built.lre,
        &cfg.estimator.independent,
        window_width,
        &mut warnings,
    );

    let theta = built.theta.clone();
    let theta0 = cfg.estimator.theta0.clone().unwrap_or_else(|| vec![0.0; 2]);
    let mut driver = LawDriver::new(cfg, &built.ann, ext, theta0)?;

    let mut ws = WindowState::new(stream.dim(), window_width, h)?;
    let decim = cfg.output.decimation;
    let mut telemetry = Vec::new();
    let mut aborted = None;

    ws.push(stream.regressor().sample(0), stream.regressand().value(0))?;
    telemetry.push(driver.row(grid.t0(), &ws, &theta));
    for k in 1..grid.n_steps() {
        match driver.step(&ws, h) {
            Ok(()) => {}
            Err(EstError::Divergence { norm }) => {
                aborted = Some(format!(
                    "divergence guard tripped at t={:.3}: |theta_hat| = {norm:.3e}",
                    grid.time_at(k)
                ));
                break;
            }
            Err(e) => return Err(e.into()),
        }
        ws.push(stream.regressor().sample(k), stream.regressand().value(k))?;
        if k % decim == 0 {
            telemetry.push(driver.row(grid.time_at(k), &ws, &theta));
        }
    }

    // end-of-run rank re-check (warning only; the run already happened)
    let lambda_end = empirical_autocovariance(stream.regressor(), t_end, window_width)?;
    let recheck = match cfg.estimator.law {
        Law::B => check_constraint_rank(&built.ann, &lambda_end, 1e-6).err(),
        Law::C => {
            let ext = built.ann.extend()?;
            check_extended_rank(&ext, &lambda_end, 1e-6).err()
        }
        _ => None,
    };
    if let Some(e) = recheck {
        warnings.push(format!("end-of-run rank re-check failed: {e}"));
    }

    let metrics = compute_metrics(&telemetry, &[], cfg.output.epsilon);
    Ok(RunResult {
        config_id: String::new(),
        telemetry,
        observer: Vec::new(),
        metrics,
        warnings,
        aborted,
    })
}

/// Law dispatch for the estimation loop.
enum LawDriver<'a> {
    A(EstimatorState),
    B(EstimatorState, &'a AnnihilatorSet),
    C(LawCState, ExtendedAnnihilator),
}

impl<'a> LawDriver<'a> {
    fn new(
        cfg: &ScenarioConfig,
        ann: &'a AnnihilatorSet,
        ext: Option<ExtendedAnnihilator>,
        theta0: Vec<f64>,
    ) -> Result<Self, HarnessError> {
        let est =
            EstimatorState::new(2, cfg.estimator.gamma, cfg.estimator.law)?.with_initial(theta0)?;
        Ok(match cfg.estimator.law {
            Law::A => LawDriver::A(est),
            Law::B => LawDriver::B(est, ann),
            Law::C => LawDriver::C(
                LawCState::new(est, cfg.estimator.extended_estimate),
                ext.expect("extension built for law C"),
            ),
            Law::GdBaseline => {
                return Err(HarnessError::Run(
                    "gd_baseline runs inside the observer only".into(),
                ))
            }
        })
    }

    fn step(&mut self, ws: &WindowState, h: f64) -> Result<(), EstError> {
        match self {
            LawDriver::A(est) => law_a_step(est, ws.cross_avg(), ws.outer_avg(), h),
            LawDriver::B(est, ann) => {
                let tr = constraint_transform(ws.cross_avg(), ws.outer_avg(), ann)?;
                law_b_step(est, &tr.upsilon, tr.m2, ws.outer_avg(), h)
            }
            LawDriver::C(st, ext) => {
                let (upsilon, m2) = extended_transform(ws.cross_avg(), ws.outer_avg(), ext)?;
                law_c_step(st, &upsilon, m2, ws.outer_avg(), h)
            }
        }
    }

    fn row(&self, t: f64, ws: &WindowState, theta: &[f64]) -> TelemetryRow {
        let (theta_hat, residual_norm, m2) = match self {
            LawDriver::A(est) => {
                let pred = ws.outer_avg().mul_vec(&est.theta_hat).expect("dim");
                let r = pred
                    .iter()
                    .zip(ws.cross_avg())
                    .map(|(p, c)| (p - c) * (p - c))
                    .sum::<f64>()
                    .sqrt();
                (est.theta_hat.clone(), r, 1.0)
            }
            LawDriver::B(est, ann) => {
                match constraint_transform(ws.cross_avg(), ws.outer_avg(), ann) {
                    Ok(tr) => {
                        let pred = ws.outer_avg().mul_vec(&est.theta_hat).expect("dim");
                        let r = pred
                            .iter()
                            .zip(&tr.upsilon)
                            .map(|(p, u)| (tr.m2 * p - u) * (tr.m2 * p - u))
                            .sum::<f64>()
                            .sqrt();
                        (est.theta_hat.clone(), r, tr.m2)
                    }
                    Err(_) => (est.theta_hat.clone(), f64::NAN, f64::NAN),
                }
            }
            LawDriver::C(st, ext) => {
                match extended_transform(ws.cross_avg(), ws.outer_avg(), ext) {
                    Ok((upsilon, m2)) => {
                        let big = st.extended();
                        let pred = ws.outer_avg().mul_vec(&big).expect("dim");
                        let r = pred
                            .iter()
                            .zip(&upsilon)
                            .map(|(p, u)| (m2 * p - u) * (m2 * p - u))
                            .sum::<f64>()
                            .sqrt();
                        (st.theta_hat().to_vec(), r, m2)
                    }
                    Err(_) => (st.theta_hat().to_vec(), f64::NAN, f64::NAN),
                }
            }
        };
        let theta_err = theta_hat
            .iter()
            .zip(theta)
            .map(|(th, tr)| th - tr)
            .collect();
        TelemetryRow {
            t,
            theta_hat,
            theta_err,
            residual_norm,
            m2,
        }
    }
}

fn run_observer(cfg: &ScenarioConfig) -> Result<RunResult, HarnessError> {
    let sys = build_oscillator(cfg)?;
    let mut warnings = Vec::new();
    let grid = crate::sigproc::TimeGrid::span(cfg.grid.t0, cfg.grid.h, cfg.grid.horizon)?;
    let h = grid.step();
    let theta = cfg.plant.theta();
    let theta0 = cfg.estimator.theta0.clone().unwrap_or_else(|| vec![0.0; 2]);

    let estimator = match cfg.estimator.law {
        Law::A => proposed_estimator(
            2,
            cfg.estimator.gamma,
            snapped_window(cfg, &mut warnings)?,
            h,
            theta0,
        )?,
        Law::B => {
            let mut ann = AnnihilatorSet::from_partition(2, &cfg.estimator.independent)?;
            let rows = cfg.estimator.constraint.as_ref().expect("validated");
            ann = ann.with_constraint(Matrix::from_rows(rows)?)?;
            // the manifold assumption: the true initial state satisfies it
            let hm = ann.constraint().expect("attached");
            let dot: f64 = (0..2).map(|i| hm[(i, 0)] * theta[i]).sum();
            if dot.abs() > 1e-9 {
                return Err(HarnessError::Assumption(format!(
                    "initial state violates the constraint manifold (h'x0 = {dot:.3e})"
                )));
            }
            constraint_estimator(
                2,
                cfg.estimator.gamma,
                snapped_window(cfg, &mut warnings)?,
                h,
                theta0,
                ann,
            )?
        }
        Law::GdBaseline => {
            let rows = cfg.estimator.big_gamma.as_ref().expect("validated");
            baseline_estimator(2, cfg.estimator.gamma, Matrix::from_rows(rows)?, theta0)?
        }
        Law::C => {
            return Err(HarnessError::Run(
                "law C is not supported inside the observer".into(),
            ))
        }
    };

    let mut st = GpeboState::new(&sys, estimator, grid.t0());
    st.prime(&sys)?;
    let decim = cfg.output.decimation;
    let mut telemetry = Vec::new();
    let mut observer_rows = Vec::new();
    let mut phi_samples: Vec<f64> = Vec::with_capacity(grid.n_steps() * 2);
    let mut aborted = None;
    let mut identity_worst = 0.0f64;

    let emit = |st: &GpeboState, telemetry: &mut Vec<TelemetryRow>, rows: &mut Vec<ObserverRow>| {
        let (residual_norm, m2) = st.telemetry_pair();
        let theta_hat = st.theta_hat().to_vec();
        let theta_err: Vec<f64> = theta_hat.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let x_hat = st.x_hat();
        let xerr: f64 = x_hat
            .iter()
            .zip(st.x_true())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        telemetry.push(TelemetryRow {
            t: st.t(),
            theta_hat,
            theta_err: theta_err.clone(),
            residual_norm,
            m2,
        });
        rows.push(ObserverRow {
            t: st.t(),
            x: st.x_true().to_vec(),
            x_hat,
            theta_err,
            ln_xerr: ln_floored(xerr),
        });
    };

    let (phi0, _) = st.regression_sample(&sys);
    phi_samples.extend_from_slice(&phi0);
    emit(&st, &mut telemetry, &mut observer_rows);
    for k in 1..grid.n_steps() {
        match st.step(&sys, h) {
            Ok(()) => {}
            Err(ObserverError::TransitionCapExceeded { norm, cap, t }) => {
                aborted = Some(format!(
                    "transition-norm cap exceeded at t={t:.3}: {norm:.3e} > {cap:.3e}"
                ));
                break;
            }
            Err(ObserverError::Estimator(EstError::Divergence { norm })) => {
                aborted = Some(format!(
                    "divergence guard tripped at t={:.3}: |theta_hat| = {norm:.3e}",
                    grid.time_at(k)
                ));
                break;
            }
            Err(e) => return Err(e.into()),
        }
        let (phi, _) = st.regression_sample(&sys);
        phi_samples.extend_from_slice(&phi);
        // reconstruction identity: state error equals the transition matrix
        // acting on the parameter error
        let x_hat = st.x_hat();
        let theta_err: Vec<f64> = st
            .theta_hat()
            .iter()
            .zip(&theta)
            .map(|(a, b)| a - b)
            .collect();
        let bound = st.phi_a().mul_vec(&theta_err)?;
        for i in 0..2 {
            identity_worst = identity_worst.max(((x_hat[i] - st.x_true()[i]) - bound[i]).abs());
        }
        if k % decim == 0 {
            emit(&st, &mut telemetry, &mut observer_rows);
        }
    }

    if identity_worst > 1e-8 {
        warnings.push(format!(
            "reconstruction identity drifted to {identity_worst:.3e} (> 1e-8)"
        ));
    }

    // empirical assumption checks from the recorded regressor (warnings only)
    let emitted = phi_samples.len() / 2;
    if let Ok(phi_trace) = SignalTrace::new(
        crate::sigproc::TimeGrid::new(grid.t0(), h, emitted)?,
        2,
        phi_samples,
    ) {
        if let Some(window) = cfg.estimator.window {
            let window = snap_window(window, h)?.0;
            excitation_warnings(&phi_trace, window, &mut warnings);
            let noise = noise_closure(&cfg.noise, cfg.grid.t0, cfg.grid.horizon);
            let w_trace = SignalTrace::scalar_from_fn(*phi_trace.grid(), noise)?;
            let check = independence_decay(&phi_trace, &w_trace, window);
            if let DecayCheck::Measured { at_window, at_four } = check {
                if !check.decays() {
                    warnings.push(format!(
                        "regressor/noise decoupling not observed: rms windowed \
                         cross-correlation {at_window:.3e} -> {at_four:.3e}"
                    ));
                }
            }
        }
    }

    let metrics = compute_metrics(&telemetry, &observer_rows, cfg.output.epsilon);
    Ok(RunResult {
        config_id: String::new(),
        telemetry,
        observer: observer_rows,
        metrics,
        warnings,
        aborted,
    })
}

/// Persistent-excitation scan recorded as warnings (never fatal: the scan is
/// an estimate, not a certificate).
fn excitation_warnings(regressor: &SignalTrace, window: f64, warnings: &mut Vec<String>) {
    let span = regressor.grid().t_end() - regressor.grid().t0();
    if span < 2.0 * window {
        warnings.push(format!(
            "excitation scan skipped: horizon {span:.1} s shorter than two windows ({window:.1} s)"
        ));
        return;
    }
    // decimate long traces; the scan is a diagnostic
    let stride = (regressor.grid().n_steps() / 100_000).max(1);
    let scan = pe_bounds(&regressor.decimate(stride), window);
    match scan {
        Ok(scan) => {
            if scan.alpha_lower <= 1e-9 * scan.alpha_upper.max(1e-300) {
                warnings.push(format!(
                    "regressor not persistently exciting at window {window}: \
                     eigenvalue range [{:.3e}, {:.3e}]",
                    scan.alpha_lower, scan.alpha_upper
                ));
            }
        }
        Err(e) => warnings.push(format!("excitation scan failed: {e}")),
    }
}

/// Windowed cross-correlation decay of the independent regressor elements
/// against the perturbation trace, recorded as warnings.
fn independence_warnings(
    lre: &LreStream,
    independent: &[usize],
    window: f64,
    warnings: &mut Vec<String>,
) {
    let Some(w_trace) = lre.perturbation() else {
        return;
    };
    for &i in independent {
        let phi_i = lre.regressor().component(i);
        let check = independence_decay(&phi_i, w_trace, window);
        if let DecayCheck::Measured { at_window, at_four } = check {
            if !check.decays() {
                warnings.push(format!(
                    "independence of regressor element {i} from the perturbation not observed: \
                     rms |corr| {at_window:.3e} at T -> {at_four:.3e} at 4T"
                ));
            }
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write telemetry, observer rows (if any), metrics, and the run log.
/// Output is byte-deterministic for a fixed `RunResult`.
pub fn write_run(res: &RunResult, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let n = res
        .telemetry
        .first()
        .map(|r| r.theta_hat.len())
        .unwrap_or(0);
    {
        let mut w = BufWriter::new(std::fs::File::create(dir.join("telemetry.csv"))?);
        write!(w, "t")?;
        for i in 1..=n {
            write!(w, ",theta_hat_{i}")?;
        }
        for i in 1..=n {
            write!(w, ",theta_err_{i}")?;
        }
        writeln!(w, ",residual_norm,M2")?;
        for row in &res.telemetry {
            write!(w, "{}", fmt(row.t))?;
            for v in &row.theta_hat {
                write!(w, ",{}", fmt(*v))?;
            }
            for v in &row.theta_err {
                write!(w, ",{}", fmt(*v))?;
            }
            writeln!(w, ",{},{}", fmt(row.residual_norm), fmt(row.m2))?;
        }
        w.flush()?;
    }
    if !res.observer.is_empty() {
        let dim = res.observer[0].x.len();
        let mut w = BufWriter::new(std::fs::File::create(dir.join("observer.csv"))?);
        write!(w, "t")?;
        for i in 1..=dim {
            write!(w, ",x{i}")?;
        }
        for i in 1..=dim {
            write!(w, ",xhat{i}")?;
        }
        for i in 1..=dim {
            write!(w, ",theta_err_{i}")?;
        }
        writeln!(w, ",ln_xerr")?;
        for row in &res.observer {
            write!(w, "{}", fmt(row.t))?;
            for v in &row.x {
                write!(w, ",{}", fmt(*v))?;
            }
            for v in &row.x_hat {
                write!(w, ",{}", fmt(*v))?;
            }
            for v in &row.theta_err {
                write!(w, ",{}", fmt(*v))?;
            }
            writeln!(w, ",{}", fmt(row.ln_xerr))?;
        }
        w.flush()?;
    }
    {
        let mut w = BufWriter::new(std::fs::File::create(dir.join("metrics.csv"))?);
        writeln!(w, "metric,value")?;
        writeln!(
            w,
            "steady_state_max_theta_err,{}",
            fmt(res.metrics.steady_state_max_theta_err)
        )?;
        writeln!(
            w,
            "time_to_epsilon,{}",
            res.metrics.time_to_epsilon.map(fmt).unwrap_or_default()
        )?;
        writeln!(w, "epsilon,{}", fmt(res.metrics.epsilon))?;
        writeln!(
            w,
            "final_ln_xerr,{}",
            res.metrics.final_ln_xerr.map(fmt).unwrap_or_default()
        )?;
        w.flush()?;
    }
    {
        let mut w = BufWriter::new(std::fs::File::create(dir.join("run.log"))?);
        writeln!(w, "config: {}", res.config_id)?;
        match &res.aborted {
            Some(reason) => writeln!(w, "status: aborted ({reason})")?,
            None => writeln!(w, "status: completed")?,
        }
        for warn in &res.warnings {
            writeln!(w, "warning: {warn}")?;
        }
        w.flush()?;
    }
    Ok(())
}

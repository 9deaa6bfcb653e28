//! Parameter sweeps and paired comparisons. Member runs share the scenario
//! seed and execute through the workspace map helper, so they parallelize
//! when the `parallel` feature is on while producing identical results
//! either way.

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::par;

use super::config::{ScenarioConfig, SweepParam};
use super::runner::{run_scenario, Metrics, RunResult};
use super::HarnessError;

#[derive(Debug)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: Metrics,
    pub aborted: Option<String>,
}

/// Run the scenario once per parameter value (ascending), returning one
/// metrics row per value. Member outputs land in `out_dir/run_<idx>/`.
pub fn sweep(
    cfg: &ScenarioConfig,
    param: SweepParam,
    values: &[f64],
    out_dir: Option<&Path>,
) -> Result<Vec<SweepRow>, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::Config(vec![
            "sweep needs at least one value".into()
        ]));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::Config(vec![
            "sweep values must be positive and strictly ascending".into(),
        ]));
    }
    if values[0] <= 0.0 {
        return Err(HarnessError::Config(vec![
            "sweep values must be positive".into()
        ]));
    }
    let members: Vec<(usize, f64, ScenarioConfig)> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut member = cfg.clone();
            match param {
                SweepParam::Window => member.estimator.window = Some(v),
                SweepParam::Gamma => member.estimator.gamma = v,
            }
            member.id = format!("{}_{}", cfg.id, i);
            (i, v, member)
        })
        .collect();
    let out_dir = out_dir.map(Path::to_path_buf);
    let results: Vec<Result<(f64, RunResult), HarnessError>> =
        par::map(members, move |(i, v, member)| {
            let sub = out_dir.as_ref().map(|d| d.join(format!("run_{i:03}")));
            let res = run_scenario(&member, sub.as_deref())?;
            Ok((v, res))
        });
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        let (value, res) = r?;
        rows.push(SweepRow {
            value,
            metrics: res.metrics,
            aborted: res.aborted,
        });
    }
    Ok(rows)
}

/// Write the sweep summary table.
pub fn write_sweep(rows: &[SweepRow], param: SweepParam, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(std::fs::File::create(dir.join("sweep.csv"))?);
    let name = match param {
        SweepParam::Window => "window",
        SweepParam::Gamma => "gamma",
    };
    writeln!(w, "{name},steady_state_max_theta_err,time_to_epsilon")?;
    for row in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{}",
            row.value,
            row.metrics.steady_state_max_theta_err,
            row.metrics
                .time_to_epsilon
                .map(|v| format!("{v:.16e}"))
                .unwrap_or_default()
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug)]
pub struct CompareReport {
    pub a: Metrics,
    pub b: Metrics,
    /// steady-state error of `a` over that of `b`.
    pub steady_state_ratio: f64,
    pub final_ln_xerr_diff: Option<f64>,
}

/// Run two configurations sharing grid and noise realization, side by side.
pub fn compare(
    cfg_a: &ScenarioConfig,
    cfg_b: &ScenarioConfig,
    out_dir: Option<&Path>,
) -> Result<(CompareReport, RunResult, RunResult), HarnessError> {
    if cfg_a.grid != cfg_b.grid {
        return Err(HarnessError::Config(vec![
            "compare: configs must share the [grid] section".into(),
        ]));
    }
    if cfg_a.noise != cfg_b.noise {
        return Err(HarnessError::Config(vec![
            "compare: configs must share the [noise] section (paired realizations)".into(),
        ]));
    }
    let out = out_dir.map(Path::to_path_buf);
    let jobs: Vec<(usize, ScenarioConfig)> = vec![(0, cfg_a.clone()), (1, cfg_b.clone())];
    let mut results: Vec<Result<RunResult, HarnessError>> = par::map(jobs, move |(i, cfg)| {
        let sub = out.as_ref().map(|d| d.join(if i == 0 { "a" } else { "b" }));
        run_scenario(&cfg, sub.as_deref())
    });
    let res_b = results.pop().expect("two results")?;
    let res_a = results.pop().expect("two results")?;
    let report = CompareReport {
        a: res_a.metrics,
        b: res_b.metrics,
        steady_state_ratio: res_a.metrics.steady_state_max_theta_err
            / res_b.metrics.steady_state_max_theta_err,
        final_ln_xerr_diff: match (res_a.metrics.final_ln_xerr, res_b.metrics.final_ln_xerr) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        },
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(std::fs::File::create(dir.join("compare.csv"))?);
        writeln!(w, "metric,a,b")?;
        writeln!(
            w,
            "steady_state_max_theta_err,{:.16e},{:.16e}",
            report.a.steady_state_max_theta_err, report.b.steady_state_max_theta_err
        )?;
        writeln!(
            w,
            "final_ln_xerr,{},{}",
            report
                .a
                .final_ln_xerr
                .map(|v| format!("{v:.16e}"))
                .unwrap_or_default(),
            report
                .b
                .final_ln_xerr
                .map(|v| format!("{v:.16e}"))
                .unwrap_or_default()
        )?;
        writeln!(w, "steady_state_ratio,{:.16e},", report.steady_state_ratio)?;
        w.flush()?;
    }
    Ok((report, res_a, res_b))
}

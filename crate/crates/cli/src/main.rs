//! `annex` — run, sweep, compare, and diagnose estimation/observer
//! scenarios described by TOML config files.
//!
//! Exit codes: 0 success, 2 config error, 3 assumption-check failure,
//! 4 divergence/abort, 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use annex_core::harness::{
    compare, diagnose, load_config, run_scenario, sweep, write_sweep, HarnessError, Metrics,
    RunResult, ScenarioConfig, SweepParam,
};

/// Environment variable naming the default output root.
const OUT_ENV: &str = "ANNEX_OUT";

#[derive(Parser)]
#[command(
    name = "annex",
    version,
    about = "Perturbation-annihilating parameter estimation scenarios"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario to its horizon and write telemetry CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: $ANNEX_OUT/<id> or ./out/<id>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the scenario once per parameter value and tabulate the results.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Parameter to vary: T (window) or gamma.
        #[arg(long)]
        param: String,
        /// Comma-separated ascending values, e.g. 9,36,144.
        #[arg(long)]
        values: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run two configs sharing grid and noise realization, side by side.
    Compare {
        #[arg(long = "config-a")]
        config_a: PathBuf,
        #[arg(long = "config-b")]
        config_b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assumption checks only; no estimation.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
    },
}

fn out_dir(requested: Option<PathBuf>, id: &str) -> PathBuf {
    match requested {
        Some(d) => d,
        None => {
            let root = std::env::var_os(OUT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("out"));
            root.join(id)
        }
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, HarnessError> {
    let (cfg, warnings) = load_config(path)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn exit_for(err: &HarnessError) -> ExitCode {
    match err {
        HarnessError::Config(_) => ExitCode::from(2),
        HarnessError::Assumption(_) => ExitCode::from(3),
        _ => ExitCode::from(1),
    }
}

fn print_metrics(prefix: &str, m: &Metrics) {
    println!(
        "{prefix}steady-state max |theta_err| = {:.6e}",
        m.steady_state_max_theta_err
    );
    match m.time_to_epsilon {
        Some(t) => println!("{prefix}time to epsilon ({:.1e}) = {t:.2} s", m.epsilon),
        None => println!("{prefix}epsilon ({:.1e}) never reached", m.epsilon),
    }
    if let Some(v) = m.final_ln_xerr {
        println!("{prefix}final ln|x_err| = {v:.4}");
    }
}

fn report_run(res: &RunResult, dir: &Path) -> ExitCode {
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    print_metrics("", &res.metrics);
    println!("wrote {}", dir.display());
    if let Some(reason) = &res.aborted {
        eprintln!("aborted: {reason}");
        return ExitCode::from(4);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.cmd {
        Cmd::Run { config, out } => {
            let cfg = load(&config)?;
            let dir = out_dir(out, &cfg.id);
            let res = run_scenario(&cfg, Some(&dir))?;
            Ok(report_run(&res, &dir))
        }
        Cmd::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let cfg = load(&config)?;
            let param: SweepParam = param
                .parse()
                .map_err(|e: String| HarnessError::Config(vec![e]))?;
            let values: Vec<f64> = values
                .split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|e| {
                        HarnessError::Config(vec![format!("bad sweep value `{v}`: {e}")])
                    })
                })
                .collect::<Result<_, _>>()?;
            let dir = out_dir(out, &format!("{}_sweep", cfg.id));
            let rows = sweep(&cfg, param, &values, Some(&dir))?;
            write_sweep(&rows, param, &dir)?;
            let mut aborted = false;
            for row in &rows {
                println!(
                    "value {:>10}: steady-state max |theta_err| = {:.6e}",
                    row.value, row.metrics.steady_state_max_theta_err
                );
                if let Some(reason) = &row.aborted {
                    eprintln!("value {}: aborted: {reason}", row.value);
                    aborted = true;
                }
            }
            println!("wrote {}", dir.display());
            Ok(if aborted {
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            })
        }
        Cmd::Compare {
            config_a,
            config_b,
            out,
        } => {
            let cfg_a = load(&config_a)?;
            let cfg_b = load(&config_b)?;
            let dir = out_dir(out, &format!("{}_vs_{}", cfg_a.id, cfg_b.id));
            let (report, res_a, res_b) = compare(&cfg_a, &cfg_b, Some(&dir))?;
            println!("[a] {}", cfg_a.id);
            print_metrics("    ", &report.a);
            println!("[b] {}", cfg_b.id);
            print_metrics("    ", &report.b);
            println!("steady-state ratio a/b = {:.4}", report.steady_state_ratio);
            if let Some(d) = report.final_ln_xerr_diff {
                println!("final ln|x_err| difference a-b = {d:.4}");
            }
            println!("wrote {}", dir.display());
            if res_a.aborted.is_some() || res_b.aborted.is_some() {
                Ok(ExitCode::from(4))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Cmd::Diagnose { config } => {
            let cfg = load(&config)?;
            let report = diagnose(&cfg)?;
            print!("{}", report.render());
            Ok(if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
    }
}

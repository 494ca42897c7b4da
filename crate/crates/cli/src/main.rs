//! `cbf` — closed-loop barrier-filter experiments from the command line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cbf_cli::config::{sim_config_from_text, sweep_spec_from_text};
use cbf_cli::csvio::{fmt_f64, read_step_log, write_bound_samples, write_step_log, write_sweep_rows};
use cbf_cli::error::{map_core_error, CliError};
use cbf_cli::sweep::{feasibility_warning, run_sweep};
use cbf_core::bounds::{solve_bound_coefficients, InitialConditionVector};
use cbf_core::hocbf::LambdaVector;
use cbf_core::sim::{
    run_simulation, verify_decay_ttcbf, verify_dominance_hocbf, Approach, DominanceAnchor, SimLog,
};

#[derive(Parser)]
#[command(
    name = "cbf",
    about = "Barrier-filtered double-integrator experiments: runs, sweeps, decay bounds, and log validation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop simulation and write the per-step log as CSV.
    Simulate {
        /// Run configuration file (flat key = value).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path for the step log.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a parameter-grid sweep, one summary row per grid point.
    Sweep {
        /// Sweep specification file (run keys plus grid ranges).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path for the summary rows.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for the sweep (default: one per CPU).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Solve the closed-form decay bound and write sampled values.
    LowerBound {
        /// Decay rates, comma separated (e.g. `10,0.5`).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambdas: Vec<f64>,
        /// Initial value and derivatives at the anchor, comma separated.
        #[arg(long = "h-init", value_delimiter = ',', allow_hyphen_values = true)]
        h_init: Vec<f64>,
        /// Anchor time.
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        /// Sampling horizon past the anchor.
        #[arg(long = "t-max")]
        t_max: f64,
        /// Sampling interval.
        #[arg(long = "t-step")]
        t_step: f64,
        /// Output CSV path for the samples.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a logged run against its analytic decay guarantee.
    Validate {
        /// The run configuration the log was produced with.
        #[arg(long)]
        config: PathBuf,
        /// The step-log CSV to check.
        #[arg(long)]
        log: PathBuf,
        /// Where to anchor the continuous-time bound (chain approach only).
        #[arg(long, value_enum, default_value_t = AnchorArg::Start)]
        anchor: AnchorArg,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AnchorArg {
    /// Anchor at the first recorded step.
    Start,
    /// Anchor at the first step with the barrier constraint active.
    Activation,
}

impl From<AnchorArg> for DominanceAnchor {
    fn from(value: AnchorArg) -> Self {
        match value {
            AnchorArg::Start => DominanceAnchor::Start,
            AnchorArg::Activation => DominanceAnchor::Activation,
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, body: &[u8]) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(fmt_f64).unwrap_or_else(|| "na".into())
}

fn cmd_simulate(config_path: &Path, out_path: &Path) -> Result<(), CliError> {
    let config = sim_config_from_text(&read_to_string(config_path)?)?;
    let log = run_simulation(&config).map_err(map_core_error)?;
    let mut buffer = Vec::new();
    write_step_log(&mut buffer, &log)
        .map_err(|e| CliError::Config(format!("cannot serialize step log: {e}")))?;
    write_file(out_path, &buffer)?;
    let summary = &log.summary;
    println!(
        "steps={} mean_x_speed={} min_h={} bypassed={} infeasible_steps={}",
        log.steps.len(),
        fmt_opt(summary.mean_x_speed),
        fmt_opt(summary.min_h),
        summary
            .bypassed
            .map(|b| b.to_string())
            .unwrap_or_else(|| "na".into()),
        summary.infeasible_steps,
    );
    Ok(())
}

fn cmd_sweep(config_path: &Path, out_path: &Path, jobs: Option<usize>) -> Result<(), CliError> {
    let spec = sweep_spec_from_text(&read_to_string(config_path)?)?;
    if let Some(warning) = feasibility_warning(&spec) {
        eprintln!("{warning}");
    }
    let rows = match jobs {
        None => run_sweep(&spec)?,
        Some(jobs) => {
            if jobs == 0 {
                return Err(CliError::Config("--jobs must be at least 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
            pool.install(|| run_sweep(&spec))?
        }
    };
    let mut buffer = Vec::new();
    write_sweep_rows(&mut buffer, &rows)
        .map_err(|e| CliError::Config(format!("cannot serialize sweep rows: {e}")))?;
    write_file(out_path, &buffer)?;
    println!("wrote {} rows to {}", rows.len(), out_path.display());
    Ok(())
}

fn cmd_lower_bound(
    lambdas: &[f64],
    h_init: &[f64],
    t0: f64,
    t_max: f64,
    t_step: f64,
    out_path: &Path,
) -> Result<(), CliError> {
    if !t_step.is_finite() || t_step <= 0.0 {
        return Err(CliError::Config(format!(
            "--t-step = {t_step} must be strictly positive"
        )));
    }
    if !t_max.is_finite() || t_max < 0.0 {
        return Err(CliError::Config(format!(
            "--t-max = {t_max} must be finite and nonnegative"
        )));
    }
    let rates = LambdaVector::new(lambdas.to_vec()).map_err(map_core_error)?;
    let init = InitialConditionVector::new(h_init.to_vec(), t0).map_err(map_core_error)?;
    let bound = solve_bound_coefficients(&rates, &init).map_err(map_core_error)?;

    let samples = ((t_max / t_step) + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=samples).map(|i| t0 + i as f64 * t_step).collect();
    let mut buffer = Vec::new();
    write_bound_samples(&mut buffer, &bound, &times)?;
    write_file(out_path, &buffer)?;

    let joined = bound
        .coefficients
        .iter()
        .map(|&c| fmt_f64(c))
        .collect::<Vec<_>>()
        .join(", ");
    println!("c = [{joined}]");
    Ok(())
}

fn cmd_validate(config_path: &Path, log_path: &Path, anchor: AnchorArg) -> Result<(), CliError> {
    let config = sim_config_from_text(&read_to_string(config_path)?)?;
    let records = read_step_log(&read_to_string(log_path)?)?;
    let log = SimLog::from_records(records, None, None, Some(&config.obstacle));

    match &config.approach {
        Approach::Hocbf { lambdas } => {
            let report = verify_dominance_hocbf(&log, lambdas, anchor.into()).map_err(|e| {
                match e {
                    cbf_core::Error::EmptyLog | cbf_core::Error::ConstraintNeverActive => {
                        CliError::Validation(e.to_string())
                    }
                    other => map_core_error(other),
                }
            })?;
            let verdict = if report.pass { "PASS" } else { "FAIL" };
            println!(
                "dominance: {verdict} anchor_step={} anchor_time={} min_margin={} worst_step={} tolerance={}",
                report.anchor_step,
                fmt_f64(report.anchor_time),
                fmt_f64(report.min_margin),
                report.worst_step,
                fmt_f64(report.tolerance),
            );
            if !report.pass {
                return Err(CliError::Validation(format!(
                    "trajectory drops below its decay bound: margin {} at step {} (tolerance {})",
                    fmt_f64(report.min_margin),
                    report.worst_step,
                    fmt_f64(report.tolerance),
                )));
            }
        }
        Approach::Ttcbf { lambda1, .. } => {
            let report = verify_decay_ttcbf(&log, *lambda1).map_err(map_core_error)?;
            let verdict = if report.pass { "PASS" } else { "FAIL" };
            println!(
                "decay: {verdict} lambda1={} transitions={} per_step_violations={} cumulative_violations={}",
                fmt_f64(*lambda1),
                log.steps.len().saturating_sub(1),
                report.per_step.len(),
                report.cumulative.len(),
            );
            if !report.pass {
                let mut detail = String::new();
                for v in report.per_step.iter().take(5) {
                    detail.push_str(&format!(
                        "\n  step {}: deficit {} (tolerance {})",
                        v.step,
                        fmt_f64(v.deficit),
                        fmt_f64(v.tolerance)
                    ));
                }
                for v in report.cumulative.iter().take(3) {
                    detail.push_str(&format!(
                        "\n  from step {}: below propagated bound at step {} by {}",
                        v.anchor_step,
                        v.step,
                        fmt_f64(-v.deficit)
                    ));
                }
                return Err(CliError::Validation(format!(
                    "logged barrier values violate the per-step decay model:{detail}"
                )));
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate { config, out } => cmd_simulate(config, out),
        Command::Sweep { config, out, jobs } => cmd_sweep(config, out, *jobs),
        Command::LowerBound {
            lambdas,
            h_init,
            t0,
            t_max,
            t_step,
            out,
        } => cmd_lower_bound(lambdas, h_init, *t0, *t_max, *t_step, out),
        Command::Validate {
            config,
            log,
            anchor,
        } => cmd_validate(config, log, *anchor),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            let mut stderr = std::io::stderr();
            let _ = writeln!(stderr, "error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}

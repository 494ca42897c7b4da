//! CSV serialization for step logs, sweep summaries, and bound samples.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! parsed-back log is bit-identical to the one written and reruns of a
//! deterministic experiment produce byte-identical files. None of the cell
//! values can contain commas, so no quoting is needed.

use std::io::{self, Write};

use cbf_core::bounds::{eval_bound_ct, ExponentialSumBound};
use cbf_core::plant::RobotState;
use cbf_core::qp::ConstraintLabel;
use cbf_core::sim::{SimLog, StepRecord};

use crate::error::{map_core_error, CliError};
use crate::sweep::SweepRow;

/// Column order of a step log.
pub const STEP_HEADER: &str =
    "step,t,x,y,vx,vy,ux,uy,h,h_dot,constraint_offset,active_set,status,ttcbf_slack";

/// Column order of a sweep summary.
pub const SWEEP_HEADER: &str = "lambda1,lambda2,mean_x_speed,min_h,bypassed,infeasible_steps";

/// Shortest decimal representation that parses back to exactly `v`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn fmt_active_set(labels: &[ConstraintLabel]) -> String {
    labels
        .iter()
        .map(ConstraintLabel::as_str)
        .collect::<Vec<_>>()
        .join(";")
}

/// Writes the per-step log, header first.
pub fn write_step_log(out: &mut dyn Write, log: &SimLog) -> io::Result<()> {
    writeln!(out, "{STEP_HEADER}")?;
    for r in &log.steps {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            fmt_f64(r.time),
            fmt_f64(r.state.x),
            fmt_f64(r.state.y),
            fmt_f64(r.state.vx),
            fmt_f64(r.state.vy),
            fmt_f64(r.input[0]),
            fmt_f64(r.input[1]),
            fmt_f64(r.h),
            fmt_f64(r.h_dot),
            fmt_f64(r.constraint_offset),
            fmt_active_set(&r.active_set),
            r.status,
            fmt_opt_f64(r.ttcbf_slack),
        )?;
    }
    Ok(())
}

fn parse_cell_f64(cell: &str, column: &str, lineno: usize) -> Result<f64, CliError> {
    cell.parse::<f64>().map_err(|_| {
        CliError::Config(format!(
            "line {lineno}: column `{column}`: `{cell}` is not a number"
        ))
    })
}

/// Parses a step log written by [`write_step_log`].
pub fn read_step_log(text: &str) -> Result<Vec<StepRecord>, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == STEP_HEADER => {}
        Some((_, header)) => {
            return Err(CliError::Config(format!(
                "unexpected step-log header `{header}`"
            )))
        }
        None => return Err(CliError::Config("empty step log".into())),
    }

    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 14 {
            return Err(CliError::Config(format!(
                "line {lineno}: expected 14 columns, found {}",
                cells.len()
            )));
        }
        let step = cells[0].parse::<usize>().map_err(|_| {
            CliError::Config(format!(
                "line {lineno}: column `step`: `{}` is not an index",
                cells[0]
            ))
        })?;
        let active_set = if cells[11].is_empty() {
            vec![]
        } else {
            cells[11]
                .split(';')
                .map(|s| {
                    s.parse::<ConstraintLabel>().map_err(|_| {
                        CliError::Config(format!(
                            "line {lineno}: column `active_set`: unknown label `{s}`"
                        ))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        let status = cells[12].parse().map_err(map_core_error)?;
        let ttcbf_slack = if cells[13].is_empty() {
            None
        } else {
            Some(parse_cell_f64(cells[13], "ttcbf_slack", lineno)?)
        };
        records.push(StepRecord {
            step,
            time: parse_cell_f64(cells[1], "t", lineno)?,
            state: RobotState {
                x: parse_cell_f64(cells[2], "x", lineno)?,
                y: parse_cell_f64(cells[3], "y", lineno)?,
                vx: parse_cell_f64(cells[4], "vx", lineno)?,
                vy: parse_cell_f64(cells[5], "vy", lineno)?,
            },
            input: [
                parse_cell_f64(cells[6], "ux", lineno)?,
                parse_cell_f64(cells[7], "uy", lineno)?,
            ],
            h: parse_cell_f64(cells[8], "h", lineno)?,
            h_dot: parse_cell_f64(cells[9], "h_dot", lineno)?,
            constraint_offset: parse_cell_f64(cells[10], "constraint_offset", lineno)?,
            active_set,
            status,
            ttcbf_slack,
        });
    }
    Ok(records)
}

/// Writes one summary row per sweep point, in sweep order.
pub fn write_sweep_rows(out: &mut dyn Write, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(row.lambda1),
            fmt_opt_f64(row.lambda2),
            fmt_opt_f64(row.mean_x_speed),
            fmt_opt_f64(row.min_h),
            row.bypassed.map(|b| b.to_string()).unwrap_or_default(),
            row.infeasible_steps,
        )?;
    }
    Ok(())
}

/// Writes the solved bound — rates, coefficients, anchor — as `#` comment
/// lines, followed by `t,h_lb` samples at the given times.
pub fn write_bound_samples(
    out: &mut dyn Write,
    bound: &ExponentialSumBound,
    times: &[f64],
) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Config(format!("write failed: {e}"));
    let join = |vals: &[f64]| {
        vals.iter()
            .map(|&v| fmt_f64(v))
            .collect::<Vec<_>>()
            .join(",")
    };
    writeln!(out, "# rates: {}", join(bound.rates.as_slice())).map_err(io_err)?;
    writeln!(out, "# coefficients: {}", join(&bound.coefficients)).map_err(io_err)?;
    writeln!(out, "# t0: {}", fmt_f64(bound.t0)).map_err(io_err)?;
    writeln!(out, "t,h_lb").map_err(io_err)?;
    for &t in times {
        let value = eval_bound_ct(bound, t).map_err(map_core_error)?;
        writeln!(out, "{},{}", fmt_f64(t), fmt_f64(value)).map_err(io_err)?;
    }
    Ok(())
}

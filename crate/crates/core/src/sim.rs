//! Closed-loop simulation of the safety-filtered double integrator, plus
//! post-hoc verification of the analytic decay guarantees against logged
//! trajectories.
//!
//! Each step builds the barrier constraint for the configured approach,
//! solves the tracking QP, and advances the state with the exact
//! zero-order-hold update
//!
//! ```text
//! x⁺ = x + Δt vx + (Δt²/2) ux        vx⁺ = vx + Δt ux
//! y⁺ = y + Δt vy + (Δt²/2) uy        vy⁺ = vy + Δt uy
//! ```
//!
//! If a step's QP is infeasible the loop falls back to the box-clamped
//! unconstrained minimizer, flags the step, and keeps going, so a log is
//! always produced.

use crate::bounds::{
    eval_bound_ct, solve_bound_coefficients, ExponentialSumBound, InitialConditionVector,
};
use crate::error::{Error, Result};
use crate::hocbf::LambdaVector;
use crate::plant::{
    cbf_derivatives, cbf_value, taylor_truncation_slack, ttcbf_constraint, hocbf_constraint,
    ObstacleSpec, RobotState,
};
use crate::qp::{
    build_qp, solve_qp, ConstraintLabel, InputBounds, Penalties, SolveStatus, TrackingReferences,
};

/// Per-step tolerance factor for the discrete decay check.
const DECAY_TOL_FACTOR: f64 = 1e-6;

/// Which barrier constraint the filter enforces.
#[derive(Debug, Clone, PartialEq)]
pub enum Approach {
    /// Flattened chain condition with gains `(λ_1, λ_2)`.
    Hocbf { lambdas: LambdaVector },
    /// One-step truncated-Taylor condition with decay `λ_1 ∈ (0, 1]` and
    /// margin gain `γ ≥ 0`.
    Ttcbf { lambda1: f64, gamma: f64 },
}

/// Everything needed to run one closed-loop experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub obstacle: ObstacleSpec,
    pub initial_state: RobotState,
    pub references: TrackingReferences,
    pub penalties: Penalties,
    pub dt: f64,
    pub duration: f64,
    pub approach: Approach,
    pub bounds: InputBounds,
}

impl SimConfig {
    /// Validates every field; called by [`run_simulation`] before stepping.
    pub fn validate(&self) -> Result<()> {
        self.obstacle.validate()?;
        self.penalties.validate()?;
        self.bounds.validate()?;
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::NonPositiveDt { value: self.dt });
        }
        if !self.duration.is_finite() || self.duration < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "duration = {} must be finite and nonnegative",
                self.duration
            )));
        }
        for (name, value) in [
            ("init_x", self.initial_state.x),
            ("init_y", self.initial_state.y),
            ("init_vx", self.initial_state.vx),
            ("init_vy", self.initial_state.vy),
            ("y_ref", self.references.y_ref),
            ("vx_ref", self.references.vx_ref),
            ("vy_ref", self.references.vy_ref),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} = {value} is not finite")));
            }
        }
        match &self.approach {
            Approach::Hocbf { lambdas } => {
                if lambdas.relative_degree() != 2 {
                    return Err(Error::InvalidConfig(format!(
                        "the chain approach needs exactly 2 gains for this plant, got {}",
                        lambdas.relative_degree()
                    )));
                }
            }
            Approach::Ttcbf { lambda1, gamma } => {
                if !(*lambda1 > 0.0 && *lambda1 <= 1.0) {
                    return Err(Error::RateOutsideUnitInterval { value: *lambda1 });
                }
                if !gamma.is_finite() || *gamma < 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "gamma = {gamma} must be finite and nonnegative"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of control steps: `floor(duration / dt)`, nudged so that
    /// durations that are exact multiples of `dt` in decimal (e.g. 2 / 0.01)
    /// are not truncated by binary rounding.
    pub fn step_count(&self) -> usize {
        ((self.duration / self.dt) + 1e-9).floor() as usize
    }
}

/// One recorded control step. `state` and derived quantities are sampled at
/// the step start, `input` is the command applied over the step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub state: RobotState,
    pub input: [f64; 2],
    pub h: f64,
    pub h_dot: f64,
    /// Offset of the barrier constraint `normal · u + offset ≥ 0` at this
    /// step (the constraint's value at `u = 0`).
    pub constraint_offset: f64,
    pub active_set: Vec<ConstraintLabel>,
    pub status: SolveStatus,
    /// Observed one-step decay surplus for the truncated-Taylor approach;
    /// absent under the chain approach.
    pub ttcbf_slack: Option<f64>,
}

/// Aggregates over a completed run. Fields are `None` when the log holds no
/// data to compute them from (e.g. a zero-duration run has no steps to
/// average speed over).
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    /// Arithmetic mean of the per-step `vx` samples.
    pub mean_x_speed: Option<f64>,
    /// Minimum barrier value over all step samples and the final state.
    pub min_h: Option<f64>,
    /// Whether the robot ended strictly past the obstacle
    /// (`x > x_obs + r_robot + r_obs`).
    pub bypassed: Option<bool>,
    pub infeasible_steps: usize,
}

/// Complete record of one run. Logs reconstructed from CSV lack the final
/// state, so those fields are optional.
#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub steps: Vec<StepRecord>,
    pub final_state: Option<RobotState>,
    pub final_h: Option<f64>,
    pub summary: SimSummary,
}

impl SimLog {
    /// Builds a log (and its summary) from step records, e.g. after parsing
    /// a CSV back in. `bypassed` needs both the final state and the
    /// obstacle.
    pub fn from_records(
        steps: Vec<StepRecord>,
        final_state: Option<RobotState>,
        final_h: Option<f64>,
        obstacle: Option<&ObstacleSpec>,
    ) -> SimLog {
        let infeasible_steps = steps
            .iter()
            .filter(|s| s.status == SolveStatus::Infeasible)
            .count();
        let mean_x_speed = if steps.is_empty() {
            None
        } else {
            Some(steps.iter().map(|s| s.state.vx).sum::<f64>() / steps.len() as f64)
        };
        let min_h = steps
            .iter()
            .map(|s| s.h)
            .chain(final_h)
            .fold(None, |acc: Option<f64>, h| {
                Some(acc.map_or(h, |m| m.min(h)))
            });
        let bypassed = match (final_state, obstacle) {
            (Some(state), Some(obs)) => Some(state.x > obs.x_obs + obs.combined_radius()),
            _ => None,
        };
        SimLog {
            steps,
            final_state,
            final_h,
            summary: SimSummary {
                mean_x_speed,
                min_h,
                bypassed,
                infeasible_steps,
            },
        }
    }

    /// Index of the first step at which the barrier constraint is in the QP
    /// active set.
    pub fn first_activation(&self) -> Option<usize> {
        self.steps
            .iter()
            .position(|s| s.active_set.contains(&ConstraintLabel::Cbf))
    }
}

/// Exact zero-order-hold update of the double integrator.
pub fn step_dynamics(state: &RobotState, u: [f64; 2], dt: f64) -> RobotState {
    let half_dt2 = dt * dt / 2.0;
    RobotState {
        x: state.x + dt * state.vx + half_dt2 * u[0],
        y: state.y + dt * state.vy + half_dt2 * u[1],
        vx: state.vx + dt * u[0],
        vy: state.vy + dt * u[1],
    }
}

/// Runs the closed loop for `floor(duration / dt)` steps.
pub fn run_simulation(config: &SimConfig) -> Result<SimLog> {
    config.validate()?;
    let n = config.step_count();
    let mut state = config.initial_state;
    let mut steps = Vec::with_capacity(n);

    for k in 0..n {
        let stack = cbf_derivatives(&state, &config.obstacle);
        let constraint = match &config.approach {
            Approach::Hocbf { lambdas } => hocbf_constraint(&stack, lambdas)?,
            Approach::Ttcbf { lambda1, gamma } => {
                ttcbf_constraint(&stack, *lambda1, *gamma, config.dt, 2)?
            }
        };
        let problem = build_qp(
            &state,
            &config.references,
            &config.penalties,
            config.dt,
            constraint,
            &config.bounds,
        )?;
        let solution = solve_qp(&problem);
        let input = match solution.status {
            SolveStatus::Optimal => solution.u,
            // Keep flying on the best unconstrained command the box allows;
            // the flagged status preserves the evidence.
            SolveStatus::Infeasible => config.bounds.clamp([
                -problem.linear[0] / problem.quadratic_diag[0],
                -problem.linear[1] / problem.quadratic_diag[1],
            ]),
        };
        let next = step_dynamics(&state, input, config.dt);
        let ttcbf_slack = match &config.approach {
            Approach::Ttcbf { lambda1, gamma } => Some(taylor_truncation_slack(
                stack.h,
                cbf_value(&next, &config.obstacle),
                *lambda1,
                *gamma,
                0.0,
                config.dt,
                2,
            )),
            Approach::Hocbf { .. } => None,
        };
        steps.push(StepRecord {
            step: k,
            time: k as f64 * config.dt,
            state,
            input,
            h: stack.h,
            h_dot: stack.h_dot,
            constraint_offset: constraint.offset,
            active_set: solution.active_set,
            status: solution.status,
            ttcbf_slack,
        });
        state = next;
    }

    let final_h = cbf_value(&state, &config.obstacle);
    Ok(SimLog::from_records(
        steps,
        Some(state),
        Some(final_h),
        Some(&config.obstacle),
    ))
}

/// Where to anchor the continuous-time decay bound on a logged trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DominanceAnchor {
    /// The first recorded step.
    Start,
    /// The first step at which the barrier constraint is in the active set.
    Activation,
}

/// Result of checking a log against the exponential-sum bound.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub anchor_step: usize,
    pub anchor_time: f64,
    pub bound: ExponentialSumBound,
    /// Minimum of `h(t_k) - h_lb(t_k)` over the checked steps.
    pub min_margin: f64,
    /// Step index attaining the minimum margin.
    pub worst_step: usize,
    /// Allowed shortfall: margins down to `-tolerance` still pass.
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks that the logged barrier values dominate the closed-form
/// exponential-sum bound anchored at the chosen step, with an allowed
/// shortfall of `1e-3 · h(anchor)`.
pub fn verify_dominance_hocbf(
    log: &SimLog,
    lambdas: &LambdaVector,
    anchor: DominanceAnchor,
) -> Result<DominanceReport> {
    if log.steps.is_empty() {
        return Err(Error::EmptyLog);
    }
    let anchor_step = match anchor {
        DominanceAnchor::Start => 0,
        DominanceAnchor::Activation => {
            log.first_activation().ok_or(Error::ConstraintNeverActive)?
        }
    };
    let anchor_record = &log.steps[anchor_step];
    let init = InitialConditionVector::new(
        vec![anchor_record.h, anchor_record.h_dot],
        anchor_record.time,
    )?;
    let bound = solve_bound_coefficients(lambdas, &init)?;

    let mut min_margin = f64::INFINITY;
    let mut worst_step = anchor_step;
    for record in &log.steps[anchor_step..] {
        let margin = record.h - eval_bound_ct(&bound, record.time)?;
        if margin < min_margin {
            min_margin = margin;
            worst_step = record.step;
        }
    }
    let tolerance = 1e-3 * anchor_record.h;
    Ok(DominanceReport {
        anchor_step,
        anchor_time: anchor_record.time,
        bound,
        min_margin,
        worst_step,
        tolerance,
        pass: min_margin >= -tolerance,
    })
}

/// One violated per-step decay transition `k → k+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayViolation {
    /// Index `k` of the transition start.
    pub step: usize,
    /// `h_{k+1} - (1-λ) h_k`; negative beyond `tolerance` to be reported.
    pub deficit: f64,
    pub tolerance: f64,
}

/// First violated cumulative bound for one anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeViolation {
    pub anchor_step: usize,
    /// First step at which `h_k` fell below `(1-λ)^(k-k0) h_{k0}`.
    pub step: usize,
    pub deficit: f64,
    pub tolerance: f64,
}

/// Result of checking geometric decay of a logged barrier sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub lambda1: f64,
    pub per_step: Vec<DecayViolation>,
    /// At most one (the first) violation per anchor.
    pub cumulative: Vec<CumulativeViolation>,
    pub pass: bool,
}

/// Checks `h_{k+1} ≥ (1-λ) h_k` for every logged transition, and the
/// propagated bound `h_k ≥ (1-λ)^(k-k0) h_{k0}` from every anchor `k0`.
///
/// The per-step tolerance is `1e-6 · max(1, |h_k|)`; the cumulative
/// tolerance propagates it through the same recursion,
/// `tol_k = (1-λ) tol_{k-1} + 1e-6 · max(1, |h_{k-1}|)`, so a cumulative
/// failure always points at genuinely accumulated loss rather than
/// re-counted rounding.
pub fn verify_decay_ttcbf(log: &SimLog, lambda1: f64) -> Result<DecayReport> {
    if !(lambda1 > 0.0 && lambda1 <= 1.0) {
        return Err(Error::RateOutsideUnitInterval { value: lambda1 });
    }
    let mut h: Vec<f64> = log.steps.iter().map(|s| s.h).collect();
    if let Some(final_h) = log.final_h {
        h.push(final_h);
    }
    let retain = 1.0 - lambda1;

    let mut per_step = Vec::new();
    for k in 0..h.len().saturating_sub(1) {
        let tolerance = DECAY_TOL_FACTOR * h[k].abs().max(1.0);
        let deficit = h[k + 1] - retain * h[k];
        if deficit < -tolerance {
            per_step.push(DecayViolation {
                step: k,
                deficit,
                tolerance,
            });
        }
    }

    let mut cumulative = Vec::new();
    for k0 in 0..h.len().saturating_sub(1) {
        let mut bound = h[k0];
        let mut tolerance = 0.0;
        for k in k0 + 1..h.len() {
            bound *= retain;
            tolerance = retain * tolerance + DECAY_TOL_FACTOR * h[k - 1].abs().max(1.0);
            if h[k] < bound - tolerance {
                cumulative.push(CumulativeViolation {
                    anchor_step: k0,
                    step: k,
                    deficit: h[k] - bound,
                    tolerance,
                });
                break;
            }
        }
    }

    let pass = per_step.is_empty() && cumulative.is_empty();
    Ok(DecayReport {
        lambda1,
        per_step,
        cumulative,
        pass,
    })
}

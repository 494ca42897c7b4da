//! Planar double-integrator plant with a squared-distance barrier around a
//! static disk obstacle, plus assembly of the linear input constraints the
//! two filtering approaches impose on the acceleration command.
//!
//! With `p = (x - x_obs, y - y_obs)` and combined radius
//! `R = r_robot + r_obs`:
//!
//! ```text
//! h  = ‖p‖² - R²
//! ḣ  = 2 p · v
//! ḧ  = 2 ‖v‖² + 2 p · u
//! ```
//!
//! The input first appears in the second derivative (relative degree 2),
//! which splits into a drift term and a row acting on `u = (ux, uy)`.

use crate::error::{Error, Result};
use crate::hocbf::{flatten_hocbf, LambdaVector};

/// Planar position and velocity of the robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

/// A static disk obstacle together with the robot's own radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleSpec {
    pub x_obs: f64,
    pub y_obs: f64,
    pub r_obs: f64,
    pub r_robot: f64,
}

impl ObstacleSpec {
    /// Checks that both radii are strictly positive and all fields finite.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("obs_x", self.x_obs),
            ("obs_y", self.y_obs),
            ("obs_radius", self.r_obs),
            ("robot_radius", self.r_robot),
        ] {
            if !value.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} = {value} is not finite")));
            }
        }
        if self.r_obs <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "obs_radius = {} must be strictly positive",
                self.r_obs
            )));
        }
        if self.r_robot <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "robot_radius = {} must be strictly positive",
                self.r_robot
            )));
        }
        Ok(())
    }

    /// Combined keep-out radius `r_robot + r_obs`.
    pub fn combined_radius(&self) -> f64 {
        self.r_robot + self.r_obs
    }
}

/// Barrier value and derivatives up to the level where the input appears.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeStack {
    pub h: f64,
    pub h_dot: f64,
    /// Input-independent part of `ḧ`.
    pub h_ddot_drift: f64,
    /// Row multiplying `u` in `ḧ`.
    pub h_ddot_input: [f64; 2],
}

/// A half-plane constraint on the input, in the sense
/// `normal · u + offset ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearInputConstraint {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl LinearInputConstraint {
    /// Signed slack `normal · u + offset`; nonnegative means satisfied.
    pub fn slack(&self, u: [f64; 2]) -> f64 {
        self.normal[0] * u[0] + self.normal[1] * u[1] + self.offset
    }
}

/// Squared clearance `‖p‖² - (r_robot + r_obs)²`.
pub fn cbf_value(state: &RobotState, obstacle: &ObstacleSpec) -> f64 {
    let px = state.x - obstacle.x_obs;
    let py = state.y - obstacle.y_obs;
    let radius = obstacle.combined_radius();
    px * px + py * py - radius * radius
}

/// Barrier derivatives along the double-integrator dynamics.
pub fn cbf_derivatives(state: &RobotState, obstacle: &ObstacleSpec) -> DerivativeStack {
    let px = state.x - obstacle.x_obs;
    let py = state.y - obstacle.y_obs;
    DerivativeStack {
        h: cbf_value(state, obstacle),
        h_dot: 2.0 * (px * state.vx + py * state.vy),
        h_ddot_drift: 2.0 * (state.vx * state.vx + state.vy * state.vy),
        h_ddot_input: [2.0 * px, 2.0 * py],
    }
}

/// Assembles the flattened chain condition `Σ_j e_{r-j} h^(j) ≥ 0` as a
/// constraint on `u` for arbitrary relative degree.
///
/// `derivs` holds the input-independent derivatives `[h, ḣ, …, h^(r-1)]`
/// and the top derivative is supplied split as `top_drift + top_input · u`.
/// The top coefficient `e_0` is exactly 1, so the input row passes through
/// unscaled.
pub fn hocbf_constraint_general(
    derivs: &[f64],
    top_drift: f64,
    top_input: [f64; 2],
    lambdas: &LambdaVector,
) -> Result<LinearInputConstraint> {
    let r = lambdas.relative_degree();
    if derivs.len() != r {
        return Err(Error::DegreeMismatch {
            expected: r,
            found: derivs.len(),
        });
    }
    let flat = flatten_hocbf(lambdas);
    let mut offset = top_drift;
    for (j, &value) in derivs.iter().enumerate() {
        offset += flat.coefficients[j] * value;
    }
    Ok(LinearInputConstraint {
        normal: top_input,
        offset,
    })
}

/// Chain condition for this plant's relative degree 2:
/// `ḧ + (λ_1 + λ_2) ḣ + λ_1 λ_2 h ≥ 0` as a half-plane on `u`.
pub fn hocbf_constraint(
    stack: &DerivativeStack,
    lambdas: &LambdaVector,
) -> Result<LinearInputConstraint> {
    if lambdas.relative_degree() != 2 {
        return Err(Error::DegreeMismatch {
            expected: 2,
            found: lambdas.relative_degree(),
        });
    }
    hocbf_constraint_general(
        &[stack.h, stack.h_dot],
        stack.h_ddot_drift,
        stack.h_ddot_input,
        lambdas,
    )
}

/// One-step truncated-Taylor condition for relative degree 2:
///
/// ```text
/// Δt ḣ + (Δt²/2) ḧ + λ_1 h ≥ γ Δt^(r+1)
/// ```
///
/// as a half-plane on `u`, with `λ_1 ∈ (0, 1]` and margin gain `γ ≥ 0`.
pub fn ttcbf_constraint(
    stack: &DerivativeStack,
    lambda1: f64,
    gamma: f64,
    dt: f64,
    r: u32,
) -> Result<LinearInputConstraint> {
    if lambda1.is_nan() || lambda1 <= 0.0 || lambda1 > 1.0 {
        return Err(Error::RateOutsideUnitInterval { value: lambda1 });
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::NonPositiveDt { value: dt });
    }
    if r != 2 {
        return Err(Error::DegreeMismatch {
            expected: 2,
            found: r as usize,
        });
    }
    let half_dt2 = dt * dt / 2.0;
    Ok(LinearInputConstraint {
        normal: [
            half_dt2 * stack.h_ddot_input[0],
            half_dt2 * stack.h_ddot_input[1],
        ],
        offset: dt * stack.h_dot + half_dt2 * stack.h_ddot_drift + lambda1 * stack.h
            - gamma * dt.powi(r as i32 + 1),
    })
}

/// Slack of the observed one-step barrier update against the worst-case
/// Taylor-remainder prediction:
///
/// ```text
/// h_{k+1} - [ (1 - λ_1) h_k + (γ - Γ/(r+1)!) Δt^(r+1) ]
/// ```
///
/// where `Γ` bounds the magnitude of `h^(r+1)` over the step. Nonnegative
/// slack means the decay model held with the claimed margin.
pub fn taylor_truncation_slack(
    h_k: f64,
    h_k1: f64,
    lambda1: f64,
    gamma: f64,
    bound_gamma_r1: f64,
    dt: f64,
    r: u32,
) -> f64 {
    let factorial: f64 = (1..=r + 1).map(f64::from).product();
    h_k1 - ((1.0 - lambda1) * h_k + (gamma - bound_gamma_r1 / factorial) * dt.powi(r as i32 + 1))
}

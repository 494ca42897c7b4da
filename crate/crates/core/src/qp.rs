//! Per-step safety-filter QP in the two acceleration inputs.
//!
//! The tracking objective penalizes squared deviations of one-step
//! zero-order-hold predictions from references:
//!
//! ```text
//! J(u) = p_vx (vx + Δt ux - vx_ref)²
//!      + p_vy (vy + Δt uy - vy_ref)²
//!      + p_y  (y + Δt vy + (Δt²/2) uy - y_ref)²
//! ```
//!
//! which is separable and strictly convex in `(ux, uy)` whenever each axis
//! retains positive curvature. The feasible set is one barrier half-plane
//! plus the input box — at most five inequalities in two variables — so the
//! exact optimum is found by enumerating every candidate active set of size
//! ≤ 2, solving the equality-constrained KKT system, and keeping the best
//! candidate whose multipliers and primal feasibility check out.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::plant::{LinearInputConstraint, RobotState};

/// Slack below which a candidate point is accepted as primal feasible.
const FEASIBILITY_TOL: f64 = 1e-8;

/// Multipliers may dip this far below zero before a candidate is rejected.
const MULTIPLIER_TOL: f64 = -1e-10;

/// A later candidate must beat the incumbent objective by more than this
/// (relative) margin to replace it, which pins the tie-break to the
/// enumeration order: smaller active sets first, then lexicographic label
/// order.
const IMPROVEMENT_TOL: f64 = 1e-12;

/// Names for the five possible inequality constraints. The ordinal order is
/// the tie-break order for reported active sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintLabel {
    Cbf,
    UxMin,
    UxMax,
    UyMin,
    UyMax,
}

impl ConstraintLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstraintLabel::Cbf => "cbf",
            ConstraintLabel::UxMin => "ux_min",
            ConstraintLabel::UxMax => "ux_max",
            ConstraintLabel::UyMin => "uy_min",
            ConstraintLabel::UyMax => "uy_max",
        }
    }
}

impl fmt::Display for ConstraintLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstraintLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cbf" => Ok(ConstraintLabel::Cbf),
            "ux_min" => Ok(ConstraintLabel::UxMin),
            "ux_max" => Ok(ConstraintLabel::UxMax),
            "uy_min" => Ok(ConstraintLabel::UyMin),
            "uy_max" => Ok(ConstraintLabel::UyMax),
            other => Err(Error::UnknownConstraintLabel(other.to_string())),
        }
    }
}

/// Outcome of a QP solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
        })
    }
}

impl FromStr for SolveStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(SolveStatus::Optimal),
            "infeasible" => Ok(SolveStatus::Infeasible),
            other => Err(Error::UnknownSolveStatus(other.to_string())),
        }
    }
}

/// Tracking references for the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingReferences {
    pub y_ref: f64,
    pub vx_ref: f64,
    pub vy_ref: f64,
}

/// Nonnegative objective weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalties {
    pub p_vx: f64,
    pub p_vy: f64,
    pub p_y: f64,
}

impl Penalties {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("p_vx", self.p_vx), ("p_vy", self.p_vy), ("p_y", self.p_y)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} = {value} must be finite and nonnegative"
                )));
            }
        }
        Ok(())
    }
}

/// Per-axis input box `u_min ≤ u ≤ u_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputBounds {
    pub u_min: [f64; 2],
    pub u_max: [f64; 2],
}

impl InputBounds {
    /// Same symmetric limits on both axes.
    pub fn symmetric(u_min: f64, u_max: f64) -> Self {
        Self {
            u_min: [u_min, u_min],
            u_max: [u_max, u_max],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for axis in 0..2 {
            let (lo, hi) = (self.u_min[axis], self.u_max[axis]);
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidConfig(format!(
                    "input bounds on axis {axis} must satisfy u_min < u_max, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Clamps `u` into the box, axis by axis.
    pub fn clamp(&self, u: [f64; 2]) -> [f64; 2] {
        [
            u[0].clamp(self.u_min[0], self.u_max[0]),
            u[1].clamp(self.u_min[1], self.u_max[1]),
        ]
    }
}

/// A two-variable QP: minimize
/// `½ uᵀ diag(quadratic_diag) u + linear · u + constant` subject to each
/// inequality's `normal · u + offset ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    /// Hessian diagonal; both entries strictly positive for built problems.
    pub quadratic_diag: [f64; 2],
    pub linear: [f64; 2],
    pub constant: f64,
    pub inequalities: Vec<(ConstraintLabel, LinearInputConstraint)>,
}

impl QpProblem {
    /// Objective value at `u`.
    pub fn objective(&self, u: [f64; 2]) -> f64 {
        0.5 * (self.quadratic_diag[0] * u[0] * u[0] + self.quadratic_diag[1] * u[1] * u[1])
            + self.linear[0] * u[0]
            + self.linear[1] * u[1]
            + self.constant
    }

    fn is_feasible(&self, u: [f64; 2]) -> bool {
        self.inequalities
            .iter()
            .all(|(_, c)| c.slack(u) >= -FEASIBILITY_TOL)
    }
}

/// Result of [`solve_qp`]. On infeasibility `u` is zero and the objective
/// is `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub u: [f64; 2],
    pub status: SolveStatus,
    /// Labels of the constraints active at the optimum, in label order.
    pub active_set: Vec<ConstraintLabel>,
    pub objective_value: f64,
}

/// Builds the per-step tracking QP around the current state, with the
/// barrier half-plane and the input box as inequalities.
pub fn build_qp(
    state: &RobotState,
    references: &TrackingReferences,
    penalties: &Penalties,
    dt: f64,
    cbf: LinearInputConstraint,
    bounds: &InputBounds,
) -> Result<QpProblem> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::NonPositiveDt { value: dt });
    }
    let half_dt2 = dt * dt / 2.0;
    let dvx = state.vx - references.vx_ref;
    let dvy = state.vy - references.vy_ref;
    let dy = state.y + dt * state.vy - references.y_ref;

    let quadratic_diag = [
        2.0 * penalties.p_vx * dt * dt,
        2.0 * (penalties.p_vy * dt * dt + penalties.p_y * half_dt2 * half_dt2),
    ];
    for (axis, q) in ['x', 'y'].into_iter().zip(quadratic_diag) {
        if !q.is_finite() || q <= 0.0 {
            return Err(Error::NonPositiveCurvature { axis, value: q });
        }
    }

    let linear = [
        2.0 * penalties.p_vx * dt * dvx,
        2.0 * penalties.p_vy * dt * dvy + 2.0 * penalties.p_y * half_dt2 * dy,
    ];
    let constant = penalties.p_vx * dvx * dvx + penalties.p_vy * dvy * dvy + penalties.p_y * dy * dy;

    let inequalities = vec![
        (ConstraintLabel::Cbf, cbf),
        (
            ConstraintLabel::UxMin,
            LinearInputConstraint {
                normal: [1.0, 0.0],
                offset: -bounds.u_min[0],
            },
        ),
        (
            ConstraintLabel::UxMax,
            LinearInputConstraint {
                normal: [-1.0, 0.0],
                offset: bounds.u_max[0],
            },
        ),
        (
            ConstraintLabel::UyMin,
            LinearInputConstraint {
                normal: [0.0, 1.0],
                offset: -bounds.u_min[1],
            },
        ),
        (
            ConstraintLabel::UyMax,
            LinearInputConstraint {
                normal: [0.0, -1.0],
                offset: bounds.u_max[1],
            },
        ),
    ];

    Ok(QpProblem {
        quadratic_diag,
        linear,
        constant,
        inequalities,
    })
}

/// Solves the candidate with active set `active` (indices into
/// `problem.inequalities`) as an equality-constrained problem. Returns the
/// stationary point and its multipliers, or `None` when the KKT system is
/// singular.
fn solve_candidate(problem: &QpProblem, active: &[usize]) -> Option<([f64; 2], Vec<f64>)> {
    let q = problem.quadratic_diag;
    if active.is_empty() {
        if !(q[0] > 0.0 && q[1] > 0.0) {
            return None;
        }
        return Some(([-problem.linear[0] / q[0], -problem.linear[1] / q[1]], vec![]));
    }

    let m = active.len();
    let n = 2 + m;
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    a[0][0] = q[0];
    a[1][1] = q[1];
    b[0] = -problem.linear[0];
    b[1] = -problem.linear[1];
    for (k, &idx) in active.iter().enumerate() {
        let c = &problem.inequalities[idx].1;
        // Stationarity: Q u - Σ μ_k n_k = -linear.
        a[0][2 + k] = -c.normal[0];
        a[1][2 + k] = -c.normal[1];
        // Primal: n_k · u = -offset.
        a[2 + k][0] = c.normal[0];
        a[2 + k][1] = c.normal[1];
        b[2 + k] = -c.offset;
    }
    let solution = solve_dense(a, b)?;
    Some(([solution[0], solution[1]], solution[2..].to_vec()))
}

/// Exact active-set enumeration for the five-constraint, two-variable QP.
///
/// Every subset of constraints of size ≤ 2 is tried as an equality system;
/// a candidate survives if its multipliers are (numerically) nonnegative
/// and the point satisfies all inequalities. Among surviving candidates the
/// lowest objective wins, with ties resolved toward the smallest active set
/// and then lexicographic label order.
pub fn solve_qp(problem: &QpProblem) -> QpSolution {
    let mut order: Vec<usize> = (0..problem.inequalities.len()).collect();
    order.sort_by_key(|&i| problem.inequalities[i].0);

    let mut candidates: Vec<Vec<usize>> = vec![vec![]];
    for &i in &order {
        candidates.push(vec![i]);
    }
    for a in 0..order.len() {
        for b in a + 1..order.len() {
            candidates.push(vec![order[a], order[b]]);
        }
    }

    let mut best: Option<(f64, [f64; 2], Vec<usize>)> = None;
    for candidate in &candidates {
        let Some((u, multipliers)) = solve_candidate(problem, candidate) else {
            continue;
        };
        if multipliers.iter().any(|&mu| mu < MULTIPLIER_TOL) {
            continue;
        }
        if !problem.is_feasible(u) {
            continue;
        }
        let objective = problem.objective(u);
        if !objective.is_finite() {
            continue;
        }
        let improves = match &best {
            None => true,
            Some((incumbent, _, _)) => {
                objective < incumbent - IMPROVEMENT_TOL * (1.0 + incumbent.abs())
            }
        };
        if improves {
            best = Some((objective, u, candidate.clone()));
        }
    }

    match best {
        Some((objective_value, u, active)) => QpSolution {
            u,
            status: SolveStatus::Optimal,
            active_set: active
                .iter()
                .map(|&i| problem.inequalities[i].0)
                .collect(),
            objective_value,
        },
        None => QpSolution {
            u: [0.0, 0.0],
            status: SolveStatus::Infeasible,
            active_set: vec![],
            objective_value: f64::INFINITY,
        },
    }
}

//! Parameter-grid sweeps: one closed-loop run per grid point, summarized
//! one row each, in deterministic lexicographic parameter order.

use cbf_core::hocbf::{lambda_feasibility, ConditionStatus, LambdaVector};
use cbf_core::plant::cbf_derivatives;
use cbf_core::sim::{run_simulation, Approach, SimConfig, SimLog};
use rayon::prelude::*;

use crate::config::{SweepApproach, SweepSpec};
use crate::error::{map_core_error, CliError};

/// Summary of one grid point's run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda1: f64,
    /// Second chain gain; absent for truncated-Taylor sweeps.
    pub lambda2: Option<f64>,
    pub mean_x_speed: Option<f64>,
    pub min_h: Option<f64>,
    pub bypassed: Option<bool>,
    pub infeasible_steps: usize,
}

impl SweepRow {
    fn from_log(lambda1: f64, lambda2: Option<f64>, log: &SimLog) -> Self {
        SweepRow {
            lambda1,
            lambda2,
            mean_x_speed: log.summary.mean_x_speed,
            min_h: log.summary.min_h,
            bypassed: log.summary.bypassed,
            infeasible_steps: log.summary.infeasible_steps,
        }
    }
}

/// All grid points in output order: `lambda1` outer, `lambda2` inner.
pub fn sweep_points(spec: &SweepSpec) -> Vec<(f64, Option<f64>)> {
    match &spec.approach {
        SweepApproach::Hocbf { lambda1, lambda2 } => {
            let inner = lambda2.values();
            lambda1
                .values()
                .into_iter()
                .flat_map(|l1| inner.iter().map(move |&l2| (l1, Some(l2))))
                .collect()
        }
        SweepApproach::Ttcbf { lambda1, .. } => {
            lambda1.values().into_iter().map(|l1| (l1, None)).collect()
        }
    }
}

/// The run configuration for one grid point.
pub fn config_at(spec: &SweepSpec, lambda1: f64, lambda2: Option<f64>) -> Result<SimConfig, CliError> {
    let approach = match (&spec.approach, lambda2) {
        (SweepApproach::Hocbf { .. }, Some(l2)) => Approach::Hocbf {
            lambdas: LambdaVector::new(vec![lambda1, l2]).map_err(map_core_error)?,
        },
        (SweepApproach::Ttcbf { gamma, .. }, None) => Approach::Ttcbf {
            lambda1,
            gamma: *gamma,
        },
        _ => {
            return Err(CliError::Config(
                "grid point shape does not match the sweep approach".into(),
            ))
        }
    };
    Ok(spec.base.with_approach(approach))
}

/// Runs every grid point (in parallel) and returns rows in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, CliError> {
    let points = sweep_points(spec);
    // Fail fast on a broken base configuration before fanning out.
    if let Some(&(l1, l2)) = points.first() {
        config_at(spec, l1, l2)?
            .validate()
            .map_err(map_core_error)?;
    }
    points
        .par_iter()
        .map(|&(l1, l2)| {
            let config = config_at(spec, l1, l2)?;
            let log = run_simulation(&config).map_err(map_core_error)?;
            Ok(SweepRow::from_log(l1, l2, &log))
        })
        .collect()
}

/// For chain sweeps: a warning (not an error) when the grid's smallest
/// `lambda1` fails the sufficient feasibility condition at the initial
/// state, since such gains can start the run with the chain already
/// violated.
pub fn feasibility_warning(spec: &SweepSpec) -> Option<String> {
    let SweepApproach::Hocbf { lambda1, lambda2 } = &spec.approach else {
        return None;
    };
    let stack = cbf_derivatives(&spec.base.initial_state, &spec.base.obstacle);
    let lambdas = LambdaVector::new(vec![lambda1.min, lambda2.min]).ok()?;
    let report = lambda_feasibility(&lambdas, &[stack.h, stack.h_dot]).ok()?;
    let violated = report
        .conditions
        .iter()
        .find(|c| c.status == ConditionStatus::Violated)?;
    Some(format!(
        "warning: lambda1_min = {} is below the sufficient feasibility bound {} \
         at the initial state; the smallest gains may start with the chain violated",
        lambda1.min,
        violated.bound.unwrap_or(f64::NAN)
    ))
}

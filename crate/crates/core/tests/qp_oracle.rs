//! Cross-checks the active-set solver against an independent oracle on
//! randomized instances: a closed-form candidate enumeration for the
//! optimum (geometric projections, no KKT systems), an exact corner check
//! for feasibility, and a multiplier reconstruction at the reported
//! solution.

use cbf_core::plant::LinearInputConstraint;
use cbf_core::qp::{solve_qp, ConstraintLabel, QpProblem, SolveStatus};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Instance {
    problem: QpProblem,
    lo: [f64; 2],
    hi: [f64; 2],
}

fn random_instance(rng: &mut StdRng) -> Instance {
    let lo = [rng.gen_range(-12.0..-2.0), rng.gen_range(-12.0..-2.0)];
    let hi = [rng.gen_range(2.0..12.0), rng.gen_range(2.0..12.0)];
    let normal = loop {
        let n: [f64; 2] = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        if (n[0] * n[0] + n[1] * n[1]).sqrt() > 0.2 {
            break n;
        }
    };
    // A quarter of the instances push the half-plane far beyond the box so
    // the infeasible branch is exercised as well.
    let offset = if rng.gen_range(0..4) == 0 {
        rng.gen_range(-150.0..-40.0)
    } else {
        rng.gen_range(-6.0..6.0)
    };
    let inequalities = vec![
        (
            ConstraintLabel::Cbf,
            LinearInputConstraint { normal, offset },
        ),
        (
            ConstraintLabel::UxMin,
            LinearInputConstraint {
                normal: [1.0, 0.0],
                offset: -lo[0],
            },
        ),
        (
            ConstraintLabel::UxMax,
            LinearInputConstraint {
                normal: [-1.0, 0.0],
                offset: hi[0],
            },
        ),
        (
            ConstraintLabel::UyMin,
            LinearInputConstraint {
                normal: [0.0, 1.0],
                offset: -lo[1],
            },
        ),
        (
            ConstraintLabel::UyMax,
            LinearInputConstraint {
                normal: [0.0, -1.0],
                offset: hi[1],
            },
        ),
    ];
    Instance {
        problem: QpProblem {
            quadratic_diag: [rng.gen_range(0.2..5.0), rng.gen_range(0.2..5.0)],
            linear: [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)],
            constant: rng.gen_range(-5.0..5.0),
            inequalities,
        },
        lo,
        hi,
    }
}

fn feasible_at(problem: &QpProblem, u: [f64; 2], tol: f64) -> bool {
    problem.inequalities.iter().all(|(_, c)| c.slack(u) >= -tol)
}

/// The box-constrained feasibility question is exact: the half-plane has a
/// feasible point in the box iff its slack at the maximizing corner is
/// nonnegative.
fn exactly_feasible(instance: &Instance) -> bool {
    let (_, cbf) = &instance.problem.inequalities[0];
    let mut best = cbf.offset;
    for axis in 0..2 {
        best += if cbf.normal[axis] >= 0.0 {
            cbf.normal[axis] * instance.hi[axis]
        } else {
            cbf.normal[axis] * instance.lo[axis]
        };
    }
    best >= 0.0
}

/// Exact minimum by exhaustive candidate enumeration. The minimizer of a
/// strictly convex QP over a polygon is either the unconstrained
/// minimizer, the minimizer restricted to one constraint's line, or a
/// vertex of two constraints; all of those have closed forms here, so the
/// best feasible candidate is the global minimum to machine precision.
fn reference_minimum(instance: &Instance) -> Option<f64> {
    let problem = &instance.problem;
    let q = problem.quadratic_diag;
    let l = problem.linear;
    let (lo, hi) = (instance.lo, instance.hi);
    let cbf = instance.problem.inequalities[0].1;
    let n = cbf.normal;

    let free = [-l[0] / q[0], -l[1] / q[1]];
    let mut candidates = vec![
        free,
        // One box edge active, the other coordinate unconstrained.
        [lo[0], free[1]],
        [hi[0], free[1]],
        [free[0], lo[1]],
        [free[0], hi[1]],
        // Box corners.
        [lo[0], lo[1]],
        [lo[0], hi[1]],
        [hi[0], lo[1]],
        [hi[0], hi[1]],
    ];
    // Half-plane boundary active: free + μ·Q⁻¹n with μ solving n·u = -offset.
    let denom = n[0] * n[0] / q[0] + n[1] * n[1] / q[1];
    if denom > 0.0 {
        let mu = (-cbf.offset - (n[0] * free[0] + n[1] * free[1])) / denom;
        candidates.push([free[0] + mu * n[0] / q[0], free[1] + mu * n[1] / q[1]]);
    }
    // Half-plane boundary crossing each box edge. Degenerate (parallel)
    // combinations divide by zero and are dropped by the finiteness filter.
    for &ux in &[lo[0], hi[0]] {
        candidates.push([ux, (-cbf.offset - n[0] * ux) / n[1]]);
    }
    for &uy in &[lo[1], hi[1]] {
        candidates.push([(-cbf.offset - n[1] * uy) / n[0], uy]);
    }

    candidates
        .into_iter()
        .filter(|u| u[0].is_finite() && u[1].is_finite())
        .filter(|&u| feasible_at(problem, u, 1e-9))
        .map(|u| problem.objective(u))
        .min_by(f64::total_cmp)
}

/// Recomputes multipliers for the reported active set and returns the
/// stationarity residual, or `None` when the reconstruction itself is
/// singular.
fn kkt_residual(problem: &QpProblem, u: [f64; 2], active: &[ConstraintLabel]) -> Option<f64> {
    let gradient = [
        problem.quadratic_diag[0] * u[0] + problem.linear[0],
        problem.quadratic_diag[1] * u[1] + problem.linear[1],
    ];
    let rows: Vec<[f64; 2]> = active
        .iter()
        .map(|label| {
            problem
                .inequalities
                .iter()
                .find(|(l, _)| l == label)
                .map(|(_, c)| c.normal)
                .expect("active label exists")
        })
        .collect();
    let multipliers: Vec<f64> = match rows.len() {
        0 => vec![],
        1 => {
            let n = rows[0];
            let denom = n[0] * n[0] + n[1] * n[1];
            if denom < 1e-14 {
                return None;
            }
            vec![(n[0] * gradient[0] + n[1] * gradient[1]) / denom]
        }
        2 => {
            // Solve [n1 n2]ᵀ-combination matching the gradient exactly.
            let det = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0];
            if det.abs() < 1e-12 {
                return None;
            }
            let mu1 = (gradient[0] * rows[1][1] - gradient[1] * rows[1][0]) / det;
            let mu2 = (rows[0][0] * gradient[1] - rows[0][1] * gradient[0]) / det;
            vec![mu1, mu2]
        }
        _ => return None,
    };
    if multipliers.iter().any(|&m| m < -1e-8) {
        return None;
    }
    let reconstructed = rows.iter().zip(&multipliers).fold([0.0, 0.0], |acc, (n, m)| {
        [acc[0] + n[0] * m, acc[1] + n[1] * m]
    });
    Some(
        (gradient[0] - reconstructed[0])
            .abs()
            .max((gradient[1] - reconstructed[1]).abs()),
    )
}

#[test]
fn solver_matches_an_exact_reference_on_random_instances() {
    let mut rng = StdRng::seed_from_u64(0x5eed_cafe);
    let mut optimal = 0;
    let mut infeasible = 0;
    for case in 0..100 {
        let instance = random_instance(&mut rng);
        let solution = solve_qp(&instance.problem);
        let feasible = exactly_feasible(&instance);

        match solution.status {
            SolveStatus::Optimal => {
                assert!(
                    feasible,
                    "case {case}: solver claims optimal but the feasible set is empty"
                );
                optimal += 1;
                assert!(
                    feasible_at(&instance.problem, solution.u, 1e-7),
                    "case {case}: returned point is infeasible"
                );
                let residual = kkt_residual(&instance.problem, solution.u, &solution.active_set)
                    .expect("case {case}: KKT reconstruction failed");
                assert!(
                    residual <= 1e-8 * (1.0 + solution.objective_value.abs()),
                    "case {case}: stationarity residual {residual}"
                );
                let reference =
                    reference_minimum(&instance).expect("oracle finds a feasible point");
                assert!(
                    solution.objective_value <= reference + 1e-6,
                    "case {case}: solver {} worse than oracle {reference}",
                    solution.objective_value
                );
                // The oracle can't beat the solver either.
                assert!(
                    reference >= solution.objective_value - 1e-6,
                    "case {case}: oracle {reference} beats solver {}",
                    solution.objective_value
                );
            }
            SolveStatus::Infeasible => {
                assert!(
                    !feasible,
                    "case {case}: solver claims infeasible but a feasible corner exists"
                );
                infeasible += 1;
                assert_eq!(solution.u, [0.0, 0.0]);
                assert!(solution.objective_value.is_infinite());
            }
        }
    }
    // The parameter ranges are chosen so both outcomes actually occur.
    assert!(optimal >= 20, "only {optimal} optimal instances");
    assert!(infeasible >= 5, "only {infeasible} infeasible instances");
}

#[test]
fn solver_handles_degenerate_normals_against_oracle() {
    // Constraint normals aligned with the axes (duplicating box rows) and
    // near-zero components stress the candidate enumeration.
    let mut rng = StdRng::seed_from_u64(0xdead_beef);
    for case in 0..40 {
        let mut instance = random_instance(&mut rng);
        let axis_normal = match case % 4 {
            0 => [1.0, 0.0],
            1 => [-1.0, 0.0],
            2 => [0.0, 1.0],
            _ => [0.0, -1.0],
        };
        instance.problem.inequalities[0].1.normal = axis_normal;
        let solution = solve_qp(&instance.problem);
        match solution.status {
            SolveStatus::Optimal => {
                assert!(feasible_at(&instance.problem, solution.u, 1e-7), "case {case}");
                let reference =
                    reference_minimum(&instance).expect("oracle finds a feasible point");
                assert!(
                    (solution.objective_value - reference).abs() <= 1e-6,
                    "case {case}: solver {} vs oracle {reference}",
                    solution.objective_value
                );
            }
            SolveStatus::Infeasible => {
                assert!(!exactly_feasible(&instance), "case {case}");
            }
        }
    }
}

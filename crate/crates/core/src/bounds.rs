//! Closed-form decay lower bounds implied by the flattened chain condition.
//!
//! When the condition `Σ_j e_{r-j} h^(j) ≥ 0` holds with equality, `h`
//! solves a linear ODE whose characteristic roots are `-λ_1, …, -λ_r`, so
//! the tight trajectory — and hence a lower bound for any trajectory kept
//! on the safe side — is the exponential sum
//!
//! ```text
//! h_lb(t) = Σ_i c_i · e^{-λ_i (t - t0)}
//! ```
//!
//! with `c` chosen so that `h_lb` matches `h` and its first `r-1`
//! derivatives at `t0`. Matching is a Vandermonde-style interpolation in
//! the roots: `M c = h_init` with `M[p][q] = (-λ_{q+1})^p`. In discrete
//! time, the analogous bound under `h_{k+1} ≥ (1-λ) h_k` is geometric
//! decay `(1-λ)^k h_{k0}`.

use crate::error::{Error, Result};
use crate::hocbf::{flatten_hocbf, LambdaVector};
use crate::linalg::solve_dense;

/// Relative separation below which two decay rates are treated as equal.
const DEGENERACY_LIMIT: f64 = 1e-9;

/// Residual limit factor for the interpolation solve: the solved
/// coefficients must reproduce the initial conditions to within
/// `1e-8 · (1 + ‖h_init‖∞)`.
const RESIDUAL_FACTOR: f64 = 1e-8;

/// Initial derivatives `[h(t0), h^(1)(t0), …]` anchored at time `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialConditionVector {
    values: Vec<f64>,
    t0: f64,
}

impl InitialConditionVector {
    /// Validates that at least one value is present and that every entry
    /// (and the anchor time) is finite.
    pub fn new(values: Vec<f64>, t0: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DegreeMismatch {
                expected: 1,
                found: 0,
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "initial condition entry {bad} is not finite"
            )));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "anchor time t0 = {t0} is not finite"
            )));
        }
        Ok(Self { values, t0 })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }
}

/// An exponential-sum lower bound `Σ_i c_i e^{-λ_i (t - t0)}`, valid for
/// `t ≥ t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialSumBound {
    /// One coefficient per rate, in rate order.
    pub coefficients: Vec<f64>,
    pub rates: LambdaVector,
    pub t0: f64,
}

/// The interpolation matrix `M[p][q] = (-λ_{q+1})^p`, row `p` matching the
/// `p`-th derivative at the anchor.
pub fn vandermonde_matrix(lambdas: &LambdaVector) -> Vec<Vec<f64>> {
    let r = lambdas.relative_degree();
    (0..r)
        .map(|p| {
            lambdas
                .as_slice()
                .iter()
                .map(|&lam| (-lam).powi(p as i32))
                .collect()
        })
        .collect()
}

/// Solves `M c = h_init` for the bound coefficients.
///
/// Rejects rate vectors with (numerically) repeated entries, since the
/// interpolation matrix is then singular, and checks the solve residual
/// against `1e-8 · (1 + ‖h_init‖∞)`.
pub fn solve_bound_coefficients(
    lambdas: &LambdaVector,
    init: &InitialConditionVector,
) -> Result<ExponentialSumBound> {
    let r = lambdas.relative_degree();
    if init.values().len() != r {
        return Err(Error::DegreeMismatch {
            expected: r,
            found: init.values().len(),
        });
    }

    let rates = lambdas.as_slice();
    let max_rate = rates.iter().fold(0.0_f64, |acc, &v| acc.max(v));
    for i in 0..r {
        for j in i + 1..r {
            let separation = (rates[i] - rates[j]).abs() / max_rate;
            if separation <= DEGENERACY_LIMIT {
                return Err(Error::DegenerateRates {
                    separation,
                    limit: DEGENERACY_LIMIT,
                });
            }
        }
    }

    let matrix = vandermonde_matrix(lambdas);
    let coefficients = solve_dense(matrix.clone(), init.values().to_vec())
        .ok_or(Error::SingularSystem)?;

    let scale = init
        .values()
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()));
    let limit = RESIDUAL_FACTOR * (1.0 + scale);
    let mut residual = 0.0_f64;
    for (row, &rhs) in matrix.iter().zip(init.values()) {
        let reproduced: f64 = row
            .iter()
            .zip(&coefficients)
            .map(|(m, c)| m * c)
            .sum();
        residual = residual.max((reproduced - rhs).abs());
    }
    if residual > limit {
        return Err(Error::ResidualExceeded { residual, limit });
    }

    Ok(ExponentialSumBound {
        coefficients,
        rates: lambdas.clone(),
        t0: init.t0(),
    })
}

/// Evaluates the bound at time `t ≥ t0`.
pub fn eval_bound_ct(bound: &ExponentialSumBound, t: f64) -> Result<f64> {
    eval_bound_deriv_ct(bound, t, 0)
}

/// Evaluates the `j`-th time derivative of the bound at `t ≥ t0`:
/// `Σ_i c_i (-λ_i)^j e^{-λ_i (t - t0)}`.
pub fn eval_bound_deriv_ct(bound: &ExponentialSumBound, t: f64, j: u32) -> Result<f64> {
    if t < bound.t0 {
        return Err(Error::TimeBeforeAnchor { t, t0: bound.t0 });
    }
    let dt = t - bound.t0;
    Ok(bound
        .coefficients
        .iter()
        .zip(bound.rates.as_slice())
        .map(|(&c, &lam)| c * (-lam).powi(j as i32) * (-lam * dt).exp())
        .sum())
}

/// Plugs the bound into the flattened chain condition
/// `Σ_j e_{r-j} h^(j)` at time `t`. By construction the bound solves the
/// tight ODE, so the result should vanish to numerical precision — a
/// strong self-check on both the flattening and the interpolation.
pub fn ode_residual(bound: &ExponentialSumBound, t: f64) -> Result<f64> {
    let flat = flatten_hocbf(&bound.rates);
    let mut acc = 0.0;
    for (j, &coeff) in flat.coefficients.iter().enumerate() {
        acc += coeff * eval_bound_deriv_ct(bound, t, j as u32)?;
    }
    Ok(acc)
}

/// Discrete-time geometric lower bound `(1-λ)^steps · h_{k0}` for
/// `λ ∈ (0, 1]`.
pub fn eval_bound_dt(lambda: f64, h_k0: f64, steps: u32) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::RateOutsideUnitInterval { value: lambda });
    }
    Ok((1.0 - lambda).powi(steps as i32) * h_k0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lambdas(vals: &[f64]) -> LambdaVector {
        LambdaVector::new(vals.to_vec()).unwrap()
    }

    #[test]
    fn interpolation_matrix_two_rates() {
        let m = vandermonde_matrix(&lambdas(&[10.0, 0.5]));
        assert_eq!(m, vec![vec![1.0, 1.0], vec![-10.0, -0.5]]);
    }

    #[test]
    fn interpolation_matrix_three_rates() {
        let m = vandermonde_matrix(&lambdas(&[1.0, 2.0, 3.0]));
        assert_eq!(
            m,
            vec![
                vec![1.0, 1.0, 1.0],
                vec![-1.0, -2.0, -3.0],
                vec![1.0, 4.0, 9.0],
            ]
        );
    }

    #[test]
    fn coefficients_for_fast_approach() {
        // h(0) = 95.8 with ḣ(0) = -200 under rates (10, 0.5): the fast mode
        // absorbs most of the initial shrink rate.
        let init = InitialConditionVector::new(vec![95.8, -200.0], 0.0).unwrap();
        let bound = solve_bound_coefficients(&lambdas(&[10.0, 0.5]), &init).unwrap();
        assert!(
            (bound.coefficients[0] - 16.0).abs() < 0.1,
            "c1 = {}",
            bound.coefficients[0]
        );
        assert!(
            (bound.coefficients[1] - 79.8).abs() < 0.1,
            "c2 = {}",
            bound.coefficients[1]
        );
    }

    #[test]
    fn coefficients_single_rate_equal_initial_value() {
        let init = InitialConditionVector::new(vec![7.25], 1.0).unwrap();
        let bound = solve_bound_coefficients(&lambdas(&[3.0]), &init).unwrap();
        assert!((bound.coefficients[0] - 7.25).abs() < 1e-12);
        assert_eq!(bound.t0, 1.0);
    }

    #[test]
    fn coefficients_exact_small_case() {
        // c1 + c2 = 3, -c1 - 2 c2 = -4  =>  c = (2, 1).
        let init = InitialConditionVector::new(vec![3.0, -4.0], 0.0).unwrap();
        let bound = solve_bound_coefficients(&lambdas(&[1.0, 2.0]), &init).unwrap();
        assert!((bound.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((bound.coefficients[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_rates_are_rejected() {
        let init = InitialConditionVector::new(vec![1.0, 0.0], 0.0).unwrap();
        match solve_bound_coefficients(&lambdas(&[5.0, 5.0]), &init) {
            Err(Error::DegenerateRates { .. }) => {}
            other => panic!("expected degenerate-rates error, got {other:?}"),
        }
        // Nearly repeated rates hit the same guard before the linear solve
        // can produce garbage.
        match solve_bound_coefficients(&lambdas(&[5.0, 5.0 + 1e-12]), &init) {
            Err(Error::DegenerateRates { .. }) => {}
            other => panic!("expected degenerate-rates error, got {other:?}"),
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let init = InitialConditionVector::new(vec![1.0], 0.0).unwrap();
        assert_eq!(
            solve_bound_coefficients(&lambdas(&[1.0, 2.0]), &init),
            Err(Error::DegreeMismatch {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn evaluation_of_fixed_coefficients() {
        let bound = ExponentialSumBound {
            coefficients: vec![16.0, 79.8],
            rates: lambdas(&[10.0, 0.5]),
            t0: 0.0,
        };
        let want = 16.0 * (-20.0_f64).exp() + 79.8 * (-1.0_f64).exp();
        let got = eval_bound_ct(&bound, 2.0).unwrap();
        assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        assert!((got - 29.36).abs() < 0.01, "got {got}");
        // At the anchor the bound reproduces the sum of coefficients.
        assert!((eval_bound_ct(&bound, 0.0).unwrap() - 95.8).abs() < 1e-12);
    }

    #[test]
    fn evaluation_before_anchor_is_rejected() {
        let bound = ExponentialSumBound {
            coefficients: vec![1.0],
            rates: lambdas(&[1.0]),
            t0: 2.0,
        };
        assert_eq!(
            eval_bound_ct(&bound, 1.9),
            Err(Error::TimeBeforeAnchor { t: 1.9, t0: 2.0 })
        );
        assert_eq!(
            eval_bound_deriv_ct(&bound, 0.0, 1),
            Err(Error::TimeBeforeAnchor { t: 0.0, t0: 2.0 })
        );
    }

    #[test]
    fn second_derivative_at_anchor() {
        let bound = ExponentialSumBound {
            coefficients: vec![2.0, 1.0],
            rates: lambdas(&[1.0, 2.0]),
            t0: 0.0,
        };
        // 2·(-1)² + 1·(-2)² = 6 at t = t0.
        let got = eval_bound_deriv_ct(&bound, 0.0, 2).unwrap();
        assert!((got - 6.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn solved_bound_satisfies_its_own_ode() {
        let init = InitialConditionVector::new(vec![95.8, -200.0], 0.0).unwrap();
        let bound = solve_bound_coefficients(&lambdas(&[10.0, 0.5]), &init).unwrap();
        for t in [0.0, 0.1, 0.5, 1.0, 2.0] {
            let res = ode_residual(&bound, t).unwrap();
            assert!(res.abs() < 1e-9, "residual {res} at t = {t}");
        }
    }

    #[test]
    fn discrete_bound_matches_geometric_decay() {
        assert_eq!(eval_bound_dt(0.5, 8.0, 3).unwrap(), 1.0);
        assert_eq!(eval_bound_dt(1.0, 5.0, 1).unwrap(), 0.0);
        assert_eq!(eval_bound_dt(0.25, 4.0, 0).unwrap(), 4.0);
    }

    #[test]
    fn discrete_bound_rejects_rates_outside_unit_interval() {
        for bad in [0.0, -0.5, 1.5] {
            assert_eq!(
                eval_bound_dt(bad, 1.0, 1),
                Err(Error::RateOutsideUnitInterval { value: bad })
            );
        }
    }

    #[test]
    fn initial_condition_vector_validates_inputs() {
        assert!(InitialConditionVector::new(vec![], 0.0).is_err());
        assert!(InitialConditionVector::new(vec![f64::NAN], 0.0).is_err());
        assert!(InitialConditionVector::new(vec![1.0], f64::INFINITY).is_err());
    }
}

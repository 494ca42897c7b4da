//! Flattening of the high-order barrier chain with linear gains.
//!
//! With linear class-K functions `α_i(z) = λ_i z`, the auxiliary chain
//!
//! ```text
//! Ψ_0 = h,        Ψ_i = Ψ̇_{i-1} + λ_i Ψ_{i-1}
//! ```
//!
//! expands into a fixed linear combination of `h` and its time derivatives
//! whose coefficients are elementary symmetric polynomials of the gains:
//!
//! ```text
//! Ψ_i = Σ_{j=0..i} e_{i-j}(λ_1, …, λ_i) · h^(j)
//! ```
//!
//! The enforceable condition at relative degree `r` is `Ψ_r ≥ 0`. This
//! module computes those coefficients two independent ways — the closed
//! form above and the literal chain recursion — and checks a sufficient
//! feasibility condition of the gains against the initial derivatives.

use crate::error::{Error, Result};

/// Strictly positive chain gains `λ_1, …, λ_r`; the length is the relative
/// degree `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaVector {
    values: Vec<f64>,
}

impl LambdaVector {
    /// Validates that at least one gain is present and that every gain is
    /// strictly positive and finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyRates);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::NonPositiveRate { index, value });
            }
        }
        Ok(Self { values })
    }

    /// Relative degree `r`, i.e. the number of gains.
    pub fn relative_degree(&self) -> usize {
        self.values.len()
    }

    /// The gains in chain order.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// All elementary symmetric polynomials `e_0..e_n` of `vals` at once, via
/// the running product `∏ (1 + λ_i x)`: absorbing one factor updates
/// `e_k ← e_k + λ e_{k-1}` from the top down.
pub(crate) fn esp_all(vals: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; vals.len() + 1];
    e[0] = 1.0;
    for (i, &lam) in vals.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += lam * e[k - 1];
        }
    }
    e
}

/// Elementary symmetric polynomial `e_k` of the first `i = lambdas.len()`
/// gains. By convention `e_0 = 1`, and `e_k = 0` for `k > i`.
pub fn elem_sym_poly(lambdas: &[f64], k: usize) -> f64 {
    if k > lambdas.len() {
        return 0.0;
    }
    esp_all(lambdas)[k]
}

/// The chain condition `Ψ_r ≥ 0` written out on `h` and its derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct FlattenedCondition {
    /// `coefficients[j]` multiplies `h^(j)`; the top entry (for `h^(r)`) is
    /// always exactly 1 and every entry is strictly positive.
    pub coefficients: Vec<f64>,
    /// Relative degree `r`; `coefficients` has `r + 1` entries.
    pub relative_degree: usize,
}

/// Expands the full chain `Ψ_r` into derivative coefficients:
/// `coefficients[j] = e_{r-j}(λ_1, …, λ_r)`.
pub fn flatten_hocbf(lambdas: &LambdaVector) -> FlattenedCondition {
    let r = lambdas.relative_degree();
    let e = esp_all(lambdas.as_slice());
    let coefficients = (0..=r).map(|j| e[r - j]).collect();
    FlattenedCondition {
        coefficients,
        relative_degree: r,
    }
}

/// Derivative coefficients of the partial chain `Ψ_i` for `1 ≤ i ≤ r`,
/// computed by the literal recursion `Ψ_i = Ψ̇_{i-1} + λ_i Ψ_{i-1}` rather
/// than the closed form, so the two can cross-check each other.
pub fn psi_chain_coefficients(lambdas: &LambdaVector, i: usize) -> Result<Vec<f64>> {
    let r = lambdas.relative_degree();
    if i < 1 || i > r {
        return Err(Error::ChainDepthOutOfRange { depth: i, max: r });
    }
    // Ψ_0 = h.
    let mut coeffs = vec![1.0];
    for &lam in &lambdas.as_slice()[..i] {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (j, &c) in coeffs.iter().enumerate() {
            // Differentiating shifts a coefficient one derivative order up.
            next[j + 1] += c;
            next[j] += lam * c;
        }
        coeffs = next;
    }
    Ok(coeffs)
}

/// Outcome of one sufficient gain condition `λ_i ≥ -h^(i)(t0) / h^(i-1)(t0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionStatus {
    Satisfied,
    Violated,
    /// The denominator `h^(i-1)(t0)` is zero or negative, so the sufficient
    /// condition says nothing about this gain.
    Inapplicable,
}

/// One per-gain feasibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCondition {
    /// 1-based index `i` of the gain `λ_i` being checked.
    pub index: usize,
    /// Lower bound `-h^(i)(t0) / h^(i-1)(t0)`, absent when the condition is
    /// inapplicable.
    pub bound: Option<f64>,
    pub status: ConditionStatus,
}

/// Result of checking all sufficient gain conditions at the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// Conditions for `i = 1, …, r-1` in order (empty when `r = 1`).
    pub conditions: Vec<RateCondition>,
    /// Whether the final gain is strictly positive (always required).
    pub lambda_r_positive: bool,
    /// Conjunction of every applicable condition and the final-gain check;
    /// inapplicable conditions are reported but do not fail the verdict.
    pub feasible: bool,
}

/// Checks the sufficient condition that each partial chain value starts
/// nonnegative: `λ_i ≥ -h^(i)(t0) / h^(i-1)(t0)` for `i = 1, …, r-1`, plus
/// `λ_r > 0`. `h_init` holds `[h(t0), h^(1)(t0), …, h^(r-1)(t0)]` and must
/// have length `r`.
pub fn lambda_feasibility(lambdas: &LambdaVector, h_init: &[f64]) -> Result<FeasibilityReport> {
    let r = lambdas.relative_degree();
    if h_init.len() != r {
        return Err(Error::DegreeMismatch {
            expected: r,
            found: h_init.len(),
        });
    }
    let mut conditions = Vec::with_capacity(r.saturating_sub(1));
    for i in 1..r {
        let denominator = h_init[i - 1];
        let condition = if denominator <= 0.0 {
            RateCondition {
                index: i,
                bound: None,
                status: ConditionStatus::Inapplicable,
            }
        } else {
            let bound = -h_init[i] / denominator;
            let status = if lambdas.as_slice()[i - 1] >= bound {
                ConditionStatus::Satisfied
            } else {
                ConditionStatus::Violated
            };
            RateCondition {
                index: i,
                bound: Some(bound),
                status,
            }
        };
        conditions.push(condition);
    }
    // LambdaVector already guarantees positivity; recorded explicitly so the
    // report stands on its own.
    let lambda_r_positive = *lambdas.as_slice().last().expect("r >= 1") > 0.0;
    let feasible = lambda_r_positive
        && conditions
            .iter()
            .all(|c| c.status != ConditionStatus::Violated);
    Ok(FeasibilityReport {
        conditions,
        lambda_r_positive,
        feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_nonpositive_gains() {
        assert_eq!(LambdaVector::new(vec![]), Err(Error::EmptyRates));
        assert_eq!(
            LambdaVector::new(vec![1.0, 0.0]),
            Err(Error::NonPositiveRate {
                index: 1,
                value: 0.0
            })
        );
        assert_eq!(
            LambdaVector::new(vec![-2.0]),
            Err(Error::NonPositiveRate {
                index: 0,
                value: -2.0
            })
        );
        assert!(LambdaVector::new(vec![f64::NAN]).is_err());
        assert!(LambdaVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn elementary_symmetric_polynomials_of_one_two_three() {
        let lams = [1.0, 2.0, 3.0];
        assert_eq!(elem_sym_poly(&lams, 0), 1.0);
        assert_eq!(elem_sym_poly(&lams, 1), 6.0);
        assert_eq!(elem_sym_poly(&lams, 2), 11.0);
        assert_eq!(elem_sym_poly(&lams, 3), 6.0);
        assert_eq!(elem_sym_poly(&lams, 4), 0.0);
    }

    #[test]
    fn flatten_single_gain() {
        let lambdas = LambdaVector::new(vec![2.0]).unwrap();
        let flat = flatten_hocbf(&lambdas);
        assert_eq!(flat.coefficients, vec![2.0, 1.0]);
        assert_eq!(flat.relative_degree, 1);
    }

    #[test]
    fn flatten_two_gains() {
        let lambdas = LambdaVector::new(vec![10.0, 0.5]).unwrap();
        let flat = flatten_hocbf(&lambdas);
        assert_eq!(flat.coefficients, vec![5.0, 10.5, 1.0]);
        assert_eq!(flat.relative_degree, 2);
    }

    #[test]
    fn flatten_three_gains() {
        let lambdas = LambdaVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let flat = flatten_hocbf(&lambdas);
        assert_eq!(flat.coefficients, vec![6.0, 11.0, 6.0, 1.0]);
    }

    #[test]
    fn flatten_top_coefficient_is_one_and_all_positive() {
        let lambdas = LambdaVector::new(vec![0.3, 7.0, 2.5, 1.1]).unwrap();
        let flat = flatten_hocbf(&lambdas);
        assert_eq!(*flat.coefficients.last().unwrap(), 1.0);
        assert!(flat.coefficients.iter().all(|&c| c > 0.0));
    }

    #[test]
    fn chain_recursion_matches_hand_expansion() {
        let lambdas = LambdaVector::new(vec![3.0]).unwrap();
        assert_eq!(psi_chain_coefficients(&lambdas, 1).unwrap(), vec![3.0, 1.0]);

        let lambdas = LambdaVector::new(vec![10.0, 0.5]).unwrap();
        assert_eq!(
            psi_chain_coefficients(&lambdas, 1).unwrap(),
            vec![10.0, 1.0]
        );
        assert_eq!(
            psi_chain_coefficients(&lambdas, 2).unwrap(),
            vec![5.0, 10.5, 1.0]
        );
    }

    #[test]
    fn chain_recursion_agrees_with_closed_form_at_full_depth() {
        let lambdas = LambdaVector::new(vec![0.7, 4.0, 1.3, 9.2, 0.05]).unwrap();
        let recursive = psi_chain_coefficients(&lambdas, 5).unwrap();
        let closed = flatten_hocbf(&lambdas).coefficients;
        for (a, b) in recursive.iter().zip(&closed) {
            assert!(
                (a - b).abs() <= 1e-12 * b.abs().max(1.0),
                "chain {a} vs closed form {b}"
            );
        }
    }

    #[test]
    fn chain_depth_out_of_range_is_rejected() {
        let lambdas = LambdaVector::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(
            psi_chain_coefficients(&lambdas, 0),
            Err(Error::ChainDepthOutOfRange { depth: 0, max: 2 })
        );
        assert_eq!(
            psi_chain_coefficients(&lambdas, 3),
            Err(Error::ChainDepthOutOfRange { depth: 3, max: 2 })
        );
    }

    #[test]
    fn feasibility_bound_for_fast_approach() {
        // h starts at 95.8 shrinking at 200 per second: the first gain must
        // be at least 200/95.8 ≈ 2.0877 for the chain to start nonnegative.
        let h_init = [95.8, -200.0];

        let ok = LambdaVector::new(vec![2.1, 10.0]).unwrap();
        let report = lambda_feasibility(&ok, &h_init).unwrap();
        assert_eq!(report.conditions.len(), 1);
        let c = &report.conditions[0];
        assert_eq!(c.index, 1);
        let bound = c.bound.expect("applicable");
        assert!((bound - 2.0877).abs() < 1e-3, "bound = {bound}");
        assert_eq!(c.status, ConditionStatus::Satisfied);
        assert!(report.lambda_r_positive);
        assert!(report.feasible);

        let slow = LambdaVector::new(vec![1.0, 10.0]).unwrap();
        let report = lambda_feasibility(&slow, &h_init).unwrap();
        assert_eq!(report.conditions[0].status, ConditionStatus::Violated);
        assert!(!report.feasible);
    }

    #[test]
    fn feasibility_with_single_gain_has_no_ratio_conditions() {
        let lambdas = LambdaVector::new(vec![0.5]).unwrap();
        let report = lambda_feasibility(&lambdas, &[3.0]).unwrap();
        assert!(report.conditions.is_empty());
        assert!(report.feasible);
    }

    #[test]
    fn feasibility_flags_nonpositive_denominator_as_inapplicable() {
        let lambdas = LambdaVector::new(vec![1.0, 1.0]).unwrap();
        for h0 in [0.0, -4.0] {
            let report = lambda_feasibility(&lambdas, &[h0, 5.0]).unwrap();
            let c = &report.conditions[0];
            assert_eq!(c.status, ConditionStatus::Inapplicable);
            assert_eq!(c.bound, None);
            // Inapplicable conditions do not fail the verdict.
            assert!(report.feasible);
        }
    }

    #[test]
    fn feasibility_rejects_length_mismatch() {
        let lambdas = LambdaVector::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(
            lambda_feasibility(&lambdas, &[1.0]),
            Err(Error::DegreeMismatch {
                expected: 2,
                found: 1
            })
        );
    }
}

//! Optimal code design as a semidefinite program.
//!
//! For a signal generator `G` and coupling operators `A_α` the best
//! decoherence-free signal is
//!
//! ```text
//! max tr(G G̃)   s.t.  tr(G̃) = 0,  tr(A_α G̃) = 0,  tr|G̃| ≤ 2,
//! ```
//!
//! with `tr|G̃| ≤ 2` written as `-X ⪯ G̃ ⪯ X`, `tr X ≤ 2`. Three independent
//! routes bracket the optimum:
//!
//! * [`constructive_bound`]: the feasible point `ρ1 - ρ0` built from the
//!   component of `G` orthogonal to the constraint span (a lower bound);
//! * [`solve_primal`]: a log-barrier interior-point method on `(G̃, X)`;
//! * [`solve_dual`]: `2 min_c ‖G - Σ c_k C_k‖_op`, an upper bound for any `c`.

mod dual;
mod primal;

pub use dual::{solve_dual, DualResult};
pub use primal::solve_primal;

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::criteria::thm1_condition;
use crate::error::{Error, Result};
use crate::operator::HermitianOperator;
use crate::span::positive_negative_split;

/// Signal generator plus constraint operators; the identity is always the
/// first constraint.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    g: HermitianOperator,
    constraints: Vec<HermitianOperator>,
}

impl SdpProblem {
    pub fn new(g: HermitianOperator, couplings: &[HermitianOperator]) -> Result<Self> {
        let dim = g.dim();
        for a in couplings {
            if a.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.dim(),
                });
            }
        }
        let mut constraints = vec![HermitianOperator::identity(dim)];
        constraints.extend(couplings.iter().cloned());
        Ok(SdpProblem { g, constraints })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn generator(&self) -> &HermitianOperator {
        &self.g
    }

    pub fn constraints(&self) -> &[HermitianOperator] {
        &self.constraints
    }

    /// The constraint list without the leading identity.
    pub fn couplings(&self) -> &[HermitianOperator] {
        &self.constraints[1..]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpSolution {
    pub primal_value: f64,
    /// Traceless and orthogonal to every constraint.
    pub g_tilde: HermitianOperator,
    /// Positive semidefinite with `-X ⪯ G̃ ⪯ X` and `tr X ≤ 2`.
    pub x_certificate: HermitianOperator,
    pub dual_value: f64,
    /// One coefficient per constraint, identity first.
    pub dual_coeffs: Vec<f64>,
    /// `dual_value - primal_value`.
    pub gap: f64,
    /// Newton iterations of the interior-point solve.
    pub iterations: usize,
    pub constructive_value: f64,
    /// Both solvers converged and the gap is below the requested tolerance.
    pub certified: bool,
}

#[derive(Debug, Clone)]
pub struct ConstructiveBound {
    /// `2 tr(G⊥²) / tr|G⊥|`, zero when `G` lies in the constraint span.
    pub value: f64,
    pub rho0: Option<HermitianOperator>,
    pub rho1: Option<HermitianOperator>,
    pub g_perp: HermitianOperator,
}

pub fn constructive_bound(g: &HermitianOperator, couplings: &[HermitianOperator], tol: &Tolerances) -> Result<ConstructiveBound> {
    let report = thm1_condition(g, couplings, tol)?;
    if !report.verdict {
        return Ok(ConstructiveBound {
            value: 0.0,
            rho0: None,
            rho1: None,
            g_perp: report.g_perp,
        });
    }
    let split = positive_negative_split(&report.g_perp, tol)?;
    let value = report.g_perp.frobenius_norm().powi(2) / split.weight;
    Ok(ConstructiveBound {
        value,
        rho0: Some(split.rho0),
        rho1: Some(split.rho1),
        g_perp: report.g_perp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{pauli, spin1};
    use approx::assert_abs_diff_eq;

    #[test]
    fn constructive_examples() {
        let tol = Tolerances::default();
        let s = spin1();
        let b = constructive_bound(&s[2].square(), &s, &tol).unwrap();
        assert_abs_diff_eq!(b.value, 1.0, epsilon = 1e-13);
        assert!(b.rho0.is_some() && b.rho1.is_some());

        let p = pauli();
        let b = constructive_bound(&p[2], &[], &tol).unwrap();
        assert_abs_diff_eq!(b.value, 2.0, epsilon = 1e-13);

        let g = HermitianOperator::diagonal(&[3.0, 1.0, -1.0, -3.0]);
        let id = HermitianOperator::identity(4);
        let b = constructive_bound(&g, &[id], &tol).unwrap();
        assert_abs_diff_eq!(b.value, 5.0, epsilon = 1e-13);

        let b = constructive_bound(&p[2], &[p[2].clone()], &tol).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(b.rho0.is_none());
    }

    #[test]
    fn problem_prepends_identity() {
        let s = spin1();
        let p = SdpProblem::new(s[2].square(), &s).unwrap();
        assert_eq!(p.constraints().len(), 4);
        assert_eq!(p.constraints()[0], HermitianOperator::identity(3));
        assert!(SdpProblem::new(s[0].clone(), &pauli()).is_err());
    }
}

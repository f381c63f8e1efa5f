//! Span-membership tests deciding whether Heisenberg scaling is reachable.
//!
//! Each criterion builds an operator span from the noise operators and
//! measures how far the signal generator sits outside it. A generator with a
//! residual above [`Tolerances::membership`] passes (verdict `true`).
//!
//! * [`thm1_condition`]: real span of `{1, A_α}`; dephasing and relaxation
//!   noise with a noiseless ancilla.
//! * [`thm2_condition`]: complex span of `{1, A_α, A_α A_β}`; any bath
//!   spectrum, with error correction on a dressed code.
//! * [`hnls_condition`]: complex span of `{1, L_i, L_i†, L_j† L_i}` for a
//!   fixed set of jump operators.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::operator::{CMatrix, HermitianOperator};
use crate::span::{orthonormal_span, project_decompose, Field};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Thm1,
    Thm2,
    Hnls,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thm1" => Ok(Criterion::Thm1),
            "thm2" => Ok(Criterion::Thm2),
            "hnls" => Ok(Criterion::Hnls),
            other => Err(Error::InvalidParameter(format!("unknown criterion '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: Criterion,
    /// Heisenberg scaling achievable.
    pub verdict: bool,
    /// Frobenius norm of the generator component outside the span.
    pub residual_norm: f64,
    pub span_dim: usize,
    /// Residual within a factor `marginal_factor` of the tolerance.
    pub marginal: bool,
    pub g_perp: HermitianOperator,
}

fn check_dims(g: &HermitianOperator, ops: &[CMatrix]) -> Result<()> {
    for op in ops {
        if op.nrows() != g.dim() || op.ncols() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: g.dim(),
                found: op.nrows(),
            });
        }
    }
    Ok(())
}

fn report(
    criterion: Criterion,
    g: &HermitianOperator,
    generators: Vec<CMatrix>,
    field: Field,
    tol: &Tolerances,
) -> Result<CriterionReport> {
    let span = orthonormal_span(&generators, field, tol)?;
    let (_, g_perp) = project_decompose(g, &span)?;
    let residual = g_perp.frobenius_norm();
    let marginal = residual >= tol.membership / tol.marginal_factor && residual <= tol.membership * tol.marginal_factor;
    Ok(CriterionReport {
        criterion,
        verdict: residual > tol.membership,
        residual_norm: residual,
        span_dim: span.len(),
        marginal,
        g_perp,
    })
}

/// Generators of the real span `{1, A_α}`.
pub fn linear_generators(dim: usize, couplings: &[HermitianOperator]) -> Vec<CMatrix> {
    let mut gens = vec![CMatrix::identity(dim, dim)];
    gens.extend(couplings.iter().map(|a| a.matrix().clone()));
    gens
}

/// Generators of the complex span `{1, A_α, A_α A_β}` over all ordered pairs.
pub fn quadratic_generators(dim: usize, couplings: &[HermitianOperator]) -> Vec<CMatrix> {
    let mut gens = linear_generators(dim, couplings);
    for a in couplings {
        for b in couplings {
            gens.push(a.matrix() * b.matrix());
        }
    }
    gens
}

/// Generators of the complex span `{1, L_i, L_i†, L_j† L_i}`.
pub fn hnls_generators(dim: usize, lindblads: &[CMatrix]) -> Vec<CMatrix> {
    let mut gens = vec![CMatrix::identity(dim, dim)];
    for l in lindblads {
        gens.push(l.clone());
        gens.push(l.adjoint());
    }
    for li in lindblads {
        for lj in lindblads {
            gens.push(lj.adjoint() * li);
        }
    }
    gens
}

pub fn thm1_condition(g: &HermitianOperator, couplings: &[HermitianOperator], tol: &Tolerances) -> Result<CriterionReport> {
    let gens = linear_generators(g.dim(), couplings);
    check_dims(g, &gens)?;
    report(Criterion::Thm1, g, gens, Field::Real, tol)
}

pub fn thm2_condition(g: &HermitianOperator, couplings: &[HermitianOperator], tol: &Tolerances) -> Result<CriterionReport> {
    let gens = quadratic_generators(g.dim(), couplings);
    check_dims(g, &gens)?;
    report(Criterion::Thm2, g, gens, Field::Complex, tol)
}

pub fn hnls_condition(g: &HermitianOperator, lindblads: &[CMatrix], tol: &Tolerances) -> Result<CriterionReport> {
    check_dims(g, lindblads)?;
    let gens = hnls_generators(g.dim(), lindblads);
    report(Criterion::Hnls, g, gens, Field::Complex, tol)
}

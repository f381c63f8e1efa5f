//! Operator subspaces under the Hilbert–Schmidt inner product `tr(A†B)`.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::operator::{c, eigh, frobenius, hermitian_deviation, trace_inner, CMatrix, HermitianOperator};

/// Scalar field of the coefficients allowed in a span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    Real,
    Complex,
}

/// An orthonormal basis of an operator subspace.
#[derive(Debug, Clone)]
pub struct OperatorSpan {
    dim: usize,
    basis: Vec<CMatrix>,
    field: Field,
}

impl OperatorSpan {
    /// The zero subspace.
    pub fn empty(dim: usize, field: Field) -> Self {
        OperatorSpan {
            dim,
            basis: Vec::new(),
            field,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of basis elements.
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn field(&self) -> Field {
        self.field
    }

    fn coefficient(&self, q: &CMatrix, m: &CMatrix) -> num_complex::Complex64 {
        let z = trace_inner(q, m);
        match self.field {
            Field::Real => c(z.re),
            Field::Complex => z,
        }
    }

    /// Orthogonal projection of `m` onto the span.
    pub fn project(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.nrows(),
            });
        }
        let mut par = CMatrix::zeros(self.dim, self.dim);
        for q in &self.basis {
            par += q * self.coefficient(q, m);
        }
        Ok(par)
    }

    /// Frobenius norm of the component of `m` orthogonal to the span.
    pub fn residual_norm(&self, m: &CMatrix) -> Result<f64> {
        let par = self.project(m)?;
        Ok(frobenius(&(m - par)))
    }

    pub fn contains(&self, m: &CMatrix, tol: f64) -> Result<bool> {
        Ok(self.residual_norm(m)? <= tol)
    }
}

/// Orthonormalizes `generators` with modified Gram–Schmidt and one
/// re-orthogonalization pass.
///
/// A generator is dropped when the norm of what remains after projection is
/// below `tol.orthonormal` times its original norm. With [`Field::Real`] every
/// generator must be Hermitian and only real coefficients are used, so the
/// basis stays Hermitian.
pub fn orthonormal_span(generators: &[CMatrix], field: Field, tol: &Tolerances) -> Result<OperatorSpan> {
    let first = generators.first().ok_or(Error::Empty("span generators"))?;
    let dim = first.nrows();
    let mut span = OperatorSpan {
        dim,
        basis: Vec::new(),
        field,
    };
    for g in generators {
        if g.nrows() != dim || g.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: g.nrows(),
            });
        }
        let mut v = if field == Field::Real {
            let deviation = hermitian_deviation(g);
            if deviation > tol.hermitian * (1.0 + frobenius(g)) {
                return Err(Error::NotHermitian { deviation });
            }
            (g + g.adjoint()) * c(0.5)
        } else {
            g.clone()
        };
        let original = frobenius(&v);
        if original == 0.0 {
            continue;
        }
        for _pass in 0..2 {
            for q in &span.basis {
                let coeff = span.coefficient(q, &v);
                v -= q * coeff;
            }
        }
        let rest = frobenius(&v);
        if rest < tol.orthonormal * original {
            continue;
        }
        span.basis.push(v / c(rest));
    }
    Ok(span)
}

/// Splits a Hermitian operator into its component inside `span` and the
/// orthogonal remainder: `g = g_par + g_perp`.
///
/// Fails when the projection is not Hermitian, which can only happen for a
/// complex span that is not closed under the adjoint.
pub fn project_decompose(g: &HermitianOperator, span: &OperatorSpan) -> Result<(HermitianOperator, HermitianOperator)> {
    let par = span.project(g.matrix())?;
    let deviation = hermitian_deviation(&par);
    if deviation > 1e-9 * (1.0 + g.frobenius_norm()) {
        return Err(Error::NotHermitian { deviation });
    }
    let par = HermitianOperator::hermitian_part(&par);
    let perp = HermitianOperator::hermitian_part(&(g.matrix() - par.matrix()));
    Ok((par, perp))
}

/// Result of [`positive_negative_split`]: `g = weight * (rho1 - rho0)`.
#[derive(Debug, Clone)]
pub struct PositiveNegativeSplit {
    pub rho1: HermitianOperator,
    pub rho0: HermitianOperator,
    /// `tr|g| / 2`.
    pub weight: f64,
}

/// Writes a traceless Hermitian operator as a weighted difference of two
/// density matrices with orthogonal supports.
///
/// Eigenvalues with modulus below `1e-12 * |g|_op` belong to neither part.
pub fn positive_negative_split(g: &HermitianOperator, tol: &Tolerances) -> Result<PositiveNegativeSplit> {
    let norm = g.frobenius_norm();
    if norm <= tol.membership {
        return Err(Error::ZeroOperator);
    }
    let trace = g.trace();
    if trace.abs() > tol.traceless * norm.max(1.0) {
        return Err(Error::NotTraceless { trace });
    }
    let (vals, vecs) = eigh(g.matrix());
    let op = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let zero = 1e-12 * op;
    let n = g.dim();
    let mut pos = CMatrix::zeros(n, n);
    let mut neg = CMatrix::zeros(n, n);
    let (mut tp, mut tn) = (0.0, 0.0);
    for (k, &lambda) in vals.iter().enumerate() {
        let v = vecs.column(k);
        let outer = v * v.adjoint();
        if lambda > zero {
            pos += outer * c(lambda);
            tp += lambda;
        } else if lambda < -zero {
            neg += outer * c(-lambda);
            tn -= lambda;
        }
    }
    if tp == 0.0 || tn == 0.0 {
        return Err(Error::NotTraceless { trace });
    }
    Ok(PositiveNegativeSplit {
        rho1: HermitianOperator::hermitian_part(&(pos / c(tp))),
        rho0: HermitianOperator::hermitian_part(&(neg / c(tn))),
        weight: 0.5 * (tp + tn),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::spin1;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn dependent_generators_collapse() {
        let i2 = CMatrix::identity(2, 2);
        let span = orthonormal_span(&[i2.clone(), i2 * c(2.0)], Field::Real, &tol()).unwrap();
        assert_eq!(span.len(), 1);
    }

    #[test]
    fn identity_and_sz_are_orthonormalized() {
        let [_, _, sz] = spin1();
        let span = orthonormal_span(&[CMatrix::identity(3, 3), sz.matrix().clone()], Field::Real, &tol()).unwrap();
        assert_eq!(span.len(), 2);
        let b = span.basis();
        // hand Gram–Schmidt: I/√3 and S_z/√2 (already orthogonal)
        assert!(frobenius(&(&b[0] - CMatrix::identity(3, 3) / c(3f64.sqrt()))) < 1e-14);
        assert!(frobenius(&(&b[1] - sz.matrix() / c(2f64.sqrt()))) < 1e-14);
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((trace_inner(&b[i], &b[j]) - c(expected)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn spin_one_quadratics_fill_the_matrix_algebra() {
        let s = spin1();
        let mut gens = vec![CMatrix::identity(3, 3)];
        gens.extend(s.iter().map(|a| a.matrix().clone()));
        for a in &s {
            for b in &s {
                gens.push(a.matrix() * b.matrix());
            }
        }
        let span = orthonormal_span(&gens, Field::Complex, &tol()).unwrap();
        assert_eq!(span.len(), 9);
    }

    #[test]
    fn real_span_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0].map(c));
        assert!(matches!(
            orthonormal_span(&[m], Field::Real, &tol()),
            Err(Error::NotHermitian { .. })
        ));
        assert!(orthonormal_span(&[], Field::Real, &tol()).is_err());
    }

    #[test]
    fn projection_examples() {
        let [sx, sy, sz] = spin1();
        let id = CMatrix::identity(3, 3);
        let span = orthonormal_span(&[id.clone(), sz.matrix().clone()], Field::Real, &tol()).unwrap();
        let (_, perp) = project_decompose(&sz, &span).unwrap();
        assert!(perp.frobenius_norm() < 1e-14);

        let sz2 = sz.square();
        let linear = orthonormal_span(
            &[id.clone(), sx.matrix().clone(), sy.matrix().clone(), sz.matrix().clone()],
            Field::Real,
            &tol(),
        )
        .unwrap();
        let (par, perp) = project_decompose(&sz2, &linear).unwrap();
        let expected = HermitianOperator::diagonal(&[1.0 / 3.0, -2.0 / 3.0, 1.0 / 3.0]);
        assert!(frobenius(&(perp.matrix() - expected.matrix())) < 1e-14);
        assert!(frobenius(&(par.matrix() + perp.matrix() - sz2.matrix())) < 1e-14);
        assert_abs_diff_eq!(perp.trace(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn sz_squared_lies_in_quadratic_span() {
        let s = spin1();
        let mut gens = vec![CMatrix::identity(3, 3)];
        gens.extend(s.iter().map(|a| a.matrix().clone()));
        for a in &s {
            for b in &s {
                gens.push(a.matrix() * b.matrix());
            }
        }
        let span = orthonormal_span(&gens, Field::Complex, &tol()).unwrap();
        let (_, perp) = project_decompose(&s[2].square(), &span).unwrap();
        assert!(perp.frobenius_norm() < 1e-12);
    }

    #[test]
    fn split_examples() {
        let s = positive_negative_split(&HermitianOperator::diagonal(&[1.0, -1.0]), &tol()).unwrap();
        assert!(frobenius(&(s.rho1.matrix() - HermitianOperator::diagonal(&[1.0, 0.0]).matrix())) < 1e-14);
        assert!(frobenius(&(s.rho0.matrix() - HermitianOperator::diagonal(&[0.0, 1.0]).matrix())) < 1e-14);
        assert_abs_diff_eq!(s.weight, 1.0, epsilon = 1e-14);

        let g = HermitianOperator::diagonal(&[1.0 / 3.0, -2.0 / 3.0, 1.0 / 3.0]);
        let s = positive_negative_split(&g, &tol()).unwrap();
        assert!(frobenius(&(s.rho1.matrix() - HermitianOperator::diagonal(&[0.5, 0.0, 0.5]).matrix())) < 1e-14);
        assert!(frobenius(&(s.rho0.matrix() - HermitianOperator::diagonal(&[0.0, 1.0, 0.0]).matrix())) < 1e-14);
        assert_abs_diff_eq!(s.weight, 2.0 / 3.0, epsilon = 1e-14);

        let [sx, _, _] = crate::operator::pauli();
        let s = positive_negative_split(&sx, &tol()).unwrap();
        let plus = CMatrix::from_element(2, 2, c(0.5));
        let minus = CMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5].map(c));
        assert!(frobenius(&(s.rho1.matrix() - plus)) < 1e-14);
        assert!(frobenius(&(s.rho0.matrix() - minus)) < 1e-14);
        assert_abs_diff_eq!(s.weight, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn split_errors() {
        assert!(matches!(
            positive_negative_split(&HermitianOperator::zeros(2), &tol()),
            Err(Error::ZeroOperator)
        ));
        assert!(matches!(
            positive_negative_split(&HermitianOperator::diagonal(&[1.0, 0.5]), &tol()),
            Err(Error::NotTraceless { .. })
        ));
    }
}

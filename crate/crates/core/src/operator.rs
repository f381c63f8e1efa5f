//! Dense operator algebra on small complex Hilbert spaces.
//!
//! Everything here works with `nalgebra` dense matrices of [`C64`] entries.
//! [`HermitianOperator`] and [`StateVector`] are validated wrappers: once
//! constructed they are immutable and their invariants hold exactly
//! (Hermitian operators are re-symmetrized on construction).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::config::Tolerances;
use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// `tr(a† b)`.
pub fn trace_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `m ⊗ 1_n`, i.e. `m` acting on the first factor of a bipartite space.
pub fn lift(m: &CMatrix, anc_dim: usize) -> CMatrix {
    if anc_dim == 1 {
        return m.clone();
    }
    tensor(m, &CMatrix::identity(anc_dim, anc_dim))
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::Empty("operator of dimension zero"));
    }
    Ok(m.nrows())
}

/// Eigenvalues in ascending order and the matching eigenvectors as columns.
///
/// Eigenvectors are phase-fixed so that their first non-negligible component
/// is real and positive. Within (numerically) degenerate clusters the vectors
/// are ordered lexicographically by their entries, which makes the output
/// deterministic for golden tests.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let herm = (m + m.adjoint()) * c(0.5);
    let eig = nalgebra::SymmetricEigen::new(herm);
    let mut pairs: Vec<(f64, CVector)> = (0..n)
        .map(|k| {
            let mut v: CVector = eig.eigenvectors.column(k).into_owned();
            let norm = v.norm();
            v /= c(norm);
            if let Some(z) = v.iter().copied().find(|z| z.norm() > 1e-10) {
                v *= z.conj() / z.norm();
            }
            (eig.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let scale = pairs.iter().map(|p| p.0.abs()).fold(1.0f64, f64::max);
    let tie = 1e-10 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[end].0 - pairs[end - 1].0 < tie {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|a, b| lexicographic(&a.1, &b.1));
        }
        start = end;
    }

    let values = pairs.iter().map(|p| p.0).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, (_, v)) in pairs.iter().enumerate() {
        vectors.set_column(k, v);
    }
    (values, vectors)
}

/// Principal square root of a positive semidefinite matrix; negative
/// eigenvalues from roundoff are clipped to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &v) in vals.iter().enumerate() {
        if v > 0.0 {
            let col = vecs.column(k);
            out += col * col.adjoint() * c(v.sqrt());
        }
    }
    out
}

/// Lower Cholesky factor of the Hermitian part of `m`, `None` unless every
/// pivot is strictly positive. (nalgebra's complex Cholesky accepts
/// indefinite input because complex square roots always exist.)
pub fn cholesky_pd(m: &CMatrix) -> Option<CMatrix> {
    let n = m.nrows();
    let a = (m + m.adjoint()) * c(0.5);
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = c(djj);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// `ln det m` for a Hermitian positive definite matrix, `None` otherwise.
pub fn logdet_pd(m: &CMatrix) -> Option<f64> {
    let l = cholesky_pd(m)?;
    Some((0..m.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

/// Inverse of a Hermitian positive definite matrix.
pub fn inverse_pd(m: &CMatrix) -> Option<CMatrix> {
    let l = cholesky_pd(m)?;
    let linv = l.solve_lower_triangular(&CMatrix::identity(m.nrows(), m.nrows()))?;
    let inv = linv.adjoint() * linv;
    Some((&inv + inv.adjoint()) * c(0.5))
}

fn lexicographic(a: &CVector, b: &CVector) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let ord = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// A Hermitian operator on a `dim`-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: CMatrix,
}

impl HermitianOperator {
    /// Validates Hermiticity against [`Tolerances::DEFAULT`].
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, Tolerances::DEFAULT.hermitian)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        check_square(&m)?;
        let deviation = hermitian_deviation(&m);
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::hermitian_part(&m))
    }

    /// `(m + m†) / 2`, without any validation.
    pub fn hermitian_part(m: &CMatrix) -> Self {
        HermitianOperator {
            m: (m + m.adjoint()) * c(0.5),
        }
    }

    pub fn from_real(rows: usize, data: &[f64]) -> Result<Self> {
        let m = CMatrix::from_row_iterator(rows, rows, data.iter().map(|&x| c(x)));
        Self::new(m)
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator {
            m: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOperator {
            m: CMatrix::zeros(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = c(v);
        }
        HermitianOperator { m }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(state: &StateVector) -> Self {
        let v = state.amplitudes();
        HermitianOperator {
            m: v * v.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.m)
    }

    /// Largest absolute eigenvalue.
    pub fn op_norm(&self) -> f64 {
        let (vals, _) = eigh(&self.m);
        vals.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn eigh(&self) -> (Vec<f64>, CMatrix) {
        eigh(&self.m)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.m).0
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianOperator { m: &self.m * c(s) }
    }

    pub fn square(&self) -> Self {
        Self::hermitian_part(&(&self.m * &self.m))
    }

    /// `self ⊗ 1_n`.
    pub fn lift(&self, anc_dim: usize) -> Self {
        HermitianOperator {
            m: lift(&self.m, anc_dim),
        }
    }

    pub fn tensor(&self, other: &HermitianOperator) -> Self {
        HermitianOperator {
            m: tensor(&self.m, &other.m),
        }
    }

    /// `⟨ψ|self|ψ⟩`.
    pub fn expectation(&self, state: &StateVector) -> f64 {
        let v = state.amplitudes();
        (v.adjoint() * &self.m * v)[(0, 0)].re
    }

    fn check_dim(&self, other: &HermitianOperator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &HermitianOperator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(HermitianOperator {
            m: &self.m + &other.m,
        })
    }

    pub fn try_sub(&self, other: &HermitianOperator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(HermitianOperator {
            m: &self.m - &other.m,
        })
    }
}

impl std::ops::Add for &HermitianOperator {
    type Output = HermitianOperator;

    /// Panics on dimension mismatch; see [`HermitianOperator::try_add`].
    fn add(self, rhs: Self) -> HermitianOperator {
        self.try_add(rhs).expect("dimension mismatch in operator sum")
    }
}

impl std::ops::Sub for &HermitianOperator {
    type Output = HermitianOperator;

    fn sub(self, rhs: Self) -> HermitianOperator {
        self.try_sub(rhs).expect("dimension mismatch in operator difference")
    }
}

/// `tr(a b)` for Hermitian operators; always real.
pub fn hs_inner(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    a.check_dim(b)?;
    let z = trace_inner(a.matrix(), b.matrix());
    debug_assert!(z.im.abs() <= 1e-12 * (1.0 + a.frobenius_norm() * b.frobenius_norm()));
    Ok(z.re)
}

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    v: CVector,
}

impl StateVector {
    pub fn new(v: CVector) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::Empty("state of dimension zero"));
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > Tolerances::DEFAULT.normalization.max(4.0 * f64::EPSILON * v.len() as f64) {
            return Err(Error::NotNormalized { norm });
        }
        Ok(StateVector { v })
    }

    /// Rescales `v` to unit norm.
    pub fn normalized(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if v.is_empty() || norm == 0.0 {
            return Err(Error::ZeroOperator);
        }
        Ok(StateVector { v: v / c(norm) })
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::normalized(CVector::from_column_slice(amps))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = c(1.0);
        StateVector { v }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.v
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.v.dotc(&other.v)
    }

    /// `|self⟩ ⊗ |other⟩`.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector {
            v: self.v.kronecker(&other.v),
        }
    }

    /// `(|a⟩ + |b⟩)/√2` for orthonormal `a`, `b`.
    pub fn equal_superposition(a: &StateVector, b: &StateVector) -> Result<StateVector> {
        Self::normalized(&a.v + &b.v)
    }
}

/// `⟨a|m|b⟩`.
pub fn matrix_element(a: &StateVector, m: &CMatrix, b: &StateVector) -> C64 {
    a.amplitudes().dotc(&(m * b.amplitudes()))
}

/// Spin matrices `(S_x, S_y, S_z)` of the `(2s+1)`-dimensional irreducible
/// representation, in the basis `|m = s⟩, |s-1⟩, …, |-s⟩`.
pub fn spin_matrices(two_s: usize) -> Result<(HermitianOperator, HermitianOperator, HermitianOperator)> {
    if two_s == 0 {
        return Err(Error::InvalidParameter("two_s must be at least 1".into()));
    }
    let n = two_s + 1;
    let s = two_s as f64 / 2.0;
    let m_of = |k: usize| s - k as f64;
    // raising operator: S+ |m⟩ = sqrt(s(s+1) - m(m+1)) |m+1⟩, and |m+1⟩ sits at index k-1
    let mut raise = CMatrix::zeros(n, n);
    for k in 1..n {
        let m = m_of(k);
        raise[(k - 1, k)] = c((s * (s + 1.0) - m * (m + 1.0)).sqrt());
    }
    let lower = raise.adjoint();
    let sx = (&raise + &lower) * c(0.5);
    let sy = (&raise - &lower) * (-0.5 * I);
    let sz = CMatrix::from_diagonal(&CVector::from_iterator(n, (0..n).map(|k| c(m_of(k)))));
    Ok((
        HermitianOperator::hermitian_part(&sx),
        HermitianOperator::hermitian_part(&sy),
        HermitianOperator { m: sz },
    ))
}

/// Spin-1 triple `[S_x, S_y, S_z]` in the `(|+1⟩, |0⟩, |-1⟩)` basis.
pub fn spin1() -> [HermitianOperator; 3] {
    let (x, y, z) = spin_matrices(2).expect("spin-1 is valid");
    [x, y, z]
}

/// Pauli matrices `[σ_x, σ_y, σ_z]`.
pub fn pauli() -> [HermitianOperator; 3] {
    let (x, y, z) = spin_matrices(1).expect("spin-1/2 is valid");
    [x.scale(2.0), y.scale(2.0), z.scale(2.0)]
}

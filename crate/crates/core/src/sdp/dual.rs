//! Lagrange dual: `2 min_c ‖G - Σ c_k C_k‖_op`.
//!
//! Any coefficient vector gives an upper bound on the primal optimum, so the
//! reported value is always recomputed from the returned coefficients.
//! Subgradient descent with Polyak steps does the bulk of the work. Because
//! its convergence near a kink is sublinear, the best iterate is then polished
//! by Newton steps on the epigraph form `min t s.t. -tI ⪯ M(c) ⪯ tI`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::SdpProblem;
use crate::error::Result;
use crate::operator::{c, inverse_pd, logdet_pd, CMatrix};

const MAX_SUBGRADIENT: usize = 20_000;
const WINDOW: usize = 50;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualResult {
    /// `2 ‖G - Σ c_k C_k‖_op` at the returned coefficients.
    pub value: f64,
    /// One coefficient per constraint, identity first.
    pub coeffs: Vec<f64>,
    pub iterations: usize,
    /// The objective stabilized before the iteration cap.
    pub converged: bool,
}

fn residual(g: &CMatrix, constraints: &[CMatrix], coeffs: &[f64]) -> CMatrix {
    let mut m = g.clone();
    for (a, &k) in constraints.iter().zip(coeffs) {
        m -= a * c(k);
    }
    m
}

fn hermitian_eig(m: &CMatrix) -> SymmetricEigen<num_complex::Complex64, nalgebra::Dyn> {
    SymmetricEigen::new((m + m.adjoint()) * c(0.5))
}

fn op_norm(m: &CMatrix) -> f64 {
    hermitian_eig(m).eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Operator norm and a subgradient with respect to the coefficients.
fn norm_and_subgradient(m: &CMatrix, constraints: &[CMatrix]) -> (f64, Vec<f64>) {
    let eig = hermitian_eig(m);
    let (mut k, mut best) = (0, f64::NEG_INFINITY);
    for (i, v) in eig.eigenvalues.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            k = i;
        }
    }
    let sign = eig.eigenvalues[k].signum();
    let v = eig.eigenvectors.column(k);
    let sub = constraints
        .iter()
        .map(|a| -sign * (v.adjoint() * a * v)[(0, 0)].re)
        .collect();
    (best, sub)
}

fn subgradient(g: &CMatrix, constraints: &[CMatrix], tol: f64) -> (Vec<f64>, f64, usize, bool) {
    let m = constraints.len();
    let mut coeffs = vec![0.0; m];
    // Centering the spectrum with the identity is optimal when no other
    // constraint helps and is a good start otherwise.
    let eig = hermitian_eig(g);
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m > 0 {
        let id_trace = constraints[0].trace().re;
        let d = g.nrows() as f64;
        coeffs[0] = 0.5 * (lo + hi) * d / id_trace;
    }

    let (mut f, _) = norm_and_subgradient(&residual(g, constraints, &coeffs), constraints);
    let mut best = f;
    let mut best_coeffs = coeffs.clone();
    let mut delta = 0.5 * f.max(tol);
    let mut window_start = best;

    for iter in 0..MAX_SUBGRADIENT {
        let (val, sub) = norm_and_subgradient(&residual(g, constraints, &coeffs), constraints);
        f = val;
        if f < best {
            best = f;
            best_coeffs.clone_from(&coeffs);
        }
        let sq: f64 = sub.iter().map(|s| s * s).sum();
        if sq < 1e-30 {
            return (best_coeffs, best, iter, true);
        }
        let step = (f - (best - delta)) / sq;
        for (x, s) in coeffs.iter_mut().zip(&sub) {
            *x -= step * s;
        }

        if (iter + 1) % WINDOW == 0 {
            let improvement = window_start - best;
            if improvement < tol {
                if delta < tol {
                    return (best_coeffs, best, iter + 1, true);
                }
                delta *= 0.5;
                coeffs.clone_from(&best_coeffs);
            }
            window_start = best;
        }
    }
    (best_coeffs, best, MAX_SUBGRADIENT, false)
}

/// Real Gram–Schmidt of the constraints; returns the orthonormal basis and,
/// for each basis element, its expansion in the original constraints.
fn orthonormalize(constraints: &[CMatrix]) -> (Vec<CMatrix>, Vec<Vec<f64>>) {
    let m = constraints.len();
    let mut basis: Vec<CMatrix> = Vec::new();
    let mut expansion: Vec<Vec<f64>> = Vec::new();
    for (j, a) in constraints.iter().enumerate() {
        let scale = a.norm();
        let mut v = a.clone();
        let mut coef = vec![0.0; m];
        coef[j] = 1.0;
        for _ in 0..2 {
            for (q, e) in basis.iter().zip(&expansion) {
                let overlap = q.iter().zip(v.iter()).map(|(x, y)| (x.conj() * y).re).sum::<f64>();
                v -= q * c(overlap);
                for (ci, ei) in coef.iter_mut().zip(e) {
                    *ci -= overlap * ei;
                }
            }
        }
        let n = v.norm();
        if n > 1e-10 * scale.max(1.0) {
            basis.push(v / c(n));
            expansion.push(coef.into_iter().map(|x| x / n).collect());
        }
    }
    (basis, expansion)
}

/// Newton polish of `min t` over `-tI ⪯ G - Σ y_k Q_k ⪯ tI`.
fn polish(g: &CMatrix, basis: &[CMatrix], y0: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
    let d = g.nrows();
    let r = basis.len();
    let n = r + 1;
    let id = CMatrix::identity(d, d);
    let m_of = |y: &[f64]| residual(g, basis, y);
    let mut y = y0;
    let mut t = op_norm(&m_of(&y)) * 1.05 + 1e-3;
    let nu = 2.0 * d as f64;
    let mut tau = nu / t.max(1e-3);

    let barrier = |y: &[f64], t: f64, tau: f64| -> Option<f64> {
        let m = m_of(y);
        let lu = logdet_pd(&(&id * c(t) - &m))?;
        let ll = logdet_pd(&(&id * c(t) + &m))?;
        Some(tau * t - lu - ll)
    };

    for _ in 0..60 {
        for _ in 0..100 {
            let m = m_of(&y);
            let (Some(uinv), Some(linv)) = (inverse_pd(&(&id * c(t) - &m)), inverse_pd(&(&id * c(t) + &m))) else {
                return Some(y);
            };
            // dU/dy_k = Q_k, dL/dy_k = -Q_k, dU/dt = dL/dt = I.
            let mut yu: Vec<CMatrix> = basis.iter().map(|q| &uinv * q).collect();
            let mut yl: Vec<CMatrix> = basis.iter().map(|q| -(&linv * q)).collect();
            yu.push(uinv.clone());
            yl.push(linv.clone());

            let mut grad = DVector::zeros(n);
            let mut hess = DMatrix::zeros(n, n);
            for i in 0..n {
                grad[i] = -yu[i].trace().re - yl[i].trace().re;
                for j in 0..=i {
                    let h = (&yu[i] * &yu[j]).trace().re + (&yl[i] * &yl[j]).trace().re;
                    hess[(i, j)] = h;
                    hess[(j, i)] = h;
                }
            }
            grad[r] += tau;

            let Some(chol) = hess.cholesky() else {
                return Some(y);
            };
            let step = chol.solve(&(-&grad));
            let dec = -grad.dot(&step);
            if dec / 2.0 < 1e-12 {
                break;
            }
            let Some(f0) = barrier(&y, t, tau) else {
                return Some(y);
            };
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-14 {
                let ty: Vec<f64> = y.iter().zip(step.iter()).map(|(a, b)| a + alpha * b).collect();
                let tt = t + alpha * step[r];
                if let Some(f) = barrier(&ty, tt, tau) {
                    if f <= f0 - 0.25 * alpha * dec + 1e-14 * f0.abs().max(1.0) {
                        y = ty;
                        t = tt;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if nu / tau < 0.1 * tol {
            break;
        }
        tau *= 10.0;
    }
    Some(y)
}

/// Minimizes the operator-norm distance from `G` to the constraint span.
pub fn solve_dual(problem: &SdpProblem, tol: f64) -> Result<DualResult> {
    let g = problem.generator().matrix().clone();
    let constraints: Vec<CMatrix> = problem.constraints().iter().map(|a| a.matrix().clone()).collect();

    let (sub_coeffs, sub_value, iterations, sub_converged) = subgradient(&g, &constraints, tol);
    let mut coeffs = sub_coeffs;
    let mut value = sub_value;
    let mut converged = sub_converged;

    let (basis, expansion) = orthonormalize(&constraints);
    if !basis.is_empty() {
        // Express the current combination in the orthonormal basis.
        let combo = residual(&CMatrix::zeros(g.nrows(), g.ncols()), &constraints, &coeffs) * c(-1.0);
        let y0: Vec<f64> = basis
            .iter()
            .map(|q| q.iter().zip(combo.iter()).map(|(x, y)| (x.conj() * y).re).sum())
            .collect();
        let pol = polish(&g, &basis, y0, tol);
        if let Some(y) = pol {
            let mut polished = vec![0.0; constraints.len()];
            for (yk, e) in y.iter().zip(&expansion) {
                for (p, ek) in polished.iter_mut().zip(e) {
                    *p += yk * ek;
                }
            }
            let v = op_norm(&residual(&g, &constraints, &polished));
            if v <= value {
                value = v;
                coeffs = polished;
                converged = true;
            }
        }
    }

    Ok(DualResult {
        value: 2.0 * value,
        coeffs,
        iterations,
        converged,
    })
}

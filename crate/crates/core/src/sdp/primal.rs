//! Log-det barrier interior-point method for the primal program.
//!
//! The cone constraints `X ± G̃ ⪰ 0` are carried by `P = X + G̃` and
//! `N = X - G̃`, both kept positive definite, with slack
//! `s = 4 - tr P - tr N = 2 (2 - tr X)`. Feasible moves are spanned by
//! `(B, B)` for a Hermitian basis `B` (changes of `X` only) and `(W, 0)` for
//! `W` orthogonal to every constraint (changes of `G̃`), so the equality
//! constraints are never violated beyond roundoff.

use nalgebra::{DMatrix, DVector};

use super::{constructive_bound, solve_dual, SdpProblem, SdpSolution};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::operator::{c, inverse_pd, logdet_pd, CMatrix, HermitianOperator, C64};
use crate::span::{orthonormal_span, Field, OperatorSpan};

const MAX_NEWTON: usize = 200;
const BARRIER_FACTOR: f64 = 5.0;

/// Real orthonormal basis of `d×d` Hermitian matrices.
fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut m = CMatrix::zeros(d, d);
        m[(i, i)] = c(1.0);
        out.push(m);
    }
    for i in 0..d {
        for j in i + 1..d {
            let mut m = CMatrix::zeros(d, d);
            m[(i, j)] = c(r);
            m[(j, i)] = c(r);
            out.push(m);
            let mut m = CMatrix::zeros(d, d);
            m[(i, j)] = C64::new(0.0, r);
            m[(j, i)] = C64::new(0.0, -r);
            out.push(m);
        }
    }
    out
}

/// `tr(a b)` for matrices whose product trace is known to be real.
fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = a[(i, k)];
            let y = b[(k, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

struct Direction {
    p: CMatrix,
    /// `None` for moves that change `G̃` only (the `N` component is zero).
    n: Option<CMatrix>,
    trace: f64,
    cost: f64,
}

struct State {
    p: CMatrix,
    n: CMatrix,
}

impl State {
    fn slack(&self) -> f64 {
        4.0 - self.p.trace().re - self.n.trace().re
    }

    fn objective(&self, g: &CMatrix) -> f64 {
        0.5 * trace_product(g, &(&self.p - &self.n))
    }

    /// `-τ f - ln det P - ln det N - ln s`, `None` outside the domain.
    fn barrier(&self, g: &CMatrix, tau: f64) -> Option<f64> {
        let s = self.slack();
        if !(s > 0.0) {
            return None;
        }
        let lp = logdet_pd(&self.p)?;
        let ln = logdet_pd(&self.n)?;
        Some(-tau * self.objective(g) - lp - ln - s.ln())
    }

    fn moved(&self, dirs: &[Direction], step: &DVector<f64>, alpha: f64) -> State {
        let mut p = self.p.clone();
        let mut n = self.n.clone();
        for (dir, &x) in dirs.iter().zip(step.iter()) {
            let w = c(alpha * x);
            p += &dir.p * w;
            if let Some(dn) = &dir.n {
                n += dn * w;
            }
        }
        State { p, n }
    }
}

fn solve_newton(h: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = h.clone().cholesky() {
        return Ok(ch.solve(rhs));
    }
    let scale = (0..h.nrows()).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    let mut reg = h;
    for i in 0..reg.nrows() {
        reg[(i, i)] += 1e-12 * scale;
    }
    reg.cholesky()
        .map(|ch| ch.solve(rhs))
        .ok_or_else(|| Error::Numerical("barrier Hessian is not positive definite".into()))
}

/// Centers the iterate for barrier weight `tau`. Returns Newton steps taken.
fn center(state: &mut State, dirs: &[Direction], g: &CMatrix, tau: f64) -> Result<usize> {
    let n = dirs.len();
    for iter in 0..MAX_NEWTON {
        let pinv = inverse_pd(&state.p).ok_or_else(|| Error::Numerical("P lost positive definiteness".into()))?;
        let ninv = inverse_pd(&state.n).ok_or_else(|| Error::Numerical("N lost positive definiteness".into()))?;
        let s = state.slack();

        let yp: Vec<CMatrix> = dirs.iter().map(|d| &pinv * &d.p).collect();
        let yn: Vec<Option<CMatrix>> = dirs.iter().map(|d| d.n.as_ref().map(|m| &ninv * m)).collect();

        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut gi = tau * dirs[i].cost - yp[i].trace().re + dirs[i].trace / s;
            if let Some(y) = &yn[i] {
                gi -= y.trace().re;
            }
            grad[i] = gi;
            for j in 0..=i {
                let mut hij = trace_product(&yp[i], &yp[j]) + dirs[i].trace * dirs[j].trace / (s * s);
                if let (Some(a), Some(b)) = (&yn[i], &yn[j]) {
                    hij += trace_product(a, b);
                }
                hess[(i, j)] = hij;
                hess[(j, i)] = hij;
            }
        }

        let step = solve_newton(hess, &(-&grad))?;
        let decrement = -grad.dot(&step);
        if decrement / 2.0 < 1e-11 {
            return Ok(iter);
        }

        let f0 = state.barrier(g, tau).ok_or_else(|| Error::Numerical("iterate left the barrier domain".into()))?;
        let slack = 1e-14 * f0.abs().max(1.0);
        let mut alpha = 1.0;
        loop {
            let trial = state.moved(dirs, &step, alpha);
            if let Some(f) = trial.barrier(g, tau) {
                if f <= f0 - 0.25 * alpha * decrement + slack {
                    *state = trial;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-14 {
                // Roundoff floor: the barrier can no longer be decreased.
                return Ok(iter + 1);
            }
        }
    }
    Ok(MAX_NEWTON)
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * c(0.5);
    nalgebra::SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Solves the primal program and attaches the independently computed dual.
///
/// `tol` is the target duality measure of the barrier path; the returned
/// `gap` is the difference between the dual and primal values.
pub fn solve_primal(problem: &SdpProblem, tol: f64) -> Result<SdpSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let tols = Tolerances::default();
    let d = problem.dim();
    let g = problem.generator().matrix().clone();
    let constraint_mats: Vec<CMatrix> = problem.constraints().iter().map(|a| a.matrix().clone()).collect();
    let span = orthonormal_span(&constraint_mats, Field::Real, &tols)?;

    let basis = hermitian_basis(d);
    let mut perp_gens = Vec::with_capacity(basis.len());
    for b in &basis {
        let r = b - span.project(b)?;
        // Basis elements inside the span leave pure roundoff behind.
        if r.norm() > 1e-9 {
            perp_gens.push(r);
        }
    }
    let perp = if perp_gens.is_empty() {
        OperatorSpan::empty(d, Field::Real)
    } else {
        orthonormal_span(&perp_gens, Field::Real, &tols)?
    };

    let mut dirs: Vec<Direction> = basis
        .iter()
        .map(|b| Direction {
            p: b.clone(),
            n: Some(b.clone()),
            trace: 2.0 * b.trace().re,
            cost: 0.0,
        })
        .collect();
    dirs.extend(perp.basis().iter().map(|w| Direction {
        p: w.clone(),
        n: None,
        trace: w.trace().re,
        cost: -0.5 * trace_product(&g, w),
    }));

    // Warm start at the constructive point G̃ = θ(ρ1 - ρ0), X = θ(ρ1 + ρ0) + ηI.
    let eta = 0.5 / d as f64;
    let theta = 0.5;
    let bound = constructive_bound(problem.generator(), problem.couplings(), &tols)?;
    let mut state = match (&bound.rho1, &bound.rho0) {
        (Some(r1), Some(r0)) if !perp.is_empty() => State {
            p: r1.matrix() * c(2.0 * theta) + CMatrix::identity(d, d) * c(eta),
            n: r0.matrix() * c(2.0 * theta) + CMatrix::identity(d, d) * c(eta),
        },
        _ => State {
            p: CMatrix::identity(d, d) * c(eta),
            n: CMatrix::identity(d, d) * c(eta),
        },
    };

    let nu = (2 * d + 1) as f64;
    let mut tau = 1.0;
    let mut iterations = 0;
    let mut converged = perp.is_empty();
    if !perp.is_empty() {
        loop {
            iterations += center(&mut state, &dirs, &g, tau)?;
            if nu / tau < tol {
                converged = true;
                break;
            }
            if tau > 1e16 {
                break;
            }
            tau *= BARRIER_FACTOR;
        }
    }

    // Remove roundoff drift out of the feasible subspace.
    let raw = (&state.p - &state.n) * c(0.5);
    let g_tilde = if perp.is_empty() {
        CMatrix::zeros(d, d)
    } else {
        let mut acc = CMatrix::zeros(d, d);
        for w in perp.basis() {
            acc += w * c(trace_product(w, &raw));
        }
        acc
    };
    let mut x = (&state.p + &state.n) * c(0.5);
    if perp.is_empty() {
        x = CMatrix::zeros(d, d);
    }
    let worst = min_eigenvalue(&(&x - &g_tilde)).min(min_eigenvalue(&(&x + &g_tilde)));
    if worst < 0.0 {
        x += CMatrix::identity(d, d) * c(-worst);
    }

    let g_tilde = HermitianOperator::hermitian_part(&g_tilde);
    let x_certificate = HermitianOperator::hermitian_part(&x);
    let primal_value = trace_product(&g, g_tilde.matrix());

    let dual = solve_dual(problem, tol)?;
    let gap = dual.value - primal_value;
    let certified = converged && dual.converged && gap.abs() <= (10.0 * tol).max(1e-6);

    Ok(SdpSolution {
        primal_value,
        g_tilde,
        x_certificate,
        dual_value: dual.value,
        dual_coeffs: dual.coeffs,
        gap,
        iterations,
        constructive_value: bound.value,
        certified,
    })
}

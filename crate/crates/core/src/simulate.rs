//! Master-equation integration, Fisher information and scaling sweeps.
//!
//! Fisher information follows the metrology convention used throughout the
//! crate: for a pure probe `F_Q = t² Δ²G_eff`, the variance of the effective
//! generator (a quarter of the textbook quantum Fisher information
//! `4 t² Var G`). The numeric route estimates the same quantity from the
//! Uhlmann fidelity `F` between states evolved at `±δ`:
//! `F_Q ≈ (1 - F) / (2δ)²`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codespace::{effective_generator, CodeSpace};
use crate::error::{Error, Result};
use crate::lindblad::{default_gap_tol, jump_operators, BathSpectrum, Generator, LindbladSet, NoiseModelConfig};
use crate::operator::{c, eigh, CMatrix, HermitianOperator, StateVector};

/// Hard limit on `|tr ρ - 1|` along a trajectory.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;
/// Hard limit on negative eigenvalues of recorded states.
pub const POSITIVITY_LIMIT: f64 = -1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_final: f64,
    /// Step size; `None` picks `1e-3 / max(‖H‖_op, Σγ)`.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Offset for finite-difference Fisher information; `None` picks
    /// `1e-4 / ‖G‖_op`.
    #[serde(default)]
    pub delta_omega: Option<f64>,
    /// Record every `record_stride`-th step (and always the last one).
    #[serde(default = "one")]
    pub record_stride: usize,
}

fn one() -> usize {
    1
}

impl SimConfig {
    pub fn new(t_final: f64) -> Self {
        SimConfig {
            t_final,
            dt: None,
            delta_omega: None,
            record_stride: 1,
        }
    }
}

/// Default step for a generator: `1e-3 / max(‖H‖_op, Σγ)`.
pub fn default_dt(gen: &Generator) -> f64 {
    let h = HermitianOperator::hermitian_part(gen.hamiltonian()).op_norm();
    let scale = h.max(gen.total_rate());
    if scale > 0.0 {
        1e-3 / scale
    } else {
        1e-3
    }
}

fn rk4_step(gen: &Generator, rho: &CMatrix, h: f64) -> CMatrix {
    let k1 = gen.apply(rho);
    let k2 = gen.apply(&(rho + &k1 * c(0.5 * h)));
    let k3 = gen.apply(&(rho + &k2 * c(0.5 * h)));
    let k4 = gen.apply(&(rho + &k3 * c(h)));
    rho + (k1 + (k2 + k3) * c(2.0) + k4) * c(h / 6.0)
}

fn check_stability(gen: &Generator, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let bound = dt * gen.norm_bound();
    if bound >= 0.1 {
        return Err(Error::InvalidParameter(format!(
            "step too large: dt·‖generator‖ = {bound:.3e} (must stay below 0.1)"
        )));
    }
    Ok(())
}

fn min_eigenvalue(rho: &CMatrix) -> f64 {
    eigh(rho).0[0]
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    /// Largest `|tr ρ - 1|` seen before renormalization.
    pub max_trace_drift: f64,
    /// Smallest eigenvalue among recorded states.
    pub min_eigenvalue: f64,
    pub steps: usize,
}

/// Integrates to each of the (increasing) `times`, landing on them exactly:
/// every interval is split into equal steps no longer than `dt`.
pub fn evolve_to_times(rho0: &CMatrix, gen: &Generator, times: &[f64], dt: f64) -> Result<Trajectory> {
    check_stability(gen, dt)?;
    if rho0.nrows() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            found: rho0.nrows(),
        });
    }
    let mut rho = rho0.clone();
    let mut t = 0.0;
    let mut out = Trajectory {
        times: Vec::with_capacity(times.len()),
        states: Vec::with_capacity(times.len()),
        max_trace_drift: 0.0,
        min_eigenvalue: f64::INFINITY,
        steps: 0,
    };
    for &target in times {
        if target < t {
            return Err(Error::InvalidParameter(format!("times must be increasing ({target} < {t})")));
        }
        let span = target - t;
        let n = (span / dt).ceil() as usize;
        if n > 0 {
            let h = span / n as f64;
            for _ in 0..n {
                rho = rk4_step(gen, &rho, h);
                let tr = rho.trace().re;
                let drift = (tr - 1.0).abs();
                out.max_trace_drift = out.max_trace_drift.max(drift);
                if drift > TRACE_DRIFT_LIMIT || !tr.is_finite() {
                    return Err(Error::Integration {
                        t,
                        reason: format!("trace drifted to {tr}"),
                    });
                }
                rho /= c(tr);
                out.steps += 1;
            }
        }
        t = target;
        let lo = min_eigenvalue(&rho);
        if lo < POSITIVITY_LIMIT {
            return Err(Error::Integration {
                t,
                reason: format!("state lost positivity (eigenvalue {lo:.3e})"),
            });
        }
        out.min_eigenvalue = out.min_eigenvalue.min(lo);
        out.times.push(t);
        out.states.push(rho.clone());
    }
    Ok(out)
}

/// Fixed-step RK4 from `t = 0` to `cfg.t_final`.
pub fn evolve(rho0: &CMatrix, gen: &Generator, cfg: &SimConfig) -> Result<Trajectory> {
    if !(cfg.t_final > 0.0) {
        return Err(Error::InvalidParameter("t_final must be positive".into()));
    }
    let dt = cfg.dt.unwrap_or_else(|| default_dt(gen));
    if dt > cfg.t_final {
        return Err(Error::InvalidParameter(format!("dt {dt} exceeds t_final {}", cfg.t_final)));
    }
    let n = (cfg.t_final / dt).round().max(1.0) as usize;
    let h = cfg.t_final / n as f64;
    let stride = cfg.record_stride.max(1);
    let mut times = vec![0.0];
    times.extend((1..=n).filter(|k| k % stride == 0 || *k == n).map(|k| k as f64 * h));
    let mut traj = evolve_to_times(rho0, gen, &times[1..], h)?;
    traj.times.insert(0, 0.0);
    traj.states.insert(0, rho0.clone());
    Ok(traj)
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`, computed on the support of `ρ`.
pub fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let (vals, vecs) = eigh(rho);
    let top = vals.iter().fold(0.0f64, |a, v| a.max(*v));
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 1e-12 * top).collect();
    let r = keep.len();
    if r == 0 {
        return 0.0;
    }
    // √ρ σ √ρ in the eigenbasis of ρ restricted to its support.
    let mut m = CMatrix::zeros(r, r);
    for (i, &ki) in keep.iter().enumerate() {
        let vi = vecs.column(ki);
        for (j, &kj) in keep.iter().enumerate() {
            let vj = vecs.column(kj);
            let elem = (vi.adjoint() * sigma * vj)[(0, 0)];
            m[(i, j)] = elem * c((vals[ki] * vals[kj]).sqrt());
        }
    }
    let (mvals, _) = eigh(&m);
    let mtop = mvals.iter().fold(0.0f64, |a, v| a.max(*v));
    let root: f64 = mvals.iter().filter(|&&v| v > 1e-14 * mtop).map(|v| v.sqrt()).sum();
    root * root
}

/// `t² Δ²G_eff` for the probe `(|ψ0⟩ + |ψ1⟩)/√2`.
pub fn qfi_analytic(code: &CodeSpace, g: &HermitianOperator, t: f64) -> Result<f64> {
    Ok(t * t * effective_generator(code, g)?.var)
}

/// Cramér–Rao bound `1/(k F_Q)`; infinite when `F_Q = 0`.
pub fn crlb(qfi: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("repetitions k must be at least 1".into()));
    }
    if qfi < 0.0 || !qfi.is_finite() {
        return Err(Error::InvalidParameter(format!("Fisher information must be finite and non-negative, got {qfi}")));
    }
    if qfi == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (k as f64 * qfi))
}

/// Fisher information of `ρ(θ)` from `ρ` and `∂ρ/∂θ` through the symmetric
/// logarithmic derivative: `½ Σ_ij |⟨i|∂ρ|j⟩|² / (λ_i + λ_j)`. Pairs outside
/// the numerical support of `ρ` are skipped.
pub fn qfi_sld(rho: &CMatrix, drho: &CMatrix) -> f64 {
    let (vals, vecs) = eigh(rho);
    let top = vals.iter().fold(0.0f64, |a, v| a.max(*v));
    let d = vecs.adjoint() * drho * &vecs;
    let mut total = 0.0;
    for i in 0..vals.len() {
        for j in 0..vals.len() {
            let s = vals[i].max(0.0) + vals[j].max(0.0);
            if s > 1e-12 * top {
                total += d[(i, j)].norm_sqr() / s;
            }
        }
    }
    0.5 * total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QfiMethod {
    Fidelity,
    Sld,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiEstimate {
    /// Best estimate: the fidelity route when it is resolvable, otherwise
    /// the derivative route.
    pub value: f64,
    pub method: QfiMethod,
    /// Richardson-extrapolated fidelity estimate.
    pub fidelity: f64,
    /// Fidelity estimate at `δ`.
    pub coarse: f64,
    /// Fidelity estimate at `δ/2`.
    pub fine: f64,
    /// Derivative-route estimate.
    pub sld: f64,
    /// `1 - F` at `δ/2` is above roundoff and the two fidelity estimates
    /// agree within 5 %.
    pub reliable: bool,
}

/// Smallest `1 - F` trusted by the fidelity route.
const INFIDELITY_FLOOR: f64 = 1e-11;

fn estimate(plus: &CMatrix, minus: &CMatrix, half_plus: &CMatrix, half_minus: &CMatrix, delta: f64) -> QfiEstimate {
    let inf_coarse = 1.0 - fidelity(plus, minus);
    let inf_fine = 1.0 - fidelity(half_plus, half_minus);
    let coarse = (inf_coarse / (4.0 * delta * delta)).max(0.0);
    let fine = (inf_fine / (delta * delta)).max(0.0);
    let richardson = ((4.0 * fine - coarse) / 3.0).max(0.0);
    let scale = richardson.max(coarse).max(1e-300);
    let reliable = inf_fine > INFIDELITY_FLOOR && (coarse - fine).abs() <= 0.05 * scale;

    // Central differences at δ and δ/2, one Richardson step.
    let d_coarse = (plus - minus) / c(2.0 * delta);
    let d_fine = (half_plus - half_minus) / c(delta);
    let drho = (d_fine * c(4.0) - d_coarse) / c(3.0);
    let rho = (half_plus + half_minus) * c(0.5);
    let sld = qfi_sld(&rho, &drho);

    let (value, method) = if reliable { (richardson, QfiMethod::Fidelity) } else { (sld, QfiMethod::Sld) };
    QfiEstimate {
        value,
        method,
        fidelity: richardson,
        coarse,
        fine,
        sld,
        reliable,
    }
}

/// A probe state, a dressed generator at `δω = 0` and the signal operator.
#[derive(Debug, Clone)]
pub struct Model {
    pub generator: Generator,
    pub signal: HermitianOperator,
    pub code: CodeSpace,
    pub hamiltonian: HermitianOperator,
    pub lindblads: LindbladSet,
}

impl Model {
    /// Builds the dressed jump operators from `hamiltonian` and the couplings.
    pub fn new(
        hamiltonian: HermitianOperator,
        couplings: &[HermitianOperator],
        spectrum: &BathSpectrum,
        signal: HermitianOperator,
        code: CodeSpace,
        gap_tol: Option<f64>,
    ) -> Result<Self> {
        let tol = gap_tol.unwrap_or_else(|| default_gap_tol(&hamiltonian));
        let lindblads = jump_operators(&hamiltonian, couplings, tol)?;
        let generator = Generator::new(&hamiltonian, &lindblads, spectrum)?;
        if signal.dim() != hamiltonian.dim() || code.total_dim() != hamiltonian.dim() {
            return Err(Error::DimensionMismatch {
                expected: hamiltonian.dim(),
                found: signal.dim().max(code.total_dim()),
            });
        }
        Ok(Model {
            generator,
            signal,
            code,
            hamiltonian,
            lindblads,
        })
    }

    pub fn from_config(cfg: &ModelConfig) -> Result<Self> {
        let spectrum = cfg.noise.spectrum()?;
        Self::new(
            cfg.hamiltonian.clone(),
            &cfg.noise.couplings,
            &spectrum,
            cfg.signal.clone(),
            cfg.code.clone(),
            cfg.gap_tol,
        )
    }

    pub fn probe(&self) -> CMatrix {
        let p = self.code.probe();
        let v = p.amplitudes();
        v * v.adjoint()
    }

    /// `|⟨ψ0|ρ|ψ1⟩|`.
    pub fn coherence(&self, rho: &CMatrix) -> f64 {
        let a = self.code.psi0().amplitudes();
        let b = self.code.psi1().amplitudes();
        a.dotc(&(rho * b)).norm()
    }

    pub fn default_delta(&self) -> f64 {
        let n = self.signal.op_norm();
        if n > 0.0 {
            1e-4 / n
        } else {
            1e-4
        }
    }

    pub fn default_dt(&self) -> f64 {
        // Cover the signal term as well, since it is added for the
        // finite-difference trajectories.
        let d = default_dt(&self.generator);
        d.min(1e-3 / self.signal.op_norm().max(1e-300)).max(1e-7)
    }

    /// States at `times` for the signal offset `delta_omega`.
    pub fn evolve_at(&self, delta_omega: f64, times: &[f64], dt: f64) -> Result<Trajectory> {
        let gen = self.generator.with_signal(&self.signal, delta_omega);
        evolve_to_times(&self.probe(), &gen, times, dt)
    }

    /// Finite-difference Fisher information on a time grid, with one
    /// Richardson step over `δ, δ/2`. Falls back to the derivative route
    /// where `1 - F` drowns in roundoff (strongly decohered states).
    pub fn qfi_numeric(&self, times: &[f64], delta: f64, dt: f64) -> Result<Vec<QfiEstimate>> {
        let offsets = [delta, -delta, 0.5 * delta, -0.5 * delta];
        let runs: Vec<Result<Trajectory>> = offsets.par_iter().map(|&d| self.evolve_at(d, times, dt)).collect();
        let runs: Vec<Trajectory> = runs.into_iter().collect::<Result<_>>()?;
        Ok((0..times.len())
            .map(|k| estimate(&runs[0].states[k], &runs[1].states[k], &runs[2].states[k], &runs[3].states[k], delta))
            .collect())
    }
}

/// Model file: dressed Hamiltonian, signal generator, noise and code.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hamiltonian: HermitianOperator,
    pub signal: HermitianOperator,
    pub noise: NoiseModelConfig,
    pub code: CodeSpace,
    #[serde(default)]
    pub gap_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub t: f64,
    pub qfi_protected: f64,
    pub qfi_unprotected: f64,
    /// `|ρ_01|` of the protected model in its code basis.
    pub coherence: f64,
    /// `1/F_Q` of the protected model (single repetition).
    pub crlb: f64,
}

/// Parses `"start:stop:count"` with an optional `log` suffix on the count,
/// e.g. `"0.1:20:40log"`.
pub fn parse_tgrid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("time grid '{spec}' is not start:stop:count[log]"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let (count, log) = match parts[2].trim().strip_suffix("log") {
        Some(n) => (n, true),
        None => (parts[2].trim(), false),
    };
    let count: usize = count.parse().map_err(|_| bad())?;
    if count < 2 || !(start > 0.0 || (!log && start >= 0.0)) || stop <= start {
        return Err(bad());
    }
    let frac = |k: usize| k as f64 / (count - 1) as f64;
    Ok((0..count)
        .map(|k| {
            if log {
                start * (stop / start).powf(frac(k))
            } else {
                start + (stop - start) * frac(k)
            }
        })
        .collect())
}

/// Numeric Fisher information of both models on a common grid.
pub fn scaling_sweep(protected: &Model, unprotected: &Model, times: &[f64]) -> Result<Vec<ScalingRecord>> {
    let delta_p = protected.default_delta();
    let delta_u = unprotected.default_delta();
    let dt_p = protected.default_dt();
    let dt_u = unprotected.default_dt();
    let (p, u) = rayon::join(
        || protected.qfi_numeric(times, delta_p, dt_p),
        || unprotected.qfi_numeric(times, delta_u, dt_u),
    );
    let (p, u) = (p?, u?);
    let base = protected.evolve_at(0.0, times, dt_p)?;
    times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            Ok(ScalingRecord {
                t,
                qfi_protected: p[k].value,
                qfi_unprotected: u[k].value,
                coherence: protected.coherence(&base.states[k]),
                crlb: crlb(p[k].value, 1)?,
            })
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidParameter("need at least two positive points for a slope".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeakageReport {
    /// `δω ‖ψ_n^(1)‖` per eigenstate, in ascending energy order.
    pub corrections: Vec<f64>,
    /// `max |δω ⟨ψ_m|G|ψ_n⟩ / (μ_n - μ_m)|`.
    pub max_ratio: f64,
    /// Offsets used for the exact-diagonalization check.
    pub offsets: Vec<f64>,
    /// Largest eigenvector error of the first-order prediction at each offset.
    pub residuals: Vec<f64>,
    /// Fitted order of the residual; `None` when the residuals are at
    /// roundoff level (commuting generator).
    pub exponent: Option<f64>,
}

/// First-order eigenvector corrections of `h0 + δω g`, checked against exact
/// diagonalization at `δω`, `δω/2`, `δω/4`.
pub fn perturbation_leakage(h0: &HermitianOperator, g: &HermitianOperator, delta_omega: f64) -> Result<LeakageReport> {
    if h0.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            found: g.dim(),
        });
    }
    let (mu, vecs) = h0.eigh();
    let d = mu.len();
    let tol = default_gap_tol(h0);
    for w in mu.windows(2) {
        if w[1] - w[0] < tol {
            return Err(Error::DegenerateSpectrum { gap: w[1] - w[0] });
        }
    }
    let gm = vecs.adjoint() * g.matrix() * &vecs;
    let mut first = Vec::with_capacity(d);
    let mut max_ratio = 0.0f64;
    for n in 0..d {
        let mut v = CMatrix::zeros(d, 1);
        for m in 0..d {
            if m != n {
                let coef = gm[(m, n)] / c(mu[n] - mu[m]);
                max_ratio = max_ratio.max((coef * delta_omega).norm());
                v[(m, 0)] = coef;
            }
        }
        // Back to the original basis.
        first.push(&vecs * v);
    }
    let corrections = first.iter().map(|v| delta_omega * v.norm()).collect();

    let offsets = vec![delta_omega, 0.5 * delta_omega, 0.25 * delta_omega];
    let mut residuals = Vec::with_capacity(3);
    for &dw in &offsets {
        let h = h0.matrix() + g.matrix() * c(dw);
        let (_, exact) = eigh(&h);
        let mut worst = 0.0f64;
        for n in 0..d {
            let base = vecs.column(n);
            // Match by largest overlap, then align the phase.
            let (mut best, mut best_k) = (-1.0, 0);
            for k in 0..d {
                let o = base.dotc(&exact.column(k)).norm();
                if o > best {
                    best = o;
                    best_k = k;
                }
            }
            let col = exact.column(best_k);
            let ov = base.dotc(&col);
            let aligned = col * (ov.conj() / ov.norm());
            let predicted = base + first[n].column(0) * c(dw);
            worst = worst.max((aligned - predicted).norm());
        }
        residuals.push(worst);
    }
    let exponent = if residuals.iter().all(|r| *r > 1e-13) {
        let xs: Vec<f64> = offsets.iter().map(|x| x.abs()).collect();
        Some(loglog_slope(&xs, &residuals)?)
    } else {
        None
    };
    Ok(LeakageReport {
        corrections,
        max_ratio,
        offsets,
        residuals,
        exponent,
    })
}

/// Pure state `|ψ⟩⟨ψ|`.
pub fn pure(state: &StateVector) -> CMatrix {
    let v = state.amplitudes();
    v * v.adjoint()
}

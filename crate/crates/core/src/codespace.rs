//! Two-dimensional code spaces: construction, verification and search.
//!
//! A code is an orthonormal pair `|ψ0⟩, |ψ1⟩` on `system ⊗ ancilla`, with
//! the system index major (`index = s · anc_dim + a`). Operators given on the
//! system alone are lifted to `A ⊗ 1` automatically.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{LindbladSet, Transition};
use crate::operator::{c, eigh, lift, matrix_element, CMatrix, CVector, HermitianOperator, StateVector, C64};
use crate::random::{complex_gaussian, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodeSpaceJson", into = "CodeSpaceJson")]
pub struct CodeSpace {
    psi0: StateVector,
    psi1: StateVector,
    sys_dim: usize,
    anc_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct CodeSpaceJson {
    sys_dim: usize,
    anc_dim: usize,
    psi0: StateVector,
    psi1: StateVector,
}

impl TryFrom<CodeSpaceJson> for CodeSpace {
    type Error = Error;

    fn try_from(raw: CodeSpaceJson) -> Result<Self> {
        CodeSpace::new(raw.psi0, raw.psi1, raw.sys_dim, raw.anc_dim)
    }
}

impl From<CodeSpace> for CodeSpaceJson {
    fn from(code: CodeSpace) -> Self {
        CodeSpaceJson {
            sys_dim: code.sys_dim,
            anc_dim: code.anc_dim,
            psi0: code.psi0,
            psi1: code.psi1,
        }
    }
}

impl CodeSpace {
    pub fn new(psi0: StateVector, psi1: StateVector, sys_dim: usize, anc_dim: usize) -> Result<Self> {
        let total = sys_dim * anc_dim;
        for psi in [&psi0, &psi1] {
            if psi.dim() != total {
                return Err(Error::DimensionMismatch {
                    expected: total,
                    found: psi.dim(),
                });
            }
        }
        let overlap = psi0.inner(&psi1).norm();
        if overlap > 1e-12 {
            return Err(Error::NotOrthogonal { overlap });
        }
        Ok(CodeSpace {
            psi0,
            psi1,
            sys_dim,
            anc_dim,
        })
    }

    /// A code on the system alone (trivial ancilla).
    pub fn without_ancilla(psi0: StateVector, psi1: StateVector) -> Result<Self> {
        let d = psi0.dim();
        Self::new(psi0, psi1, d, 1)
    }

    pub fn psi0(&self) -> &StateVector {
        &self.psi0
    }

    pub fn psi1(&self) -> &StateVector {
        &self.psi1
    }

    pub fn state(&self, i: usize) -> &StateVector {
        if i == 0 {
            &self.psi0
        } else {
            &self.psi1
        }
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn anc_dim(&self) -> usize {
        self.anc_dim
    }

    pub fn total_dim(&self) -> usize {
        self.sys_dim * self.anc_dim
    }

    /// `Π_C = |ψ0⟩⟨ψ0| + |ψ1⟩⟨ψ1|`.
    pub fn projector(&self) -> CMatrix {
        let a = self.psi0.amplitudes();
        let b = self.psi1.amplitudes();
        a * a.adjoint() + b * b.adjoint()
    }

    pub fn complement_projector(&self) -> CMatrix {
        let n = self.total_dim();
        CMatrix::identity(n, n) - self.projector()
    }

    /// `(|ψ0⟩ + |ψ1⟩)/√2`, the probe state.
    pub fn probe(&self) -> StateVector {
        StateVector::equal_superposition(&self.psi0, &self.psi1).expect("orthonormal pair")
    }

    /// Reduced system state of `|ψ_i⟩`.
    pub fn reduced(&self, i: usize) -> CMatrix {
        partial_trace_ancilla(self.state(i).amplitudes(), self.sys_dim, self.anc_dim)
    }

    /// Brings a system or full-space operator to the full space.
    pub fn embed(&self, m: &CMatrix) -> Result<CMatrix> {
        let n = m.nrows();
        if n == self.total_dim() && m.ncols() == n {
            Ok(m.clone())
        } else if n == self.sys_dim && m.ncols() == n {
            Ok(lift(m, self.anc_dim))
        } else {
            Err(Error::DimensionMismatch {
                expected: self.total_dim(),
                found: n,
            })
        }
    }

    /// `⟨ψ_i|m|ψ_j⟩` with `m` embedded.
    pub fn element(&self, i: usize, m: &CMatrix, j: usize) -> Result<C64> {
        Ok(matrix_element(self.state(i), &self.embed(m)?, self.state(j)))
    }
}

/// `tr_A |ψ⟩⟨ψ|` for `ψ` on `system ⊗ ancilla`.
pub fn partial_trace_ancilla(psi: &CVector, sys_dim: usize, anc_dim: usize) -> CMatrix {
    CMatrix::from_fn(sys_dim, sys_dim, |s, t| {
        (0..anc_dim)
            .map(|a| psi[s * anc_dim + a] * psi[t * anc_dim + a].conj())
            .sum()
    })
}

fn check_density(rho: &HermitianOperator, name: &str) -> Result<()> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidDensity(format!("{name} has trace {tr}")));
    }
    let min = rho.eigenvalues()[0];
    if min < -1e-10 {
        return Err(Error::InvalidDensity(format!("{name} has negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

/// Purifies `ρ0`, `ρ1` onto orthogonal halves of an ancilla of dimension
/// `2 max(rank ρ0, rank ρ1)`.
pub fn purify_pair(rho0: &HermitianOperator, rho1: &HermitianOperator) -> Result<CodeSpace> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho0.dim(),
            found: rho1.dim(),
        });
    }
    check_density(rho0, "rho0")?;
    check_density(rho1, "rho1")?;
    let d = rho0.dim();
    let spectra = [rho0.eigh(), rho1.eigh()];
    let support = |vals: &[f64]| -> Vec<usize> { (0..vals.len()).rev().filter(|&k| vals[k] > 1e-12).collect() };
    let supports = [support(&spectra[0].0), support(&spectra[1].0)];
    let half = supports[0].len().max(supports[1].len());
    let anc = 2 * half;

    let mut states = Vec::with_capacity(2);
    for (side, ((vals, vecs), keep)) in spectra.iter().zip(&supports).enumerate() {
        let mut psi = CVector::zeros(d * anc);
        for (slot, &k) in keep.iter().enumerate() {
            let a = side * half + slot;
            let amp = vals[k].sqrt();
            for s in 0..d {
                psi[s * anc + a] += vecs[(s, k)] * amp;
            }
        }
        states.push(StateVector::normalized(psi)?);
    }
    let psi1 = states.pop().expect("two states");
    let psi0 = states.pop().expect("two states");
    CodeSpace::new(psi0, psi1, d, anc)
}

/// Deviation of `Π M Π` from a multiple of `Π`, in Frobenius norm.
pub fn proportionality_violation(code: &CodeSpace, m: &CMatrix) -> Result<f64> {
    let m = code.embed(m)?;
    let e = |i: usize, j: usize| matrix_element(code.state(i), &m, code.state(j));
    let diff = e(0, 0) - e(1, 1);
    Ok((0.5 * diff.norm_sqr() + e(0, 1).norm_sqr() + e(1, 0).norm_sqr()).sqrt())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `max_α |⟨ψ0|A_α|ψ0⟩ - ⟨ψ1|A_α|ψ1⟩|`.
    pub dephasing_violation: f64,
    /// `max_α |⟨ψ0|A_α|ψ1⟩|`.
    pub relaxation_violation: f64,
    /// `max |⟨ψ_i|A_α|ψ_{0/1}⟩|` over eigenstates outside the code; `None`
    /// when no eigenbasis was supplied.
    pub excitation_violation: Option<f64>,
    /// Largest deviation of `Π M Π` from `∝ Π` over `M ∈ {A_α, A_α A_β}`.
    pub kl_violation: f64,
    /// `⟨ψ1|G|ψ1⟩ - ⟨ψ0|G|ψ0⟩`.
    pub signal: f64,
}

impl ConditionReport {
    /// Decoherence-free against dephasing and relaxation at tolerance `tol`.
    pub fn decoherence_free(&self, tol: f64) -> bool {
        self.dephasing_violation < tol && self.relaxation_violation < tol
    }
}

/// Evaluates every code condition. `others` lists the remaining eigenstates
/// of the dressed Hamiltonian, needed only for the excitation condition.
pub fn check_conditions(
    code: &CodeSpace,
    g: &HermitianOperator,
    couplings: &[HermitianOperator],
    others: Option<&[StateVector]>,
) -> Result<ConditionReport> {
    let lifted: Vec<CMatrix> = couplings.iter().map(|a| code.embed(a.matrix())).collect::<Result<_>>()?;
    let mut dephasing = 0.0f64;
    let mut relaxation = 0.0f64;
    for a in &lifted {
        let d = matrix_element(&code.psi0, a, &code.psi0) - matrix_element(&code.psi1, a, &code.psi1);
        dephasing = dephasing.max(d.norm());
        relaxation = relaxation.max(matrix_element(&code.psi0, a, &code.psi1).norm());
    }

    let excitation = match others {
        None => None,
        Some(states) => {
            let mut worst = 0.0f64;
            for s in states {
                if s.dim() != code.total_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: code.total_dim(),
                        found: s.dim(),
                    });
                }
                for a in &lifted {
                    for i in 0..2 {
                        worst = worst.max(matrix_element(s, a, code.state(i)).norm());
                    }
                }
            }
            Some(worst)
        }
    };

    let mut kl = 0.0f64;
    for a in &lifted {
        kl = kl.max(proportionality_violation(code, a)?);
        for b in &lifted {
            kl = kl.max(proportionality_violation(code, &(a * b))?);
        }
    }

    Ok(ConditionReport {
        dephasing_violation: dephasing,
        relaxation_violation: relaxation,
        excitation_violation: excitation,
        kl_violation: kl,
        signal: effective_generator(code, g)?.delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveGenerator {
    pub g00: f64,
    pub g11: f64,
    /// `g11 - g00`.
    pub delta: f64,
    /// Variance of the code-restricted generator on the probe, `delta² / 4`.
    pub var: f64,
}

pub fn effective_generator(code: &CodeSpace, g: &HermitianOperator) -> Result<EffectiveGenerator> {
    let m = code.embed(g.matrix())?;
    let g00 = matrix_element(&code.psi0, &m, &code.psi0).re;
    let g11 = matrix_element(&code.psi1, &m, &code.psi1).re;
    let delta = g11 - g00;
    Ok(EffectiveGenerator {
        g00,
        g11,
        delta,
        var: delta * delta / 4.0,
    })
}

/// Control field making `ψ0`, `ψ1` eigenstates of `h_free + H_C` with
/// energies `λ0`, `λ1`, and the complement at `λ⊥`.
pub fn control_hamiltonian_with_complement(
    code: &CodeSpace,
    h_free: &HermitianOperator,
    lambda0: f64,
    lambda1: f64,
    lambda_perp: f64,
) -> Result<HermitianOperator> {
    if lambda0 == lambda1 || lambda_perp == lambda0 || lambda_perp == lambda1 {
        return Err(Error::DegenerateEnergies(format!(
            "code energies ({lambda0}, {lambda1}) and complement {lambda_perp} must be distinct"
        )));
    }
    let h = code.embed(h_free.matrix())?;
    let p0 = {
        let a = code.psi0.amplitudes();
        a * a.adjoint()
    };
    let p1 = {
        let b = code.psi1.amplitudes();
        b * b.adjoint()
    };
    let perp = code.complement_projector();
    let h_c = -&h + &p0 * c(lambda0) + &p1 * c(lambda1) + &perp * c(lambda_perp);
    let h_c = HermitianOperator::hermitian_part(&h_c);

    let total = &h + h_c.matrix();
    for (psi, lambda) in [(&code.psi0, lambda0), (&code.psi1, lambda1)] {
        let r = (&total * psi.amplitudes() - psi.amplitudes() * c(lambda)).norm();
        if r > 1e-10 * (1.0 + lambda.abs()) {
            return Err(Error::Numerical(format!("eigenvector residual {r:.3e}")));
        }
    }
    Ok(h_c)
}

/// As [`control_hamiltonian_with_complement`] with the complement at 0, or
/// at `10 max(|λ0|, |λ1|)` when one code energy is itself 0.
pub fn control_hamiltonian(code: &CodeSpace, h_free: &HermitianOperator, lambda0: f64, lambda1: f64) -> Result<HermitianOperator> {
    let perp = if lambda0 == 0.0 || lambda1 == 0.0 {
        10.0 * lambda0.abs().max(lambda1.abs())
    } else {
        0.0
    };
    control_hamiltonian_with_complement(code, h_free, lambda0, lambda1, perp)
}

/// Hamiltonian with exactly two eigenspaces, `C` at 0 and `C⊥` at `ν0`, and
/// the corresponding jump operators.
#[derive(Debug, Clone)]
pub struct TwoLevelDressing {
    pub h_c: HermitianOperator,
    pub lindblads: LindbladSet,
}

pub fn two_level_dressing(code: &CodeSpace, couplings: &[HermitianOperator], nu0: f64) -> Result<TwoLevelDressing> {
    if !(nu0 > 0.0) {
        return Err(Error::InvalidParameter(format!("nu0 must be positive, got {nu0}")));
    }
    let pc = code.projector();
    let pp = code.complement_projector();
    let h_c = HermitianOperator::hermitian_part(&(&pp * c(nu0)));

    let mut down = Vec::new();
    let mut zero = Vec::new();
    let mut up = Vec::new();
    for a in couplings {
        let a = code.embed(a.matrix())?;
        // L(ν) = Σ_{ε'-ε=ν} Π_ε A Π_ε'; C sits at 0 and C⊥ at ν0.
        down.push(&pp * &a * &pc);
        zero.push(&pc * &a * &pc + &pp * &a * &pp);
        up.push(&pc * &a * &pp);
    }
    let lindblads = LindbladSet::new(
        code.total_dim(),
        couplings.len(),
        vec![
            Transition { nu: -nu0, ops: down },
            Transition { nu: 0.0, ops: zero },
            Transition { nu: nu0, ops: up },
        ],
    )?;
    Ok(TwoLevelDressing { h_c, lindblads })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KlReport {
    pub ok: bool,
    pub kl_violation: f64,
}

/// Knill–Laflamme check for `{L}` and all products `L† L'`.
pub fn verify_knill_laflamme(code: &CodeSpace, lindblads: &[CMatrix], tol: f64) -> Result<KlReport> {
    let lifted: Vec<CMatrix> = lindblads.iter().map(|l| code.embed(l)).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for l in &lifted {
        worst = worst.max(proportionality_violation(code, l)?);
        let ld = l.adjoint();
        for m in &lifted {
            worst = worst.max(proportionality_violation(code, &(&ld * m))?);
        }
    }
    Ok(KlReport {
        ok: worst < tol,
        kl_violation: worst,
    })
}

/// Objective for code searches over orthonormal pairs:
/// `Σ_M (|m00 - m11|² + |m01|² + |m10|²)` over the operators `M`, plus an
/// optional penalty `w · max(0, s² - Δ²)²` pushing the signal `Δ = g11 - g00`
/// above `s`.
#[derive(Debug, Clone)]
pub struct CodeObjective {
    pub ops: Vec<CMatrix>,
    pub signal: Option<SignalTarget>,
}

#[derive(Debug, Clone)]
pub struct SignalTarget {
    pub g: CMatrix,
    pub min_signal: f64,
    pub weight: f64,
}

impl CodeObjective {
    pub fn dim(&self) -> Option<usize> {
        self.ops.first().map(|m| m.nrows()).or(self.signal.as_ref().map(|s| s.g.nrows()))
    }

    /// Value and Wirtinger gradients `∂f/∂ψ0*`, `∂f/∂ψ1*`.
    pub fn evaluate(&self, psi0: &CVector, psi1: &CVector) -> (f64, CVector, CVector) {
        let n = psi0.len();
        let mut f = 0.0;
        let mut g0 = CVector::zeros(n);
        let mut g1 = CVector::zeros(n);
        for m in &self.ops {
            let m0 = m * psi0;
            let m1 = m * psi1;
            let md = m.adjoint();
            let md0 = &md * psi0;
            let md1 = &md * psi1;
            let e00 = psi0.dotc(&m0);
            let e11 = psi1.dotc(&m1);
            let e01 = psi0.dotc(&m1);
            let e10 = psi1.dotc(&m0);
            let d = e00 - e11;
            f += d.norm_sqr() + e01.norm_sqr() + e10.norm_sqr();
            g0 += &m0 * d.conj() + &md0 * d + &m1 * e01.conj() + &md1 * e10;
            g1 += -(&m1 * d.conj()) - &md1 * d + &m0 * e10.conj() + &md0 * e01;
        }
        if let Some(t) = &self.signal {
            let gp0 = &t.g * psi0;
            let gp1 = &t.g * psi1;
            let delta = psi1.dotc(&gp1).re - psi0.dotc(&gp0).re;
            let short = t.min_signal * t.min_signal - delta * delta;
            if short > 0.0 {
                f += t.weight * short * short;
                let dfd = t.weight * 2.0 * short * (-2.0 * delta);
                g0 -= &gp0 * c(dfd);
                g1 += &gp1 * c(dfd);
            }
        }
        (f, g0, g1)
    }
}

fn retract(psi0: &CVector, psi1: &CVector) -> Option<(CVector, CVector)> {
    let n0 = psi0.norm();
    if n0 < 1e-300 {
        return None;
    }
    let a = psi0 / c(n0);
    let mut b = psi1 - &a * a.dotc(psi1);
    b -= &a * a.dotc(&b);
    let n1 = b.norm();
    if n1 < 1e-12 {
        return None;
    }
    Some((a, b / c(n1)))
}

/// Gradient descent from one starting pair with orthonormalizing retraction.
pub fn descend(objective: &CodeObjective, psi0: CVector, psi1: CVector, max_iter: usize) -> (f64, CVector, CVector) {
    let (mut x0, mut x1) = retract(&psi0, &psi1).expect("independent starting vectors");
    let (mut f, mut g0, mut g1) = objective.evaluate(&x0, &x1);
    let mut step = 0.1;
    for _ in 0..max_iter {
        if f < 1e-28 {
            break;
        }
        let gnorm2 = g0.norm_squared() + g1.norm_squared();
        if gnorm2 < 1e-30 {
            break;
        }
        let mut accepted = false;
        let mut trial_step = step;
        while trial_step > 1e-16 {
            if let Some((y0, y1)) = retract(&(&x0 - &g0 * c(trial_step)), &(&x1 - &g1 * c(trial_step))) {
                let (fy, h0, h1) = objective.evaluate(&y0, &y1);
                if fy <= f - 1e-4 * trial_step * gnorm2 {
                    let improvement = f - fy;
                    x0 = y0;
                    x1 = y1;
                    g0 = h0;
                    g1 = h1;
                    f = fy;
                    accepted = true;
                    step = trial_step * 2.0;
                    if improvement < 1e-15 * f.max(1e-300) {
                        return (f, x0, x1);
                    }
                    break;
                }
            }
            trial_step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (f, x0, x1)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    pub min_penalty: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Minimizer of the best restart.
    pub best: Option<CodeSpace>,
    /// Final penalty of every restart, in restart order.
    pub penalties: Vec<f64>,
}

/// Minimizes `objective` from `restarts` random orthonormal pairs. Restart
/// `k` draws from stream `k` of `seed`, so results do not depend on the
/// thread count.
pub fn search_codes(objective: &CodeObjective, sys_dim: usize, anc_dim: usize, restarts: usize, seed: u64) -> Result<SearchResult> {
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    let n = sys_dim * anc_dim;
    if let Some(d) = objective.dim() {
        if d != n {
            return Err(Error::DimensionMismatch { expected: n, found: d });
        }
    }
    if n < 2 {
        return Err(Error::InvalidParameter("a code needs at least two dimensions".into()));
    }
    let runs: Vec<(f64, CVector, CVector)> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k as u64);
            let v0 = CVector::from_fn(n, |_, _| complex_gaussian(&mut rng));
            let v1 = CVector::from_fn(n, |_, _| complex_gaussian(&mut rng));
            descend(objective, v0, v1, 5000)
        })
        .collect();
    let penalties: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let (best_idx, _) = penalties
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one restart");
    let (f, x0, x1) = &runs[best_idx];
    let best = CodeSpace::new(
        StateVector::normalized(x0.clone())?,
        StateVector::normalized(x1.clone())?,
        sys_dim,
        anc_dim,
    )
    .ok();
    Ok(SearchResult {
        min_penalty: *f,
        restarts,
        seed,
        best,
        penalties,
    })
}

/// Searches for a pair with `⟨ψ0|A|ψ0⟩ = ⟨ψ1|A|ψ1⟩` and `⟨ψ0|A|ψ1⟩ = 0` for
/// every coupling. The penalty is
/// `Σ_α |⟨ψ0|A_α|ψ0⟩ - ⟨ψ1|A_α|ψ1⟩|² + 2 |⟨ψ0|A_α|ψ1⟩|²`.
pub fn no_go_search(couplings: &[HermitianOperator], sys_dim: usize, restarts: usize, seed: u64) -> Result<SearchResult> {
    let mut ops = Vec::with_capacity(couplings.len());
    for a in couplings {
        if a.dim() != sys_dim {
            return Err(Error::DimensionMismatch {
                expected: sys_dim,
                found: a.dim(),
            });
        }
        ops.push(a.matrix().clone());
    }
    let objective = CodeObjective { ops, signal: None };
    search_codes(&objective, sys_dim, 1, restarts, seed)
}

/// Eigenstates of `h` not in the code, for the excitation condition.
pub fn complement_eigenstates(h: &HermitianOperator, code: &CodeSpace) -> Result<Vec<StateVector>> {
    let h = code.embed(h.matrix())?;
    let (_, vecs) = eigh(&h);
    let pc = code.projector();
    let mut out = Vec::new();
    for k in 0..vecs.ncols() {
        let v: CVector = vecs.column(k).into_owned();
        if (&pc * &v).norm() < 0.5 {
            out.push(StateVector::normalized(v)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::thm2_condition;
    use crate::operator::{pauli, spin1};
    use approx::assert_abs_diff_eq;

    fn ket(d: usize, amps: &[(usize, f64)]) -> StateVector {
        let mut v = CVector::zeros(d);
        for &(i, a) in amps {
            v[i] = c(a);
        }
        StateVector::normalized(v).unwrap()
    }

    fn psi_minus() -> StateVector {
        ket(3, &[(0, 1.0), (2, -1.0)])
    }

    fn nv_ancilla_code() -> CodeSpace {
        let up = StateVector::basis(2, 0);
        let down = StateVector::basis(2, 1);
        CodeSpace::new(StateVector::basis(3, 1).tensor(&down), psi_minus().tensor(&up), 3, 2).unwrap()
    }

    #[test]
    fn rejects_non_orthogonal_pair() {
        let a = ket(2, &[(0, 1.0)]);
        let b = ket(2, &[(0, 1.0), (1, 1.0)]);
        assert!(matches!(CodeSpace::without_ancilla(a, b), Err(Error::NotOrthogonal { .. })));
    }

    #[test]
    fn purify_pure_states() {
        let rho0 = HermitianOperator::diagonal(&[1.0, 0.0, 0.0]);
        let rho1 = HermitianOperator::diagonal(&[0.0, 1.0, 0.0]);
        let code = purify_pair(&rho0, &rho1).unwrap();
        assert_eq!(code.anc_dim(), 2);
        assert!((code.reduced(0) - rho0.matrix()).norm() < 1e-12);
        assert!((code.reduced(1) - rho1.matrix()).norm() < 1e-12);
    }

    #[test]
    fn purify_nv_mixed_state() {
        let rho0 = HermitianOperator::diagonal(&[0.0, 1.0, 0.0]);
        let rho1 = HermitianOperator::diagonal(&[0.5, 0.0, 0.5]);
        let code = purify_pair(&rho0, &rho1).unwrap();
        assert_eq!(code.anc_dim(), 4);
        assert!((code.reduced(1) - rho1.matrix()).norm() < 1e-12);
        let s = spin1();
        let r = check_conditions(&code, &s[2].square(), &s, None).unwrap();
        assert!(r.dephasing_violation < 1e-12);
        assert!(r.relaxation_violation < 1e-12);
        assert_abs_diff_eq!(r.signal, 1.0, epsilon = 1e-12);
        assert!(r.excitation_violation.is_none());
    }

    #[test]
    fn purify_identical_mixed_states() {
        let half = HermitianOperator::diagonal(&[0.5, 0.5]);
        let code = purify_pair(&half, &half).unwrap();
        assert_eq!(code.anc_dim(), 4);
        assert!((code.reduced(0) - half.matrix()).norm() < 1e-12);
        let r = check_conditions(&code, &pauli()[2], &pauli(), None).unwrap();
        assert!(r.relaxation_violation < 1e-12);
    }

    #[test]
    fn purify_rejects_bad_input() {
        let bad = HermitianOperator::diagonal(&[1.5, -0.5]);
        let ok = HermitianOperator::diagonal(&[1.0, 0.0]);
        assert!(purify_pair(&bad, &ok).is_err());
        assert!(purify_pair(&ok, &HermitianOperator::diagonal(&[0.3, 0.3])).is_err());
    }

    #[test]
    fn nv_codes() {
        let s = spin1();
        let g = s[2].square();
        let r = check_conditions(&nv_ancilla_code(), &g, &s, None).unwrap();
        assert!(r.dephasing_violation < 1e-12);
        assert!(r.relaxation_violation < 1e-12);
        assert_abs_diff_eq!(r.signal, 1.0, epsilon = 1e-12);

        let bare = CodeSpace::without_ancilla(StateVector::basis(3, 1), psi_minus()).unwrap();
        let r = check_conditions(&bare, &g, &s, None).unwrap();
        assert!(r.dephasing_violation < 1e-12);
        // ⟨0|S_y|ψ-⟩ has modulus 1; S_x gives 1/√2.
        assert_abs_diff_eq!(r.relaxation_violation, 1.0, epsilon = 1e-12);
        let sx = bare.element(0, s[0].matrix(), 1).unwrap().norm();
        assert_abs_diff_eq!(sx, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_code_has_no_violations() {
        let rho0 = HermitianOperator::diagonal(&[0.2, 0.8]);
        let rho1 = HermitianOperator::diagonal(&[0.6, 0.4]);
        let code = purify_pair(&rho0, &rho1).unwrap();
        let r = check_conditions(&code, &pauli()[2], &[], Some(&[])).unwrap();
        assert_eq!(r.dephasing_violation, 0.0);
        assert_eq!(r.relaxation_violation, 0.0);
        assert_eq!(r.kl_violation, 0.0);
        assert_eq!(r.excitation_violation, Some(0.0));
    }

    #[test]
    fn effective_generator_examples() {
        let s = spin1();
        let e = effective_generator(&nv_ancilla_code(), &s[2].square()).unwrap();
        assert_abs_diff_eq!(e.delta, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.var, 0.25, epsilon = 1e-14);
        let e = effective_generator(&nv_ancilla_code(), &HermitianOperator::identity(3)).unwrap();
        assert_abs_diff_eq!(e.delta, 0.0, epsilon = 1e-14);
        let qubit = CodeSpace::without_ancilla(StateVector::basis(2, 0), StateVector::basis(2, 1)).unwrap();
        let e = effective_generator(&qubit, &pauli()[2]).unwrap();
        assert_abs_diff_eq!(e.delta, -2.0);
        assert_abs_diff_eq!(e.var, 1.0);
    }

    #[test]
    fn control_hamiltonian_spectrum() {
        let code = CodeSpace::without_ancilla(StateVector::basis(3, 0), StateVector::basis(3, 1)).unwrap();
        let h_c = control_hamiltonian(&code, &HermitianOperator::zeros(3), -1.0, 1.0).unwrap();
        let vals = h_c.eigenvalues();
        for (v, want) in vals.iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*v, want, epsilon = 1e-12);
        }

        let s = spin1();
        let h_free = s[2].square();
        let nv = CodeSpace::without_ancilla(StateVector::basis(3, 1), psi_minus()).unwrap();
        let h_c = control_hamiltonian(&nv, &h_free, 0.0, 1.0).unwrap();
        let total = &h_free + &h_c;
        let mut vals = total.eigenvalues();
        vals.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(vals[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[2], 10.0, epsilon = 1e-12);

        assert!(matches!(
            control_hamiltonian(&nv, &h_free, 2.0, 2.0),
            Err(Error::DegenerateEnergies(_))
        ));
    }

    #[test]
    fn control_with_noncommuting_free_part() {
        let mut rng = crate::random::stream(1, 0);
        let h_free = crate::random::hermitian(&mut rng, 4);
        let a = crate::random::state(&mut rng, 4);
        let mut b = crate::random::state(&mut rng, 4).amplitudes().clone();
        b -= a.amplitudes() * a.amplitudes().dotc(&b);
        let code = CodeSpace::without_ancilla(a, StateVector::normalized(b).unwrap()).unwrap();
        let h_c = control_hamiltonian(&code, &h_free, 0.5, -0.7).unwrap();
        let mut vals = (&h_free + &h_c).eigenvalues();
        vals.sort_by(f64::total_cmp);
        for (v, want) in vals.iter().zip([-0.7, 0.0, 0.0, 0.5]) {
            assert_abs_diff_eq!(*v, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_level_structure() {
        let code = CodeSpace::without_ancilla(StateVector::basis(3, 0), StateVector::basis(3, 1)).unwrap();
        let mut x = CMatrix::zeros(3, 3);
        x[(1, 2)] = c(1.0);
        x[(2, 1)] = c(1.0);
        let a = HermitianOperator::new(x).unwrap();
        let dressing = two_level_dressing(&code, &[a.clone()], 5.0).unwrap();
        let want = HermitianOperator::diagonal(&[0.0, 0.0, 5.0]);
        assert!((dressing.h_c.matrix() - want.matrix()).norm() < 1e-14);
        let set = &dressing.lindblads;
        assert!(set.at(0.0, 1e-12).unwrap().ops[0].norm() < 1e-14);
        assert!(set.completeness_error(&[a]) < 1e-14);
        assert!(set.adjoint_error(1e-12) < 1e-14);
        // L(-ν0) = Π⊥ A Π_C takes |1⟩ to |2⟩.
        assert_abs_diff_eq!(set.at(-5.0, 1e-12).unwrap().ops[0][(2, 1)].re, 1.0);
    }

    #[test]
    fn two_level_matches_grouped_decomposition() {
        let s = spin1();
        let code = nv_ancilla_code();
        let couplings: Vec<HermitianOperator> = s.iter().map(|a| a.lift(2)).collect();
        let dressing = two_level_dressing(&code, &couplings, 3.0).unwrap();
        let generic = crate::lindblad::jump_operators(&dressing.h_c, &couplings, 1e-9).unwrap();
        for t in &dressing.lindblads.transitions {
            let other = generic.at(t.nu, 1e-9).unwrap();
            for (a, b) in t.ops.iter().zip(&other.ops) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn nv_ancilla_code_fails_kl_under_two_level_dressing() {
        let s = spin1();
        let g = s[2].square();
        assert!(!thm2_condition(&g, &s, &Default::default()).unwrap().verdict);
        let code = nv_ancilla_code();
        let dressing = two_level_dressing(&code, &s, 1.0).unwrap();
        let kl = verify_knill_laflamme(&code, &dressing.lindblads.operators(), 1e-9).unwrap();
        assert!(!kl.ok);
        assert!(kl.kl_violation > 0.1);
        assert!(verify_knill_laflamme(&code, &[], 1e-9).unwrap().ok);
    }

    #[test]
    fn bit_flip_code_corrects_single_flip() {
        let p = pauli();
        let id = CMatrix::identity(2, 2);
        let x1 = crate::operator::tensor(&crate::operator::tensor(p[0].matrix(), &id), &id);
        let code = CodeSpace::without_ancilla(StateVector::basis(8, 0), StateVector::basis(8, 7)).unwrap();
        let r = verify_knill_laflamme(&code, &[x1.clone()], 1e-9).unwrap();
        assert!(r.ok, "{}", r.kl_violation);
        let z1 = crate::operator::tensor(&crate::operator::tensor(p[2].matrix(), &id), &id);
        assert!(!verify_knill_laflamme(&code, &[x1, z1], 1e-9).unwrap().ok);
    }

    #[test]
    fn objective_gradient_matches_finite_differences() {
        let mut rng = crate::random::stream(2, 0);
        let ops = vec![crate::random::gaussian_matrix(&mut rng, 4), crate::random::hermitian(&mut rng, 4).into_matrix()];
        let obj = CodeObjective {
            ops,
            signal: Some(SignalTarget {
                g: crate::random::hermitian(&mut rng, 4).into_matrix(),
                min_signal: 3.0,
                weight: 0.7,
            }),
        };
        let x0 = CVector::from_fn(4, |_, _| complex_gaussian(&mut rng));
        let x1 = CVector::from_fn(4, |_, _| complex_gaussian(&mut rng));
        let (_, g0, g1) = obj.evaluate(&x0, &x1);
        let h = 1e-6;
        for k in 0..4 {
            for (which, grad) in [(0, &g0), (1, &g1)] {
                for dir in [c(1.0), C64::new(0.0, 1.0)] {
                    let mut p0 = x0.clone();
                    let mut p1 = x1.clone();
                    let mut m0 = x0.clone();
                    let mut m1 = x1.clone();
                    if which == 0 {
                        p0[k] += dir * h;
                        m0[k] -= dir * h;
                    } else {
                        p1[k] += dir * h;
                        m1[k] -= dir * h;
                    }
                    let fd = (obj.evaluate(&p0, &p1).0 - obj.evaluate(&m0, &m1).0) / (2.0 * h);
                    // df = 2 Re(conj(∂f/∂ψ*) dψ).
                    let want = 2.0 * (grad[k].conj() * dir).re;
                    assert!((fd - want).abs() < 1e-5 * (1.0 + want.abs()), "{fd} vs {want}");
                }
            }
        }
    }

    #[test]
    fn no_go_examples() {
        let s = spin1();
        let r = no_go_search(&[s[2].clone()], 3, 8, 1).unwrap();
        assert!(r.min_penalty < 1e-10, "{}", r.min_penalty);

        let lifted: Vec<HermitianOperator> = s.iter().map(|a| a.lift(2)).collect();
        let r = no_go_search(&lifted, 6, 16, 1).unwrap();
        assert!(r.min_penalty < 1e-10, "{}", r.min_penalty);

        let r = no_go_search(&s, 3, 20, 1).unwrap();
        assert!(r.min_penalty > 2.0 - 1e-9, "{}", r.min_penalty);
    }

    #[test]
    fn code_json_round_trip() {
        let code = nv_ancilla_code();
        let text = serde_json::to_string(&code).unwrap();
        let back: CodeSpace = serde_json::from_str(&text).unwrap();
        assert_eq!(back, code);
        let bad = text.replace("\"anc_dim\":2", "\"anc_dim\":3");
        assert!(serde_json::from_str::<CodeSpace>(&bad).is_err());
    }
}

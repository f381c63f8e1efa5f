//! Dressed jump operators and the GKSL generator.
//!
//! A coupling `A_α` is split along the eigenspaces of the system Hamiltonian:
//! `L_α(ν) = Σ_{ε'-ε=ν} Π_ε A_α Π_ε'`, so `L_α(ν)` lowers the energy by `ν`.
//! The dissipator is
//!
//! ```text
//! D[ρ] = Σ_ν Σ_{αβ} γ_αβ(ν) (L_β(ν) ρ L_α(ν)† - ½ {L_α(ν)† L_β(ν), ρ})
//! ```
//!
//! so a single Hermitian `L(0)` with rate `γ` damps `ρ_{mm'}` at
//! `γ (m - m')² / 2`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{c, eigh, CMatrix, HermitianOperator, C64, I};

/// One eigenvalue cluster of a Hamiltonian.
#[derive(Debug, Clone)]
pub struct EnergyGroup {
    pub energy: f64,
    pub projector: CMatrix,
    pub rank: usize,
}

/// Default binning tolerance: `1e-9 ‖h‖_op`, floored for `h = 0`.
pub fn default_gap_tol(h: &HermitianOperator) -> f64 {
    1e-9 * h.op_norm().max(1e-3)
}

/// Groups eigenvalues by single linkage at `gap_tol`.
pub fn eigendecompose_grouped(h: &HermitianOperator, gap_tol: f64) -> Result<Vec<EnergyGroup>> {
    if !(gap_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("gap_tol must be positive, got {gap_tol}")));
    }
    let (vals, vecs) = eigh(h.matrix());
    let d = vals.len();
    let mut groups = Vec::new();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && vals[end] - vals[end - 1] < gap_tol {
            end += 1;
        }
        let diameter = vals[end - 1] - vals[start];
        if diameter > 10.0 * gap_tol {
            return Err(Error::IllSeparatedSpectrum {
                diameter,
                limit: 10.0 * gap_tol,
            });
        }
        let mut projector = CMatrix::zeros(d, d);
        for k in start..end {
            let v = vecs.column(k);
            projector += v * v.adjoint();
        }
        let energy = vals[start..end].iter().sum::<f64>() / (end - start) as f64;
        groups.push(EnergyGroup {
            energy,
            projector,
            rank: end - start,
        });
        start = end;
    }
    Ok(groups)
}

/// Jump operators at one (binned) transition frequency, one per coupling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transition {
    pub nu: f64,
    #[serde(with = "crate::io::cmatrix_vec")]
    pub ops: Vec<CMatrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LindbladSet {
    pub dim: usize,
    pub n_couplings: usize,
    /// Sorted by increasing `nu`.
    pub transitions: Vec<Transition>,
}

impl LindbladSet {
    pub fn new(dim: usize, n_couplings: usize, mut transitions: Vec<Transition>) -> Result<Self> {
        for t in &transitions {
            if t.ops.len() != n_couplings {
                return Err(Error::DimensionMismatch {
                    expected: n_couplings,
                    found: t.ops.len(),
                });
            }
            for op in &t.ops {
                if op.nrows() != dim || op.ncols() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: op.nrows(),
                    });
                }
            }
        }
        transitions.sort_by(|a, b| a.nu.total_cmp(&b.nu));
        Ok(LindbladSet {
            dim,
            n_couplings,
            transitions,
        })
    }

    pub fn empty(dim: usize) -> Self {
        LindbladSet {
            dim,
            n_couplings: 0,
            transitions: Vec::new(),
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.transitions.iter().map(|t| t.nu).collect()
    }

    pub fn at(&self, nu: f64, tol: f64) -> Option<&Transition> {
        self.transitions.iter().find(|t| (t.nu - nu).abs() <= tol)
    }

    /// Every jump operator, flattened over frequencies and couplings.
    pub fn operators(&self) -> Vec<CMatrix> {
        self.transitions.iter().flat_map(|t| t.ops.iter().cloned()).collect()
    }

    /// Drops all transitions with `nu < 0` (thermal excitation).
    pub fn without_excitation(&self) -> Self {
        LindbladSet {
            dim: self.dim,
            n_couplings: self.n_couplings,
            transitions: self.transitions.iter().filter(|t| t.nu >= 0.0).cloned().collect(),
        }
    }

    /// `max_α ‖Σ_ν L_α(ν) - A_α‖_F`.
    pub fn completeness_error(&self, couplings: &[HermitianOperator]) -> f64 {
        let mut worst = 0.0f64;
        for (a_idx, a) in couplings.iter().enumerate() {
            let mut sum = -a.matrix().clone();
            for t in &self.transitions {
                if let Some(op) = t.ops.get(a_idx) {
                    sum += op;
                }
            }
            worst = worst.max(sum.norm());
        }
        worst
    }

    /// `max ‖L_α(ν)† - L_α(-ν)‖_F`, infinite when a partner frequency is missing.
    pub fn adjoint_error(&self, tol: f64) -> f64 {
        let mut worst = 0.0f64;
        for t in &self.transitions {
            let Some(partner) = self.at(-t.nu, tol) else {
                return f64::INFINITY;
            };
            for (a, b) in t.ops.iter().zip(&partner.ops) {
                worst = worst.max((a.adjoint() - b).norm());
            }
        }
        worst
    }
}

/// Frequency decomposition of every coupling in the eigenbasis of `h`.
pub fn jump_operators(h: &HermitianOperator, couplings: &[HermitianOperator], gap_tol: f64) -> Result<LindbladSet> {
    let d = h.dim();
    for a in couplings {
        if a.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: a.dim(),
            });
        }
    }
    let groups = eigendecompose_grouped(h, gap_tol)?;

    // Bin every gap ε' - ε by single linkage; the list is symmetric under
    // negation, so bins come in ± pairs.
    let mut gaps: Vec<(f64, usize, usize)> = Vec::new();
    for (i, gi) in groups.iter().enumerate() {
        for (j, gj) in groups.iter().enumerate() {
            gaps.push((gj.energy - gi.energy, i, j));
        }
    }
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut bins: Vec<Vec<(f64, usize, usize)>> = Vec::new();
    for g in gaps {
        match bins.last_mut() {
            Some(bin) if g.0 - bin.last().unwrap().0 < gap_tol => bin.push(g),
            _ => bins.push(vec![g]),
        }
    }

    let mut transitions = Vec::with_capacity(bins.len());
    for bin in bins {
        let mut nu = bin.iter().map(|g| g.0).sum::<f64>() / bin.len() as f64;
        if nu.abs() < gap_tol {
            nu = 0.0;
        }
        let ops = couplings
            .iter()
            .map(|a| {
                let mut l = CMatrix::zeros(d, d);
                for &(_, i, j) in &bin {
                    l += &groups[i].projector * a.matrix() * &groups[j].projector;
                }
                l
            })
            .collect();
        transitions.push(Transition { nu, ops });
    }
    LindbladSet::new(d, couplings.len(), transitions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Only `ν = 0` contributes.
    #[serde(alias = "dephasing")]
    DephasingOnly,
    /// Thermal excitation (`ν < 0`) is negligible.
    #[serde(alias = "relaxation")]
    LowTemperature,
    #[serde(alias = "thermal")]
    FullThermal,
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dephasing" | "dephasing_only" => Ok(Regime::DephasingOnly),
            "relaxation" | "low_temperature" => Ok(Regime::LowTemperature),
            "thermal" | "full_thermal" => Ok(Regime::FullThermal),
            other => Err(Error::InvalidParameter(format!("unknown regime '{other}'"))),
        }
    }
}

/// `ν ↦` matrix over coupling indices.
pub type SpectralFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

/// Bath rates `γ_αβ(ν)` and optional Lamb-shift coefficients `S_αβ(ν)`.
#[derive(Clone)]
pub struct BathSpectrum {
    pub regime: Regime,
    pub n_couplings: usize,
    gamma: SpectralFn,
    lamb: Option<SpectralFn>,
}

impl fmt::Debug for BathSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BathSpectrum")
            .field("regime", &self.regime)
            .field("n_couplings", &self.n_couplings)
            .field("lamb", &self.lamb.is_some())
            .finish()
    }
}

impl BathSpectrum {
    pub fn new(regime: Regime, n_couplings: usize, gamma: SpectralFn) -> Self {
        BathSpectrum {
            regime,
            n_couplings,
            gamma,
            lamb: None,
        }
    }

    pub fn with_lamb(mut self, lamb: SpectralFn) -> Self {
        self.lamb = Some(lamb);
        self
    }

    /// Uncorrelated couplings with a common scalar rate function.
    pub fn scalar(regime: Regime, n_couplings: usize, rate: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let gamma: SpectralFn = Arc::new(move |nu| CMatrix::identity(n_couplings, n_couplings) * c(rate(nu)));
        Self::new(regime, n_couplings, gamma)
    }

    /// `γ(ν) = g` for every frequency the regime admits.
    pub fn flat(regime: Regime, n_couplings: usize, g: f64) -> Self {
        Self::scalar(regime, n_couplings, move |_| g)
    }

    /// Rate `g` at `ν = 0` only.
    pub fn peak0(n_couplings: usize, g: f64) -> Self {
        Self::scalar(Regime::DephasingOnly, n_couplings, move |_| g)
    }

    /// Rates as the regime sees them: zero outside the admitted frequencies.
    pub fn rates(&self, nu: f64) -> CMatrix {
        let n = self.n_couplings;
        let admitted = match self.regime {
            Regime::DephasingOnly => nu == 0.0,
            Regime::LowTemperature => nu >= 0.0,
            Regime::FullThermal => true,
        };
        if admitted {
            (self.gamma)(nu)
        } else {
            CMatrix::zeros(n, n)
        }
    }

    pub fn lamb_coeffs(&self, nu: f64) -> Option<CMatrix> {
        self.lamb.as_ref().map(|f| f(nu))
    }

    fn checked_rates(&self, nu: f64) -> Result<CMatrix> {
        let g = self.rates(nu);
        if g.nrows() != self.n_couplings || g.ncols() != self.n_couplings {
            return Err(Error::DimensionMismatch {
                expected: self.n_couplings,
                found: g.nrows(),
            });
        }
        if g.nrows() > 0 {
            let (vals, _) = eigh(&g);
            let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            let min_eig = vals[0];
            if min_eig < -1e-12 * scale || crate::operator::hermitian_deviation(&g) > 1e-12 * scale {
                return Err(Error::RateNotPsd { nu, min_eig });
            }
        }
        Ok(g)
    }
}

fn check_set(lset: &LindbladSet, spectrum: &BathSpectrum) -> Result<()> {
    if lset.n_couplings != spectrum.n_couplings && !lset.transitions.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: lset.n_couplings,
            found: spectrum.n_couplings,
        });
    }
    Ok(())
}

/// Direct double sum over `α, β` for every frequency.
pub fn dissipator(rho: &CMatrix, lset: &LindbladSet, spectrum: &BathSpectrum) -> Result<CMatrix> {
    check_set(lset, spectrum)?;
    let d = rho.nrows();
    let mut out = CMatrix::zeros(d, d);
    for t in &lset.transitions {
        let gamma = spectrum.checked_rates(t.nu)?;
        for (a, la) in t.ops.iter().enumerate() {
            let la_dag = la.adjoint();
            for (b, lb) in t.ops.iter().enumerate() {
                let g = gamma[(a, b)];
                if g == C64::new(0.0, 0.0) {
                    continue;
                }
                let prod = &la_dag * lb;
                out += (lb * rho * &la_dag - (&prod * rho + rho * &prod) * c(0.5)) * g;
            }
        }
    }
    Ok(out)
}

/// `H_LS = Σ_ν Σ_αβ S_αβ(ν) L_α(ν)† L_β(ν)`; zero without Lamb coefficients.
pub fn lamb_shift(lset: &LindbladSet, spectrum: &BathSpectrum) -> Result<HermitianOperator> {
    check_set(lset, spectrum)?;
    let d = lset.dim;
    let mut out = CMatrix::zeros(d, d);
    for t in &lset.transitions {
        let Some(s) = spectrum.lamb_coeffs(t.nu) else {
            return Ok(HermitianOperator::zeros(d));
        };
        for (a, la) in t.ops.iter().enumerate() {
            for (b, lb) in t.ops.iter().enumerate() {
                out += la.adjoint() * lb * s[(a, b)];
            }
        }
    }
    HermitianOperator::with_tolerance(out, 1e-10)
}

/// `-i[H + H_LS, ρ] + D[ρ]`, evaluated from scratch.
pub fn gksl_rhs(rho: &CMatrix, h: &HermitianOperator, lset: &LindbladSet, spectrum: &BathSpectrum) -> Result<CMatrix> {
    let hl = lamb_shift(lset, spectrum)?;
    let htot = h.matrix() + hl.matrix();
    let unitary = (&htot * rho - rho * &htot) * (-I);
    Ok(unitary + dissipator(rho, lset, spectrum)?)
}

/// The generator with rates diagonalized into independent channels
/// `γ_k K_k ρ K_k†`; the bath is queried once per frequency at construction.
#[derive(Debug, Clone)]
pub struct Generator {
    h_eff: CMatrix,
    channels: Vec<(f64, CMatrix, CMatrix)>,
}

impl Generator {
    pub fn new(h: &HermitianOperator, lset: &LindbladSet, spectrum: &BathSpectrum) -> Result<Self> {
        check_set(lset, spectrum)?;
        if h.dim() != lset.dim {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                found: lset.dim,
            });
        }
        let hl = lamb_shift(lset, spectrum)?;
        // Components at roundoff level (e.g. from eigenvector error) are dropped.
        let scale = lset.operators().iter().map(|l| l.norm()).fold(0.0f64, f64::max);
        let mut channels = Vec::new();
        for t in &lset.transitions {
            let gamma = spectrum.checked_rates(t.nu)?;
            if gamma.nrows() == 0 {
                continue;
            }
            let (vals, vecs) = eigh(&gamma);
            for (k, &rate) in vals.iter().enumerate() {
                if rate <= 0.0 {
                    continue;
                }
                let mut op = CMatrix::zeros(lset.dim, lset.dim);
                for (b, lb) in t.ops.iter().enumerate() {
                    op += lb * vecs[(b, k)].conj();
                }
                if op.norm() <= 1e-12 * scale {
                    continue;
                }
                let kk = op.adjoint() * &op;
                channels.push((rate, op, kk));
            }
        }
        Ok(Generator {
            h_eff: h.matrix() + hl.matrix(),
            channels,
        })
    }

    /// Adds `δω G` to the Hamiltonian part, leaving the jump operators fixed.
    pub fn with_signal(&self, g: &HermitianOperator, delta_omega: f64) -> Self {
        let mut out = self.clone();
        out.h_eff += g.matrix() * c(delta_omega);
        out
    }

    pub fn dim(&self) -> usize {
        self.h_eff.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.h_eff
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Upper bound on the superoperator norm, used for step-size control.
    pub fn norm_bound(&self) -> f64 {
        let h = crate::operator::frobenius(&self.h_eff);
        2.0 * h + self.channels.iter().map(|(r, k, _)| 2.0 * r * k.norm_squared()).sum::<f64>()
    }

    /// Sum of channel rates weighted by `‖K‖²`.
    pub fn total_rate(&self) -> f64 {
        self.channels.iter().map(|(r, k, _)| r * k.norm_squared()).sum()
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = (&self.h_eff * rho - rho * &self.h_eff) * (-I);
        for (rate, k, kk) in &self.channels {
            let jump = k * rho * k.adjoint();
            out += (jump - (kk * rho + rho * kk) * c(0.5)) * c(*rate);
        }
        out
    }
}

/// JSON description of a spectral shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GammaShape {
    /// `γ(ν) = g`.
    Flat {
        g: f64,
        #[serde(default)]
        temperature: Option<f64>,
    },
    /// `γ(ν) = g ν e^{-ν/ν_c}` for `ν > 0`.
    Ohmic {
        g: f64,
        nu_c: f64,
        #[serde(default)]
        temperature: Option<f64>,
    },
    /// `γ(0) = g`, zero elsewhere.
    Peak0 { g: f64 },
}

impl GammaShape {
    /// Scalar rate. Negative frequencies mirror the positive ones, damped by
    /// `e^{-|ν|/T}` when a temperature is given.
    pub fn rate(&self, nu: f64) -> f64 {
        let positive = |x: f64| match *self {
            GammaShape::Flat { g, .. } => g,
            GammaShape::Ohmic { g, nu_c, .. } => {
                if x > 0.0 {
                    g * x * (-x / nu_c).exp()
                } else {
                    0.0
                }
            }
            GammaShape::Peak0 { g } => {
                if x == 0.0 {
                    g
                } else {
                    0.0
                }
            }
        };
        if nu >= 0.0 {
            return positive(nu);
        }
        let boltzmann = match *self {
            GammaShape::Flat { temperature, .. } | GammaShape::Ohmic { temperature, .. } => {
                temperature.map_or(1.0, |t| (-nu.abs() / t).exp())
            }
            GammaShape::Peak0 { .. } => 0.0,
        };
        positive(nu.abs()) * boltzmann
    }

    fn validate(&self) -> Result<()> {
        let bad = match *self {
            GammaShape::Flat { g, temperature } => g < 0.0 || temperature.is_some_and(|t| t <= 0.0),
            GammaShape::Ohmic { g, nu_c, temperature } => g < 0.0 || nu_c <= 0.0 || temperature.is_some_and(|t| t <= 0.0),
            GammaShape::Peak0 { g } => g < 0.0,
        };
        if bad {
            return Err(Error::InvalidParameter(format!("invalid spectral shape {self:?}")));
        }
        Ok(())
    }
}

/// Noise model file: regime, spectral shape and coupling operators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseModelConfig {
    pub regime: Regime,
    pub gamma: GammaShape,
    pub couplings: Vec<HermitianOperator>,
}

impl NoiseModelConfig {
    pub fn spectrum(&self) -> Result<BathSpectrum> {
        self.gamma.validate()?;
        let shape = self.gamma.clone();
        Ok(BathSpectrum::scalar(self.regime, self.couplings.len(), move |nu| shape.rate(nu)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{pauli, spin1};
    use approx::assert_abs_diff_eq;

    #[test]
    fn grouping_examples() {
        let h = HermitianOperator::diagonal(&[0.0, 0.0, 5.0]);
        let g = eigendecompose_grouped(&h, 1e-6).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!((g[0].rank, g[1].rank), (2, 1));
        assert_abs_diff_eq!(g[1].energy, 5.0);

        let s = spin1();
        let g = eigendecompose_grouped(&s[2].square(), 1e-9).unwrap();
        assert_eq!(g.len(), 2);
        assert_abs_diff_eq!(g[0].projector[(1, 1)].re, 1.0, epsilon = 1e-14);
        assert_eq!(g[1].rank, 2);

        let total: CMatrix = g.iter().map(|x| x.projector.clone()).sum();
        assert!((total - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn ill_separated_cluster_is_rejected() {
        let vals: Vec<f64> = (0..30).map(|k| k as f64 * 0.9e-6).collect();
        let h = HermitianOperator::diagonal(&vals);
        assert!(matches!(
            eigendecompose_grouped(&h, 1e-6),
            Err(Error::IllSeparatedSpectrum { .. })
        ));
    }

    #[test]
    fn qubit_decomposition() {
        let delta = 2.0;
        let h = HermitianOperator::diagonal(&[0.0, delta]);
        let p = pauli();
        let set = jump_operators(&h, &[p[0].clone()], 1e-9).unwrap();
        assert_eq!(set.frequencies(), vec![-delta, 0.0, delta]);
        // L(Δ) takes |1⟩ (energy Δ) to |0⟩.
        let lower = &set.at(delta, 1e-9).unwrap().ops[0];
        assert_abs_diff_eq!(lower[(0, 1)].re, 1.0);
        assert_abs_diff_eq!(lower[(1, 0)].re, 0.0);
        assert!(set.at(0.0, 1e-9).unwrap().ops[0].norm() < 1e-15);
        assert!(set.completeness_error(&[p[0].clone()]) < 1e-12);
        assert!(set.adjoint_error(1e-9) < 1e-12);
    }

    #[test]
    fn commuting_coupling_is_pure_dephasing() {
        let s = spin1();
        let set = jump_operators(&s[2].square(), &[s[2].clone()], 1e-9).unwrap();
        let l0 = &set.at(0.0, 1e-9).unwrap().ops[0];
        assert!((l0 - s[2].matrix()).norm() < 1e-12);
        for t in &set.transitions {
            if t.nu != 0.0 {
                assert!(t.ops[0].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dephasing_rate_convention() {
        let s = spin1();
        let set = jump_operators(&s[2].square(), &[s[2].clone()], 1e-9).unwrap();
        let gamma = 0.7;
        let bath = BathSpectrum::peak0(1, gamma);
        // ρ = |+1⟩⟨-1| decays at γ (m - m')² / 2 = 2γ.
        let mut rho = CMatrix::zeros(3, 3);
        rho[(0, 2)] = c(1.0);
        let d = dissipator(&rho, &set, &bath).unwrap();
        assert_abs_diff_eq!(d[(0, 2)].re, -2.0 * gamma, epsilon = 1e-14);
        rho[(0, 2)] = c(0.0);
        rho[(0, 1)] = c(1.0);
        let d = dissipator(&rho, &set, &bath).unwrap();
        assert_abs_diff_eq!(d[(0, 1)].re, -0.5 * gamma, epsilon = 1e-14);

        let mixed = CMatrix::identity(3, 3) * c(1.0 / 3.0);
        assert!(dissipator(&mixed, &set, &bath).unwrap().norm() < 1e-15);
        assert!(dissipator(&mixed, &LindbladSet::empty(3), &bath).unwrap().norm() == 0.0);
    }

    #[test]
    fn qubit_dephasing_rhs() {
        let p = pauli();
        let h = HermitianOperator::zeros(2);
        let set = jump_operators(&h, &[p[2].clone()], 1e-9).unwrap();
        let bath = BathSpectrum::peak0(1, 1.0);
        let rho = CMatrix::from_element(2, 2, c(0.5));
        let r = gksl_rhs(&rho, &h, &set, &bath).unwrap();
        assert_abs_diff_eq!(r[(0, 1)].re, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r[(0, 0)].re, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn lamb_shift_examples() {
        let s = spin1();
        let set = jump_operators(&s[2].square(), &[s[2].clone()], 1e-9).unwrap();
        let bath = BathSpectrum::peak0(1, 1.0);
        assert_eq!(lamb_shift(&set, &bath).unwrap(), HermitianOperator::zeros(3));
        let sc = 0.3;
        let bath = bath.with_lamb(Arc::new(move |nu| CMatrix::from_element(1, 1, c(if nu == 0.0 { sc } else { 0.0 }))));
        let hl = lamb_shift(&set, &bath).unwrap();
        assert!((hl.matrix() - s[2].square().matrix() * c(sc)).norm() < 1e-14);

        let p = pauli();
        let delta = 1.5;
        let h = HermitianOperator::diagonal(&[0.0, delta]);
        let set = jump_operators(&h, &[p[0].clone()], 1e-9).unwrap();
        let bath = BathSpectrum::flat(Regime::FullThermal, 1, 1.0)
            .with_lamb(Arc::new(move |nu| CMatrix::from_element(1, 1, c(if nu == delta { sc } else { 0.0 }))));
        let hl = lamb_shift(&set, &bath).unwrap();
        // L(Δ)†L(Δ) = |1⟩⟨1|: the excited level is shifted.
        assert_abs_diff_eq!(hl.matrix()[(1, 1)].re, sc);
        assert_abs_diff_eq!(hl.matrix()[(0, 0)].re, 0.0);
        assert!(crate::operator::commutator(hl.matrix(), h.matrix()).norm() < 1e-12);
    }

    #[test]
    fn regime_filters() {
        let p = pauli();
        let h = HermitianOperator::diagonal(&[0.0, 1.0]);
        let set = jump_operators(&h, &[p[0].clone()], 1e-9).unwrap();
        let bath = BathSpectrum::flat(Regime::LowTemperature, 1, 1.0);
        let mut rho = CMatrix::zeros(2, 2);
        rho[(0, 0)] = c(0.3);
        rho[(1, 1)] = c(0.7);
        let full = dissipator(&rho, &set, &bath).unwrap();
        let cut = dissipator(&rho, &set.without_excitation(), &bath).unwrap();
        assert!((full - cut).norm() < 1e-15);
        assert!(BathSpectrum::flat(Regime::DephasingOnly, 1, 1.0).rates(1.0).norm() == 0.0);
    }

    #[test]
    fn generator_matches_direct_sum() {
        use crate::random::{density, hermitian, stream};
        let mut rng = stream(5, 0);
        let h = hermitian(&mut rng, 4);
        let couplings = vec![hermitian(&mut rng, 4), hermitian(&mut rng, 4)];
        let set = jump_operators(&h, &couplings, 1e-9).unwrap();
        let corr = CMatrix::from_row_slice(2, 2, &[c(1.0), C64::new(0.3, 0.2), C64::new(0.3, -0.2), c(0.5)]);
        let bath = BathSpectrum::new(Regime::FullThermal, 2, Arc::new(move |nu| &corr * c((-0.2 * nu).exp())));
        let gen = Generator::new(&h, &set, &bath).unwrap();
        let rho = density(&mut rng, 4, 4);
        let direct = gksl_rhs(rho.matrix(), &h, &set, &bath).unwrap();
        assert!((gen.apply(rho.matrix()) - &direct).norm() < 1e-12);
        assert!(direct.trace().norm() < 1e-12);
    }

    #[test]
    fn rejects_indefinite_rates() {
        let p = pauli();
        let h = HermitianOperator::zeros(2);
        let set = jump_operators(&h, &[p[2].clone()], 1e-9).unwrap();
        let bath = BathSpectrum::flat(Regime::FullThermal, 1, -1.0);
        assert!(matches!(
            dissipator(&CMatrix::identity(2, 2), &set, &bath),
            Err(Error::RateNotPsd { .. })
        ));
    }

    #[test]
    fn noise_config_json() {
        let s = spin1();
        let cfg = NoiseModelConfig {
            regime: Regime::FullThermal,
            gamma: GammaShape::Ohmic {
                g: 1.0,
                nu_c: 2.0,
                temperature: Some(0.5),
            },
            couplings: s.to_vec(),
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"kind\":\"ohmic\""));
        let back: NoiseModelConfig = serde_json::from_str(&text).unwrap();
        let spec = back.spectrum().unwrap();
        assert_abs_diff_eq!(spec.rates(1.0)[(0, 0)].re, (-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(spec.rates(-1.0)[(0, 0)].re, (-0.5f64).exp() * (-2.0f64).exp(), epsilon = 1e-15);
        let alias: Regime = serde_json::from_str("\"dephasing\"").unwrap();
        assert_eq!(alias, Regime::DephasingOnly);
    }
}

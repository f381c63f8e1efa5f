//! NV-centre ground-state triplet: Hamiltonians, the `B_x` control field,
//! dressed basis, the ¹³C ancilla code and the regime verdict table.
//!
//! Units are natural (`D = 1` by default). Basis order is `(|+1⟩, |0⟩, |−1⟩)`;
//! the ancilla basis is `(|↑⟩, |↓⟩)`.

use serde::{Deserialize, Serialize};

use crate::codespace::{check_conditions, effective_generator, no_go_search, CodeSpace, ConditionReport};
use crate::config::Tolerances;
use crate::criteria::{thm1_condition, thm2_condition, CriterionReport};
use crate::error::{Error, Result};
use crate::lindblad::{BathSpectrum, GammaShape, NoiseModelConfig, Regime};
use crate::operator::{c, spin1, CMatrix, CVector, HermitianOperator, StateVector};
use crate::simulate::Model;

/// Minimum no-go penalty for spin-1 codes against `{S_x, S_y, S_z}`.
/// Regression value, pinned from an independent multi-start optimizer.
pub const NO_GO_FLOOR: f64 = 2.0;

/// Largest `|γ_e B_x| / D` accepted by the perturbative control formula.
pub const BX_RATIO_LIMIT: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NvParams {
    pub d_split: f64,
    #[serde(default)]
    pub e_strain: f64,
    #[serde(default = "unit")]
    pub gamma_e: f64,
    #[serde(default)]
    pub b_field: [f64; 3],
    #[serde(default)]
    pub delta_omega: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for NvParams {
    fn default() -> Self {
        NvParams {
            d_split: 1.0,
            e_strain: 0.0,
            gamma_e: 1.0,
            b_field: [0.0; 3],
            delta_omega: 0.0,
        }
    }
}

/// `S_x² − S_y²`, which only couples `|+1⟩` and `|−1⟩`.
pub fn sx2_minus_sy2() -> HermitianOperator {
    let s = spin1();
    &s[0].square() - &s[1].square()
}

/// `(D + δω) S_z² − E (S_x² − S_y²) + γ_e S·B`.
pub fn nv_hamiltonian(p: &NvParams) -> Result<HermitianOperator> {
    if !(p.d_split > 0.0) {
        return Err(Error::InvalidParameter(format!("zero-field splitting must be positive, got {}", p.d_split)));
    }
    let s = spin1();
    let mut h = s[2].square().scale(p.d_split + p.delta_omega).matrix() - sx2_minus_sy2().scale(p.e_strain).matrix();
    for (op, b) in s.iter().zip(p.b_field) {
        h += op.matrix() * c(p.gamma_e * b);
    }
    HermitianOperator::new(h)
}

/// Second-order effective control of a perpendicular field:
/// `½ ((γ_e B_x)² / D) [3 S_z² − (S_x² − S_y²)]`.
pub fn nv_control_bx(bx: f64, d_split: f64, gamma_e: f64) -> Result<HermitianOperator> {
    let ratio = (gamma_e * bx / d_split).abs();
    if !(d_split > 0.0) || !(ratio < BX_RATIO_LIMIT) {
        return Err(Error::InvalidParameter(format!(
            "|γ_e B_x / D| = {ratio} outside the perturbative range (< {BX_RATIO_LIMIT})"
        )));
    }
    let s = spin1();
    let pref = 0.5 * (gamma_e * bx).powi(2) / d_split;
    Ok((&s[2].square().scale(3.0) - &sx2_minus_sy2()).scale(pref))
}

fn ket(amps: [f64; 3]) -> StateVector {
    StateVector::normalized(CVector::from_iterator(3, amps.iter().map(|&a| c(a)))).expect("nonzero ket")
}

/// `|0⟩, |ψ−⟩, |ψ+⟩` with `|ψ±⟩ = (|+1⟩ ± |−1⟩)/√2`.
pub fn nv_dressed_basis() -> [StateVector; 3] {
    [ket([0.0, 1.0, 0.0]), ket([1.0, 0.0, -1.0]), ket([1.0, 0.0, 1.0])]
}

/// Labels matching [`nv_dressed_basis`].
pub const DRESSED_LABELS: [&str; 3] = ["0", "psi-", "psi+"];

/// Code `{|0⟩, |ψ−⟩}` on the bare spin.
pub fn nv_code() -> CodeSpace {
    let [zero, minus, _] = nv_dressed_basis();
    CodeSpace::without_ancilla(zero, minus).expect("orthonormal pair")
}

/// Code `span{|0⟩|↓⟩, |ψ−⟩|↑⟩}` with a spin-½ ancilla.
pub fn nv_ancilla_code() -> CodeSpace {
    let [zero, minus, _] = nv_dressed_basis();
    let up = StateVector::basis(2, 0);
    let down = StateVector::basis(2, 1);
    CodeSpace::new(zero.tensor(&down), minus.tensor(&up), 3, 2).expect("orthonormal pair")
}

/// Effective and exact descriptions of the perpendicular-field dressing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BxComparison {
    pub ratio: f64,
    /// Energies of `D S_z² + H_C` on `|0⟩, |ψ−⟩, |ψ+⟩`.
    pub effective_energies: [f64; 3],
    /// Exact energies of `D S_z² + γ_e B_x S_x`, matched to the same states.
    pub exact_energies: [f64; 3],
    /// Dressed-basis labels sorted by effective energy.
    pub effective_order: Vec<String>,
    /// Dressed-basis labels sorted by exact energy.
    pub exact_order: Vec<String>,
    pub ordering_agrees: bool,
    /// `|⟨ψ_exact|ψ_bare⟩|` for each dressed-basis state.
    pub bare_overlaps: [f64; 3],
    /// `|⟨ψ_exact|ψ_SW⟩|` against the first-order rotated dressed basis.
    pub rotated_overlaps: [f64; 3],
    /// `1 − (γ_e B_x / D)³`.
    pub overlap_bound: f64,
}

impl BxComparison {
    pub fn within_bound(&self) -> bool {
        self.rotated_overlaps.iter().all(|o| *o > self.overlap_bound)
    }
}

fn order_labels(e: &[f64; 3]) -> Vec<String> {
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|a, b| e[*a].total_cmp(&e[*b]));
    idx.iter().map(|&k| DRESSED_LABELS[k].to_string()).collect()
}

/// Compares the effective control formula with exact diagonalization of
/// `D S_z² + γ_e B_x S_x`. The exact eigenvectors are matched to the dressed
/// basis rotated to first order in `γ_e B_x / D`.
pub fn bx_comparison(bx: f64, d_split: f64, gamma_e: f64) -> Result<BxComparison> {
    let hc = nv_control_bx(bx, d_split, gamma_e)?;
    let s = spin1();
    let h0 = s[2].square().scale(d_split);
    let v = s[0].scale(gamma_e * bx);
    let basis = nv_dressed_basis();
    let h_eff = &h0 + &hc;
    let exact_h = &h0 + &v;
    let (vals, vecs) = exact_h.eigh();

    let bare_energy: Vec<f64> = basis.iter().map(|b| h0.expectation(b)).collect();
    let mut effective = [0.0; 3];
    let mut exact = [0.0; 3];
    let mut bare_overlaps = [0.0; 3];
    let mut rotated_overlaps = [0.0; 3];
    for n in 0..3 {
        effective[n] = h_eff.expectation(&basis[n]);
        // First-order rotation within non-degenerate pairs.
        let mut rotated = basis[n].amplitudes().clone();
        for m in 0..3 {
            let gap = bare_energy[n] - bare_energy[m];
            if m != n && gap.abs() > 1e-12 {
                let coupling = basis[m].amplitudes().dotc(&(v.matrix() * basis[n].amplitudes()));
                rotated += basis[m].amplitudes() * (coupling / c(gap));
            }
        }
        let rotated = StateVector::normalized(rotated)?;
        let (mut best, mut k_best) = (-1.0, 0);
        for k in 0..3 {
            let o = vecs.column(k).dotc(basis[n].amplitudes()).norm();
            if o > best {
                best = o;
                k_best = k;
            }
        }
        exact[n] = vals[k_best];
        bare_overlaps[n] = best;
        rotated_overlaps[n] = vecs.column(k_best).dotc(rotated.amplitudes()).norm();
    }
    let effective_order = order_labels(&effective);
    let exact_order = order_labels(&exact);
    let ratio = (gamma_e * bx / d_split).abs();
    Ok(BxComparison {
        ratio,
        effective_energies: effective,
        exact_energies: exact,
        ordering_agrees: effective_order == exact_order,
        effective_order,
        exact_order,
        bare_overlaps,
        rotated_overlaps,
        overlap_bound: 1.0 - ratio.powi(3),
    })
}

/// Dressed Hamiltonian `D S_z² + H_C(B_x)`.
pub fn nv_dressed_hamiltonian(bx_ratio: f64) -> Result<HermitianOperator> {
    let s = spin1();
    Ok(&s[2].square() + &nv_control_bx(bx_ratio, 1.0, 1.0)?)
}

/// Spectral shape used by the NV models: flat `γ`, with a Boltzmann factor
/// on excitation when `temperature` is given.
fn noise(regime: Regime, gamma: f64, temperature: Option<f64>, couplings: Vec<HermitianOperator>) -> Result<BathSpectrum> {
    NoiseModelConfig {
        regime,
        gamma: GammaShape::Flat { g: gamma, temperature },
        couplings,
    }
    .spectrum()
}

/// Dressed spin with code `{|0⟩, |ψ−⟩}`, couplings `{S_x, S_y, S_z}` and
/// signal `S_z²`.
pub fn nv_protected_model(regime: Regime, gamma: f64, temperature: Option<f64>, bx_ratio: f64) -> Result<Model> {
    let s = spin1();
    let h = nv_dressed_hamiltonian(bx_ratio)?;
    let spectrum = noise(regime, gamma, temperature, s.to_vec())?;
    Model::new(h, &s, &spectrum, s[2].square(), nv_code(), None)
}

/// Same probe and couplings without control: `H = D S_z²`.
pub fn nv_unprotected_model(regime: Regime, gamma: f64, temperature: Option<f64>) -> Result<Model> {
    let s = spin1();
    let spectrum = noise(regime, gamma, temperature, s.to_vec())?;
    Model::new(s[2].square(), &s, &spectrum, s[2].square(), nv_code(), None)
}

/// `(|+1⟩ + |−1⟩)/√2` under `L(0) = S_z` at rate `γ`, sensing a field along
/// `S_z`.
pub fn nv_undressed_superposition(gamma: f64) -> Result<Model> {
    let s = spin1();
    let code = CodeSpace::without_ancilla(StateVector::basis(3, 0), StateVector::basis(3, 2))?;
    let spectrum = BathSpectrum::peak0(1, gamma);
    Model::new(s[2].square(), &[s[2].clone()], &spectrum, s[2].clone(), code, None)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A code meeting the conditions of the regime.
    Code { code: CodeSpace, report: ConditionReport },
    /// Multi-start search floor over bare spin-1 codes.
    NoGo {
        min_penalty: f64,
        floor: f64,
        restarts: usize,
        seed: u64,
    },
    /// The generator lies in the quadratic span of the couplings.
    Thm2 { report: CriterionReport },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictRow {
    pub regime: Regime,
    pub ancilla: bool,
    /// Heisenberg scaling achievable.
    pub achievable: bool,
    pub witness: Witness,
}

impl VerdictRow {
    pub fn symbol(&self) -> &'static str {
        if self.achievable {
            "✓"
        } else {
            "×"
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictTable {
    pub rows: Vec<VerdictRow>,
}

impl VerdictTable {
    pub fn pattern(&self) -> Vec<(Regime, bool, bool)> {
        self.rows.iter().map(|r| (r.regime, r.ancilla, r.achievable)).collect()
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| noise | ancilla | HS | witness |\n|---|---|---|---|\n");
        for r in &self.rows {
            let regime = match r.regime {
                Regime::DephasingOnly => "dephasing",
                Regime::LowTemperature => "dephasing + relaxation",
                Regime::FullThermal => "full thermal",
            };
            let witness = match &r.witness {
                Witness::Code { report, .. } => format!(
                    "code: dephasing {:.1e}, relaxation {:.1e}, signal {:.3}",
                    report.dephasing_violation, report.relaxation_violation, report.signal
                ),
                Witness::NoGo { min_penalty, restarts, .. } => {
                    format!("no-go floor {min_penalty:.6} over {restarts} restarts")
                }
                Witness::Thm2 { report } => format!("G in quadratic span, residual {:.1e}", report.residual_norm),
            };
            s.push_str(&format!(
                "| {regime} | {} | {} | {witness} |\n",
                if r.ancilla { "yes" } else { "no" },
                r.symbol()
            ));
        }
        s
    }
}

const CONDITION_TOL: f64 = 1e-12;

fn dephasing_row(couplings: &[HermitianOperator], g: &HermitianOperator) -> Result<VerdictRow> {
    let code = nv_code();
    let report = check_conditions(&code, g, couplings, None)?;
    Ok(VerdictRow {
        regime: Regime::DephasingOnly,
        ancilla: false,
        achievable: report.dephasing_violation < CONDITION_TOL && report.signal.abs() > CONDITION_TOL,
        witness: Witness::Code { code, report },
    })
}

fn relaxation_row(couplings: &[HermitianOperator], ancilla: bool, restarts: usize, seed: u64) -> Result<VerdictRow> {
    if ancilla {
        let code = nv_ancilla_code();
        let g = spin1()[2].square();
        let report = check_conditions(&code, &g, couplings, None)?;
        Ok(VerdictRow {
            regime: Regime::LowTemperature,
            ancilla: true,
            achievable: report.decoherence_free(CONDITION_TOL) && report.signal.abs() > CONDITION_TOL,
            witness: Witness::Code { code, report },
        })
    } else {
        let search = no_go_search(couplings, 3, restarts, seed)?;
        Ok(VerdictRow {
            regime: Regime::LowTemperature,
            ancilla: false,
            achievable: search.min_penalty < NO_GO_FLOOR - 1e-6,
            witness: Witness::NoGo {
                min_penalty: search.min_penalty,
                floor: NO_GO_FLOOR,
                restarts,
                seed,
            },
        })
    }
}

fn thermal_row(couplings: &[HermitianOperator], g: &HermitianOperator) -> Result<VerdictRow> {
    let report = thm2_condition(g, couplings, &Tolerances::default())?;
    Ok(VerdictRow {
        regime: Regime::FullThermal,
        ancilla: true,
        achievable: report.verdict,
        witness: Witness::Thm2 { report },
    })
}

/// Verdict table for an arbitrary coupling triple (e.g. a rotated one).
pub fn verdict_table_for(couplings: &[HermitianOperator], restarts: usize, seed: u64) -> Result<VerdictTable> {
    let g = spin1()[2].square();
    Ok(VerdictTable {
        rows: vec![
            dephasing_row(couplings, &g)?,
            relaxation_row(couplings, false, restarts, seed)?,
            relaxation_row(couplings, true, restarts, seed)?,
            thermal_row(couplings, &g)?,
        ],
    })
}

/// The table for isotropic couplings `{S_x, S_y, S_z}` and signal `S_z²`.
pub fn nv_verdict_table(restarts: usize, seed: u64) -> Result<VerdictTable> {
    verdict_table_for(&spin1(), restarts, seed)
}

/// Everything known about one regime, for the demo report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NvDemoReport {
    pub regime: Regime,
    pub ancilla: bool,
    pub row: VerdictRow,
    pub thm1: CriterionReport,
    pub thm2: CriterionReport,
    /// Fisher information per `t²` for the witness code, when one exists.
    pub qfi_per_t2: Option<f64>,
    pub bx: BxComparison,
}

pub fn nv_demo(regime: Regime, ancilla: bool, restarts: usize, seed: u64) -> Result<NvDemoReport> {
    let s = spin1();
    let g = s[2].square();
    let row = match regime {
        Regime::DephasingOnly => dephasing_row(&s, &g)?,
        Regime::LowTemperature => relaxation_row(&s, ancilla, restarts, seed)?,
        Regime::FullThermal => thermal_row(&s, &g)?,
    };
    let qfi_per_t2 = match (&row.witness, row.achievable) {
        (Witness::Code { code, .. }, true) => Some(effective_generator(code, &g)?.var),
        _ => None,
    };
    let tol = Tolerances::default();
    Ok(NvDemoReport {
        regime,
        ancilla,
        row,
        thm1: thm1_condition(&g, &s, &tol)?,
        thm2: thm2_condition(&g, &s, &tol)?,
        qfi_per_t2,
        bx: bx_comparison(0.1, 1.0, 1.0)?,
    })
}

/// Random real rotation `R` applied to `{S_x, S_y, S_z}`: `S'_i = Σ_j R_ij S_j`.
pub fn rotate_couplings(r: &[[f64; 3]; 3]) -> Vec<HermitianOperator> {
    let s = spin1();
    r.iter()
        .map(|row| {
            let mut m = CMatrix::zeros(3, 3);
            for (op, &w) in s.iter().zip(row) {
                m += op.matrix() * c(w);
            }
            HermitianOperator::hermitian_part(&m)
        })
        .collect()
}

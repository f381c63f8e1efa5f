use std::fmt;
use std::path::{Path, PathBuf};

use dressed_core::codespace::{
    check_conditions, complement_eigenstates, control_hamiltonian, purify_pair, two_level_dressing, verify_knill_laflamme, CodeSpace,
    ConditionReport, KlReport,
};
use dressed_core::criteria::{hnls_condition, thm1_condition, thm2_condition};
use dressed_core::io::{fmt12, read_json, MatrixJson};
use dressed_core::lindblad::{GammaShape, NoiseModelConfig, Regime};
use dressed_core::nv;
use dressed_core::operator::spin1;
use dressed_core::sdp::{solve_primal, SdpProblem, SdpSolution};
use dressed_core::simulate::{crlb, parse_tgrid, qfi_analytic, scaling_sweep, Model, ModelConfig, SimConfig};
use dressed_core::{positive_negative_split, CMatrix, Error, HermitianOperator, Tolerances};
use serde::Serialize;

use crate::{Command, CriterionArg, Format, Problem, RegimeArg};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unreadable input; exit status 1.
    Usage(String),
    /// Solver or integrator failure; exit status 2.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) | Error::Integration { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub struct Outcome {
    pub text: String,
    /// 0, or 2/3 for non-certified results and negative gate verdicts.
    pub status: u8,
    pub inputs: Vec<PathBuf>,
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable output") + "\n"
}

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    read_json(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Each file holds a single operator or an array of operators.
fn read_operators(paths: &[PathBuf]) -> Result<Vec<HermitianOperator>> {
    let mut out = Vec::new();
    for p in paths {
        let value: serde_json::Value = read(p)?;
        let parsed = if value.is_array() {
            serde_json::from_value::<Vec<HermitianOperator>>(value)
        } else {
            serde_json::from_value::<HermitianOperator>(value).map(|op| vec![op])
        };
        out.extend(parsed.map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?);
    }
    Ok(out)
}

fn load_problem(p: &Problem) -> Result<(HermitianOperator, Vec<HermitianOperator>, Vec<PathBuf>)> {
    let g: HermitianOperator = read(&p.generator)?;
    let couplings = read_operators(&p.couplings)?;
    let mut inputs = vec![p.generator.clone()];
    inputs.extend(p.couplings.iter().cloned());
    Ok((g, couplings, inputs))
}

pub fn dispatch(cmd: &Command, seed: u64) -> Result<Outcome> {
    match cmd {
        Command::Check(a) => check(a),
        Command::Optimize(a) => optimize(a),
        Command::BuildCode(a) => build_code(a),
        Command::Verify(a) => verify(a),
        Command::NoGo(a) => no_go(a, seed),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::NvDemo(a) => nv_demo(a, seed),
    }
}

fn check(a: &crate::CheckArgs) -> Result<Outcome> {
    let tol = Tolerances::default();
    let (g, couplings, mut inputs) = load_problem(&a.problem)?;
    let report = match a.criterion {
        CriterionArg::Thm1 => thm1_condition(&g, &couplings, &tol)?,
        CriterionArg::Thm2 => thm2_condition(&g, &couplings, &tol)?,
        CriterionArg::Hnls => {
            let path = a.lindblads.as_ref().ok_or_else(|| CliError::Usage("hnls needs --lindblads".into()))?;
            let raw: Vec<MatrixJson> = read(path)?;
            let ls: Vec<CMatrix> = raw.iter().map(|m| m.to_matrix()).collect::<dressed_core::Result<_>>()?;
            inputs.push(path.clone());
            hnls_condition(&g, &ls, &tol)?
        }
    };
    let status = if a.gate && !report.verdict { 3 } else { 0 };
    Ok(Outcome {
        text: json(&report),
        status,
        inputs,
    })
}

fn optimize(a: &crate::OptimizeArgs) -> Result<Outcome> {
    let (g, couplings, inputs) = load_problem(&a.problem)?;
    let sol = solve_primal(&SdpProblem::new(g, &couplings)?, a.tol)?;
    let status = if sol.certified { 0 } else { 2 };
    if status != 0 {
        eprintln!("warning: duality gap {:.3e} not certified", sol.gap);
    }
    Ok(Outcome {
        text: json(&sol),
        status,
        inputs,
    })
}

fn build_code(a: &crate::BuildCodeArgs) -> Result<Outcome> {
    let sol: SdpSolution = read(&a.solution)?;
    let mut inputs = vec![a.solution.clone()];
    let split = positive_negative_split(&sol.g_tilde, &Tolerances::default())
        .map_err(|e| CliError::Usage(format!("optimizer carries no signal: {e}")))?;
    let code = purify_pair(&split.rho0, &split.rho1)?;
    if let Some(h_path) = &a.h_free {
        let out = a.control_out.as_ref().ok_or_else(|| CliError::Usage("--h-free needs --control-out".into()))?;
        let h: HermitianOperator = read(h_path)?;
        inputs.push(h_path.clone());
        let hc = control_hamiltonian(&code, &h, a.lambda0, a.lambda1)?;
        std::fs::write(out, json(&hc)).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out.display())))?;
    }
    Ok(Outcome {
        text: json(&code),
        status: 0,
        inputs,
    })
}

#[derive(Serialize)]
struct VerifyReport {
    conditions: ConditionReport,
    decoherence_free: bool,
    knill_laflamme: Option<KlReport>,
}

fn verify(a: &crate::VerifyArgs) -> Result<Outcome> {
    let code: CodeSpace = read(&a.code)?;
    let (g, couplings, mut inputs) = load_problem(&a.problem)?;
    inputs.push(a.code.clone());
    let others = match &a.hamiltonian {
        Some(p) => {
            inputs.push(p.clone());
            let h: HermitianOperator = read(p)?;
            Some(complement_eigenstates(&h, &code)?)
        }
        None => None,
    };
    let conditions = check_conditions(&code, &g, &couplings, others.as_deref())?;
    let knill_laflamme = match a.nu0 {
        Some(nu0) => {
            let d = two_level_dressing(&code, &couplings, nu0)?;
            Some(verify_knill_laflamme(&code, &d.lindblads.operators(), Tolerances::default().knill_laflamme)?)
        }
        None => None,
    };
    let tol = Tolerances::default().membership;
    let decoherence_free = conditions.decoherence_free(tol) && conditions.excitation_violation.is_none_or(|v| v < tol);
    let status = if a.gate && !decoherence_free { 3 } else { 0 };
    Ok(Outcome {
        text: json(&VerifyReport {
            conditions,
            decoherence_free,
            knill_laflamme,
        }),
        status,
        inputs,
    })
}

fn no_go(a: &crate::NoGoArgs, seed: u64) -> Result<Outcome> {
    let couplings = read_operators(&a.couplings)?;
    let dim = couplings.first().map(|c| c.dim()).ok_or_else(|| CliError::Usage("no couplings given".into()))?;
    let result = dressed_core::codespace::no_go_search(&couplings, dim, a.restarts, seed)?;
    Ok(Outcome {
        text: json(&result),
        status: 0,
        inputs: a.couplings.clone(),
    })
}

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Usage(e.to_string());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row.into_iter().map(fmt12)).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii csv"))
}

fn simulate(a: &crate::SimulateArgs) -> Result<Outcome> {
    let cfg_model: ModelConfig = read(&a.model)?;
    let cfg: SimConfig = read(&a.config)?;
    let model = Model::from_config(&cfg_model)?;
    if !(cfg.t_final > 0.0) {
        return Err(CliError::Usage("t_final must be positive".into()));
    }
    let dt = cfg.dt.unwrap_or_else(|| model.default_dt());
    if !(dt > 0.0) || dt > cfg.t_final {
        return Err(CliError::Usage(format!("dt must lie in (0, t_final], got {dt}")));
    }
    let n = (cfg.t_final / dt).round().max(1.0) as usize;
    let h = cfg.t_final / n as f64;
    let stride = cfg.record_stride.max(1);
    let times: Vec<f64> = (1..=n).filter(|k| k % stride == 0 || *k == n).map(|k| k as f64 * h).collect();
    let delta = cfg.delta_omega.unwrap_or_else(|| model.default_delta());
    let base = model.evolve_at(0.0, &times, h)?;
    let qfi = model.qfi_numeric(&times, delta, h)?;
    let mut rows = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        rows.push(vec![
            t,
            model.coherence(&base.states[k]),
            qfi[k].value,
            qfi_analytic(&model.code, &model.signal, t)?,
            crlb(qfi[k].value, 1)?,
        ]);
    }
    Ok(Outcome {
        text: csv_text(&["t", "coherence", "qfi", "qfi_analytic", "crlb"], rows.into_iter())?,
        status: 0,
        inputs: vec![a.model.clone(), a.config.clone()],
    })
}

fn sweep(a: &crate::SweepArgs) -> Result<Outcome> {
    let p = Model::from_config(&read::<ModelConfig>(&a.protected)?)?;
    let u = Model::from_config(&read::<ModelConfig>(&a.unprotected)?)?;
    let grid = parse_tgrid(&a.tgrid)?;
    let pool = rayon_pool(a.jobs)?;
    let records = pool.install(|| scaling_sweep(&p, &u, &grid))?;
    let rows = records.iter().map(|r| vec![r.t, r.qfi_protected, r.qfi_unprotected, r.coherence, r.crlb]);
    Ok(Outcome {
        text: csv_text(&["t", "qfi_protected", "qfi_unprotected", "coherence", "crlb"], rows)?,
        status: 0,
        inputs: vec![a.protected.clone(), a.unprotected.clone()],
    })
}

fn rayon_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))
}

fn regime(r: RegimeArg) -> Regime {
    match r {
        RegimeArg::Dephasing => Regime::DephasingOnly,
        RegimeArg::Relaxation => Regime::LowTemperature,
        RegimeArg::Thermal => Regime::FullThermal,
    }
}

fn nv_demo(a: &crate::NvDemoArgs, seed: u64) -> Result<Outcome> {
    if let Some(dir) = &a.export {
        return export(dir);
    }
    let text = if a.table {
        let table = nv::nv_verdict_table(a.restarts, seed)?;
        match a.format {
            Format::Json => json(&table),
            Format::Markdown => table.to_markdown(),
        }
    } else {
        let r = a.regime.expect("clap requires a regime");
        let report = nv::nv_demo(regime(r), a.ancilla, a.restarts, seed)?;
        match a.format {
            Format::Json => json(&report),
            Format::Markdown => nv::VerdictTable { rows: vec![report.row] }.to_markdown(),
        }
    };
    Ok(Outcome {
        text,
        status: 0,
        inputs: Vec::new(),
    })
}

/// Writes NV input files usable by every other command.
fn export(dir: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let s = spin1();
    let noise = NoiseModelConfig {
        regime: Regime::DephasingOnly,
        gamma: GammaShape::Flat { g: 1.0, temperature: None },
        couplings: s.to_vec(),
    };
    let protected = ModelConfig {
        hamiltonian: nv::nv_dressed_hamiltonian(0.1)?,
        signal: s[2].square(),
        noise: noise.clone(),
        code: nv::nv_code(),
        gap_tol: None,
    };
    let unprotected = ModelConfig {
        hamiltonian: s[2].square(),
        ..protected.clone()
    };
    let sim = SimConfig {
        record_stride: 500,
        ..SimConfig::new(10.0)
    };
    let files: Vec<(&str, String)> = vec![
        ("szsq.json", json(&s[2].square())),
        ("sx.json", json(&s[0])),
        ("sy.json", json(&s[1])),
        ("sz.json", json(&s[2])),
        ("couplings.json", json(&s.to_vec())),
        ("ancilla_code.json", json(&nv::nv_ancilla_code())),
        ("protected.json", json(&protected)),
        ("unprotected.json", json(&unprotected)),
        ("sim.json", json(&sim)),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        written.push(path.display().to_string());
    }
    Ok(Outcome {
        text: json(&written),
        status: 0,
        inputs: Vec::new(),
    })
}

//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::time::{Duration, Instant};

use dressed_core::codespace::{
    effective_generator, purify_pair, search_codes, two_level_dressing, verify_knill_laflamme, CodeObjective, CodeSpace,
    SignalTarget,
};
use dressed_core::criteria::thm2_condition;
use dressed_core::lindblad::Regime;
use dressed_core::nv::{self, Witness, NO_GO_FLOOR};
use dressed_core::operator::{eigh, lift, spin1};
use dressed_core::random::{hermitian, stream};
use dressed_core::sdp::{constructive_bound, solve_primal, SdpProblem};
use dressed_core::simulate::{evolve_to_times, loglog_slope, parse_tgrid, perturbation_leakage, scaling_sweep, QfiMethod};
use dressed_core::{positive_negative_split, CMatrix, HermitianOperator, StateVector, Tolerances, C64};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn ket(amps: [f64; 3]) -> StateVector {
    StateVector::from_slice(&amps.map(|a| C64::new(a, 0.0))).unwrap()
}

fn nv_optimum() -> Check {
    let s = spin1();
    let p = SdpProblem::new(s[2].square(), &s).map_err(err)?;
    let sol = solve_primal(&p, 1e-9).map_err(err)?;
    ensure((sol.primal_value - 1.0).abs() < 5e-7, || format!("primal {}", sol.primal_value))?;
    ensure(sol.gap < 1e-6 && sol.certified, || format!("gap {:.2e}, certified {}", sol.gap, sol.certified))?;
    let split = positive_negative_split(&sol.g_tilde, &Tolerances::default()).map_err(err)?;
    let plus = ket([1.0, 0.0, 0.0]);
    let minus = ket([0.0, 0.0, 1.0]);
    let zero = ket([0.0, 1.0, 0.0]);
    let in_pm = split.rho1.expectation(&plus) + split.rho1.expectation(&minus);
    let on_zero = split.rho0.expectation(&zero);
    ensure(in_pm > 1.0 - 1e-6 && on_zero > 1.0 - 1e-6, || format!("structure: ±1 weight {in_pm}, |0⟩ weight {on_zero}"))?;
    Ok(format!("primal {:.6}, dual {:.6}, gap {:.1e}", sol.primal_value, sol.dual_value, sol.gap))
}

fn sandwich() -> Check {
    let tol = Tolerances::default();
    let mut worst = 0.0f64;
    for idx in 0..30 {
        let mut rng = stream(2024, idx);
        let d = rng.random_range(2..=6);
        let k = rng.random_range(0..=4);
        let g = hermitian(&mut rng, d);
        let couplings: Vec<HermitianOperator> = (0..k).map(|_| hermitian(&mut rng, d)).collect();
        let sol = solve_primal(&SdpProblem::new(g.clone(), &couplings).map_err(err)?, 1e-9).map_err(err)?;
        let bound = constructive_bound(&g, &couplings, &tol).map_err(err)?;
        ensure(bound.value <= sol.primal_value + 1e-8 && sol.primal_value <= sol.dual_value + 1e-8, || {
            format!("instance {idx}: {} / {} / {}", bound.value, sol.primal_value, sol.dual_value)
        })?;
        ensure(sol.gap < 1e-6, || format!("instance {idx}: gap {:.2e}", sol.gap))?;
        worst = worst.max(sol.gap);
    }
    Ok(format!("30 instances, worst gap {worst:.1e}"))
}

fn random_rotation(seed: u64) -> [[f64; 3]; 3] {
    // Gram–Schmidt of a Gaussian 3×3, sign-fixed to det = +1.
    let mut rng = stream(seed, 0);
    let mut r = [[0.0; 3]; 3];
    for row in r.iter_mut() {
        for x in row.iter_mut() {
            *x = rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
    }
    for i in 0..3 {
        for j in 0..i {
            let dot: f64 = (0..3).map(|k| r[i][k] * r[j][k]).sum();
            for k in 0..3 {
                r[i][k] -= dot * r[j][k];
            }
        }
        let n: f64 = r[i].iter().map(|x| x * x).sum::<f64>().sqrt();
        r[i].iter_mut().for_each(|x| *x /= n);
    }
    let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
    if det < 0.0 {
        r[2].iter_mut().for_each(|x| *x = -*x);
    }
    r
}

fn verdict_table() -> Check {
    let table = nv::nv_verdict_table(200, 1).map_err(err)?;
    let want = vec![
        (Regime::DephasingOnly, false, true),
        (Regime::LowTemperature, false, false),
        (Regime::LowTemperature, true, true),
        (Regime::FullThermal, true, false),
    ];
    ensure(table.pattern() == want, || format!("pattern {:?}", table.pattern()))?;
    let mut floor = f64::NAN;
    for row in &table.rows {
        match &row.witness {
            Witness::Code { report, .. } => {
                ensure(report.dephasing_violation < 1e-12, || format!("dephasing violation {:.1e}", report.dephasing_violation))?;
                if row.regime == Regime::LowTemperature {
                    ensure(report.relaxation_violation < 1e-12, || format!("relaxation violation {:.1e}", report.relaxation_violation))?;
                }
            }
            Witness::NoGo { min_penalty, .. } => {
                floor = *min_penalty;
                ensure(*min_penalty >= NO_GO_FLOOR - 1e-9, || format!("no-go floor {min_penalty}"))?;
            }
            Witness::Thm2 { report } => ensure(report.residual_norm < 1e-12, || format!("thm2 residual {:.1e}", report.residual_norm))?,
        }
    }
    for seed in [5, 6] {
        let rotated = nv::rotate_couplings(&random_rotation(seed));
        let t = nv::verdict_table_for(&rotated, 200, seed).map_err(err)?;
        ensure(t.pattern() == want, || format!("rotation {seed}: pattern {:?}", t.pattern()))?;
    }
    Ok(format!("✓ × ✓ ×, no-go floor {floor:.9} over 200 restarts, stable under rotations"))
}

fn protected_dynamics() -> Check {
    let model = nv::nv_protected_model(Regime::DephasingOnly, 1.0, None, 0.1).map_err(err)?;
    let times: Vec<f64> = (1..=20).map(|k| 0.5 * k as f64).collect();
    let traj = evolve_to_times(&model.probe(), &model.generator, &times, model.default_dt()).map_err(err)?;
    let worst = traj.states.iter().map(|r| (model.coherence(r) - 0.5).abs()).fold(0.0, f64::max);
    ensure(worst < 1e-8, || format!("coherence deviation {worst:.2e}"))?;
    let probe_times = [1.0, 4.0, 10.0];
    let est = model.qfi_numeric(&probe_times, model.default_delta(), model.default_dt()).map_err(err)?;
    let mut rel = 0.0f64;
    for (e, t) in est.iter().zip(probe_times) {
        let want = t * t / 4.0;
        ensure(e.method == QfiMethod::Fidelity, || format!("t={t}: fidelity route unresolved"))?;
        rel = rel.max(((e.value - want) / want).abs());
    }
    ensure(rel < 1e-3, || format!("QFI relative error {rel:.2e}"))?;
    Ok(format!("coherence deviation {worst:.1e}, QFI relative error {rel:.1e}"))
}

/// Textbook QFI of a qubit from its Bloch vector and derivative, divided by 4.
fn qubit_qfi(r: [f64; 3], dr: [f64; 3]) -> f64 {
    let dot = |a: [f64; 3], b: [f64; 3]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let r2 = dot(r, r);
    let f = dot(dr, dr) + if r2 < 1.0 { dot(r, dr).powi(2) / (1.0 - r2) } else { 0.0 };
    f / 4.0
}

fn unprotected_baseline() -> Check {
    let model = nv::nv_undressed_superposition(1.0).map_err(err)?;
    let times = [0.5, 1.0, 2.0];
    let traj = evolve_to_times(&model.probe(), &model.generator, &times, model.default_dt()).map_err(err)?;
    let mut worst = 0.0f64;
    for (t, rho) in times.iter().zip(&traj.states) {
        worst = worst.max((model.coherence(rho) - 0.5 * (-2.0 * t).exp()).abs());
    }
    ensure(worst < 1e-6, || format!("coherence deviation {worst:.2e}"))?;

    let protected = nv::nv_protected_model(Regime::DephasingOnly, 1.0, None, 0.1).map_err(err)?;
    let grid = parse_tgrid("0.1:20:40log").map_err(err)?;
    let records = scaling_sweep(&protected, &model, &grid).map_err(err)?;
    // Exact two-level oracle: Bloch vector e^{-2t}(cos 2ωt, sin 2ωt, 0) at ω = 0.
    let mut oracle_err = 0.0f64;
    for r in &records {
        let a = (-2.0 * r.t).exp();
        let want = qubit_qfi([a, 0.0, 0.0], [0.0, 2.0 * r.t * a, 0.0]);
        oracle_err = oracle_err.max(((r.qfi_unprotected - want) / want).abs());
    }
    ensure(oracle_err < 1e-3, || format!("unprotected QFI vs oracle {oracle_err:.2e}"))?;
    let tail: Vec<_> = records.iter().filter(|r| r.t >= 2.0 - 1e-9).collect();
    let ts: Vec<f64> = tail.iter().map(|r| r.t).collect();
    let up = loglog_slope(&ts, &tail.iter().map(|r| r.qfi_unprotected).collect::<Vec<_>>()).map_err(err)?;
    let p = loglog_slope(&ts, &tail.iter().map(|r| r.qfi_protected).collect::<Vec<_>>()).map_err(err)?;
    ensure(up <= 0.0, || format!("unprotected slope {up}"))?;
    ensure((p - 2.0).abs() <= 0.05, || format!("protected slope {p}"))?;
    Ok(format!("coherence deviation {worst:.1e}, slopes protected {p:.4} / unprotected {up:.2}"))
}

fn quadratic_member(rng: &mut impl Rng, couplings: &[HermitianOperator]) -> HermitianOperator {
    let d = couplings[0].dim();
    let mut g = CMatrix::identity(d, d) * C64::new(rng.random_range(-1.0..1.0), 0.0);
    for a in couplings {
        g += a.matrix() * C64::new(rng.random_range(-1.0..1.0), 0.0);
        for b in couplings {
            let ab = a.matrix() * b.matrix();
            g += (&ab + ab.adjoint()) * C64::new(rng.random_range(-1.0..1.0), 0.0);
            g += (&ab - ab.adjoint()) * C64::new(0.0, rng.random_range(-1.0..1.0));
        }
    }
    HermitianOperator::hermitian_part(&g)
}

fn kl_passes(code: &CodeSpace, couplings: &[HermitianOperator], g: &HermitianOperator) -> Result<bool, String> {
    let dressing = two_level_dressing(code, couplings, 1.0).map_err(err)?;
    let kl = verify_knill_laflamme(code, &dressing.lindblads.operators(), 1e-9).map_err(err)?;
    let signal = effective_generator(code, g).map_err(err)?.delta;
    Ok(kl.ok && signal.abs() > 1e-6)
}

fn kl_consistency() -> Check {
    let tol = Tolerances::default();
    let (mut positive, mut lowest_floor) = (0, f64::INFINITY);
    for idx in 0..50u64 {
        let mut rng = stream(77, idx);
        let d = rng.random_range(2..=4);
        let k = rng.random_range(1..=2);
        let couplings: Vec<HermitianOperator> = (0..k).map(|_| hermitian(&mut rng, d)).collect();
        let g = if idx % 2 == 0 { quadratic_member(&mut rng, &couplings) } else { hermitian(&mut rng, d) };
        let report = thm2_condition(&g, &couplings, &tol).map_err(err)?;

        let candidate = if report.verdict {
            let split = positive_negative_split(&report.g_perp, &tol).map_err(err)?;
            Some(purify_pair(&split.rho0, &split.rho1).map_err(err)?)
        } else {
            None
        };
        let found = match &candidate {
            Some(code) => kl_passes(code, &couplings, &g)?,
            None => false,
        };
        if report.verdict {
            ensure(found, || format!("instance {idx}: thm2 holds but the constructed code fails"))?;
            positive += 1;
            continue;
        }
        // Refinement: minimize the KL residual of {A, AA'} with a required signal.
        let anc = d;
        let (vals, _) = eigh(g.matrix());
        let spread = vals[vals.len() - 1] - vals[0];
        let mut ops = Vec::new();
        for a in &couplings {
            ops.push(lift(a.matrix(), anc));
            for b in &couplings {
                ops.push(lift(&(a.matrix() * b.matrix()), anc));
            }
        }
        let objective = CodeObjective {
            ops,
            signal: Some(SignalTarget {
                g: lift(g.matrix(), anc),
                min_signal: 0.25 * spread,
                weight: 1.0,
            }),
        };
        let search = search_codes(&objective, d, anc, 8, idx).map_err(err)?;
        let refined = match &search.best {
            Some(code) => kl_passes(code, &couplings, &g)?,
            None => false,
        };
        ensure(!refined && search.min_penalty > 1e-6, || {
            format!("instance {idx}: thm2 fails but search reached {:.2e}", search.min_penalty)
        })?;
        lowest_floor = lowest_floor.min(search.min_penalty);
    }
    Ok(format!("{positive} constructive codes pass, {} searches floor ≥ {lowest_floor:.2e}", 50 - positive))
}

fn leakage_order() -> Check {
    let s = spin1();
    let h0 = &s[2].square() + &s[0].scale(0.1);
    let r = perturbation_leakage(&h0, &s[2].square(), 1e-2).map_err(err)?;
    let exponent = r.exponent.ok_or("residuals at roundoff")?;
    ensure((exponent - 2.0).abs() <= 0.1, || format!("exponent {exponent}"))?;
    Ok(format!("exponent {exponent:.4}, max ratio {:.2e}", r.max_ratio))
}

fn hygiene() -> Check {
    let model = nv::nv_protected_model(Regime::FullThermal, 1.0, Some(0.5), 0.1).map_err(err)?;
    let rho0 = model.probe();
    let dt = model.default_dt();
    let traj = evolve_to_times(&rho0, &model.generator, &[2.0, 5.0], dt).map_err(err)?;
    let last = traj.states.last().unwrap();
    let drift = (last.trace().re - 1.0).abs().max(traj.max_trace_drift);
    let herm = (last - last.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    ensure(drift < 1e-8, || format!("trace drift {drift:.1e}"))?;
    ensure(herm < 1e-12, || format!("hermiticity {herm:.1e}"))?;
    ensure(traj.min_eigenvalue > -1e-10, || format!("min eigenvalue {:.1e}", traj.min_eigenvalue))?;

    let t = 2.0;
    let steps = [6.0e-3, 3.0e-3, 1.5e-3, 7.5e-4];
    let finals: Vec<CMatrix> = steps
        .iter()
        .map(|&h| evolve_to_times(&rho0, &model.generator, &[t], h).map(|tr| tr.states[0].clone()))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let diffs: Vec<f64> = finals.windows(2).map(|w| (&w[0] - &w[1]).norm()).collect();
    let order = diffs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    ensure(order >= 3.8, || format!("convergence order {order:.3} (differences {diffs:?})"))?;
    Ok(format!("trace drift {drift:.1e}, hermiticity {herm:.1e}, RK4 order {order:.3}"))
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 8] = [
        ("NV dephasing optimum", nv_optimum, Duration::from_secs(1)),
        ("sandwich certification", sandwich, Duration::from_secs(30)),
        ("verdict table", verdict_table, Duration::from_secs(120)),
        ("protected dynamics", protected_dynamics, Duration::from_secs(60)),
        ("unprotected baseline", unprotected_baseline, Duration::from_secs(60)),
        ("KL / thm2 consistency", kl_consistency, Duration::from_secs(300)),
        ("leakage order", leakage_order, Duration::from_secs(10)),
        ("numerical hygiene", hygiene, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > *budget => Err(format!("{msg}; over budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {} {name} ({:.2} s): {msg}", i + 1, elapsed.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name} ({:.2} s): {msg}", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any
//! failure.

use std::time::Instant;

use bwsolve::bridge_model::{check_parity, preset, BridgeSystem};
use bwsolve::evolve::{
    bona_smith_experiment, epsilon_continuation, kato_solve, oracle_solve_state,
    relative_discrepancy, SolverConfig,
};
use bwsolve::paralin::{complexify, ParalinearizedSystem};
use bwsolve::spectral_core::{SpectralFunction, StateVector, TorusGrid};
use bwsolve::suites::{
    check_le, check_range, check_stable, energy_suite, linear_exactness, operators_suite,
    parametrix_suite, Check,
};
use bwsolve::Result;

const EPS_PARA: f64 = 0.5;

struct Outcome {
    checks: Vec<Check>,
}

fn background(n: usize) -> Result<(BridgeSystem, StateVector)> {
    let g = TorusGrid::new(n)?;
    let sys = preset("mixed").unwrap().build(&g)?;
    let y = SpectralFunction::from_fn(&g, |x| 0.05 * x.sin() + 0.03 * (2.0 * x).cos());
    let yt = SpectralFunction::from_fn(&g, |x| 0.02 * x.cos());
    let th = SpectralFunction::from_fn(&g, |x| 0.05 * x.cos());
    let tt = SpectralFunction::from_fn(&g, |x| 0.01 * (2.0 * x).sin());
    Ok((sys, complexify(&y, &yt, &th, &tt)?))
}

/// Smooth band-limited data scaled to ‖V₀‖_{H^{s₁}} = amplitude.
fn small_data(g: &TorusGrid, amplitude: f64, s1: f64) -> Result<StateVector> {
    let y = SpectralFunction::from_fn(g, |x| x.sin() + 0.5 * (2.0 * x).cos());
    let yt = SpectralFunction::from_fn(g, |x| 0.3 * x.cos());
    let th = SpectralFunction::from_fn(g, |x| x.cos() - 0.4 * (3.0 * x).sin());
    let tt = SpectralFunction::from_fn(g, |x| 0.2 * (2.0 * x).sin());
    let v = complexify(&y, &yt, &th, &tt)?;
    Ok(v.scale(amplitude / v.sobolev_norm(s1)))
}

fn odd_data(g: &TorusGrid, amplitude: f64, s1: f64) -> Result<StateVector> {
    let y = SpectralFunction::from_fn(g, |x| x.sin() + 0.3 * (2.0 * x).sin());
    let yt = SpectralFunction::from_fn(g, |x| 0.2 * (3.0 * x).sin());
    let th = SpectralFunction::from_fn(g, |x| (2.0 * x).sin() - 0.4 * x.sin());
    let tt = SpectralFunction::from_fn(g, |x| 0.1 * x.sin());
    let v = complexify(&y, &yt, &th, &tt)?;
    Ok(v.scale(amplitude / v.sobolev_norm(s1)))
}

fn split(checks: &[Check], names: &[&str]) -> Vec<Check> {
    checks.iter().filter(|c| names.contains(&c.name.as_str())).cloned().collect()
}

fn criteria_1_2() -> Result<(Outcome, Outcome)> {
    let r = operators_suite(&[32, 64, 128, 256], EPS_PARA, 1.0)?;
    let c1 = split(
        &r.checks,
        &[
            "weyl_x_only_is_multiplication",
            "weyl_i_xi_is_derivative",
            "bony_weyl_equals_weyl_on_diagonal",
        ],
    );
    let c2 = r.checks.iter().filter(|c| !c1.contains(c)).cloned().collect();
    Ok((Outcome { checks: c1 }, Outcome { checks: c2 }))
}

fn criteria_3_4() -> Result<(Outcome, Outcome)> {
    let r = parametrix_suite(&background, &[32, 64, 128, 256], EPS_PARA, 2.0)?;
    let c3 = split(
        &r.checks,
        &[
            "eigen_identity_beam_and_wave",
            "m_minus1_offdiag_cancellation",
            "gauge_residual_stable",
            "gauge_free_residual_grows",
        ],
    );
    let c4 = r.checks.iter().filter(|c| !c3.contains(c)).cloned().collect();
    Ok((Outcome { checks: c3 }, Outcome { checks: c4 }))
}

fn criteria_5_6() -> Result<(Outcome, Outcome)> {
    let r = energy_suite(&background, &[64, 128, 256], EPS_PARA, 2.0, 100, 11)?;
    let c6 = split(&r.checks, &["beam_smoothing_eps_slope", "wave_smoothing_t_slope"]);
    let c5 = r.checks.iter().filter(|c| !c6.contains(c)).cloned().collect();
    Ok((Outcome { checks: c5 }, Outcome { checks: c6 }))
}

fn criterion_7() -> Result<Outcome> {
    let (k, o, drift) = linear_exactness(32, EPS_PARA)?;
    Ok(Outcome {
        checks: vec![
            check_le("beam_wave_modes_kato", k, 1e-8),
            check_le("beam_wave_modes_oracle", o, 1e-8),
            check_le("trivial_norm_drift_per_time", drift, 1e-8),
        ],
    })
}

fn criteria_8_9() -> Result<(Outcome, Outcome)> {
    let g = TorusGrid::new(128)?;
    let cfg = SolverConfig::default();
    let mut c8 = Vec::new();
    let mut c9 = Vec::new();
    for name in ["theta_xx_squared", "mixed"] {
        let sys = preset(name).unwrap().build(&g)?;
        let para = ParalinearizedSystem::new(&sys, EPS_PARA)?;
        let v0 = small_data(&g, 1e-2, cfg.ladder.s1)?;
        let kato = kato_solve(&para, &v0, &cfg)?;
        let orc = oracle_solve_state(&sys, &v0, &cfg)?;
        c8.push(check_le(
            &format!("{name}_relative_h_s1"),
            relative_discrepancy(&kato, &orc, cfg.ladder.s1)?,
            1e-4,
        ));
        if name == "theta_xx_squared" {
            let worst = kato.kato_ratios().into_iter().fold(0.0, f64::max);
            c9.push(check_le("headline_increment_ratio_max", worst, 0.5));
        }
    }
    let triv = ParalinearizedSystem::new(&BridgeSystem::trivial(&g), EPS_PARA)?;
    let run = kato_solve(&triv, &small_data(&g, 1e-2, cfg.ladder.s1)?, &cfg)?;
    c9.push(check_le(
        "trivial_sweeps_beyond_first",
        run.kato_increments.len() as f64 - 2.0,
        0.0,
    ));
    c9.push(check_le("trivial_second_increment", run.kato_increments[1], 0.0));
    Ok((Outcome { checks: c8 }, Outcome { checks: c9 }))
}

fn criterion_10() -> Result<Outcome> {
    let g = TorusGrid::new(64)?;
    let cfg = SolverConfig::default();
    let sys = preset("theta_xx_squared").unwrap().build(&g)?;
    let para = ParalinearizedSystem::new(&sys, EPS_PARA)?;
    let v0 = small_data(&g, 1e-2, cfg.ladder.s1)?;
    let sweep = epsilon_continuation(&para, &v0, &[1e-2, 1e-3, 1e-4], &cfg)?;
    let tiny = epsilon_continuation(&para, &v0, &[1e-6], &cfg)?;
    Ok(Outcome {
        checks: vec![
            check_range("gap_slope_in_eps", sweep.slope.unwrap_or(f64::NAN), 0.9, 1.1),
            check_le("eps_1e-6_relative_gap", tiny.relative_gaps[0], 1e-5),
        ],
    })
}

fn criterion_11() -> Result<Outcome> {
    let g = TorusGrid::new(64)?;
    let cfg = SolverConfig {
        t_final: 0.05,
        ..SolverConfig::default()
    };
    let sys = preset("theta_xx_squared").unwrap().build(&g)?;
    let para = ParalinearizedSystem::new(&sys, EPS_PARA)?;
    let y = SpectralFunction::from_fn(&g, |x| 1.0 / (1.2 - x.cos()));
    let y = &y - &SpectralFunction::constant(&g, y.coeff(0).re);
    let zero = SpectralFunction::zeros(&g);
    let v0 = complexify(&y, &zero, &y.derivative(1), &zero)?;
    let v0 = v0.scale(1e-2 / v0.sobolev_norm(cfg.ladder.s1));
    let r = bona_smith_experiment(&para, &v0, &[4, 8, 12, 16, 31], &[1e-4, 1e-5, 1e-6], &cfg)?;
    let max_modulus = r.moduli.iter().copied().fold(0.0, f64::max);
    Ok(Outcome {
        checks: vec![
            Check {
                name: "truncation_gaps_monotone".into(),
                value: r.truncation_gaps[0],
                bound: "nonincreasing in N".into(),
                pass: r.monotone && r.truncation_gaps[0] > 0.0,
            },
            check_le("perturbation_gap_at_1e-4", r.perturbation_gaps[0], 1e-2),
            check_le("continuity_modulus_max", max_modulus, 10.0),
            check_stable("continuity_modulus_across_sizes", &r.moduli, 0.25),
        ],
    })
}

fn criterion_12() -> Result<Outcome> {
    let g = TorusGrid::new(64)?;
    let cfg = SolverConfig::default();
    let sys = preset("parity").unwrap().build(&g)?;
    let para = ParalinearizedSystem::new(&sys, EPS_PARA)?;
    let v0 = odd_data(&g, 1e-2, cfg.ladder.s1)?;
    let kato = kato_solve(&para, &v0, &cfg)?;
    let orc = oracle_solve_state(&sys, &v0, &cfg)?;
    let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let damped = preset("damped").unwrap().build(&g)?;
    let dpara = ParalinearizedSystem::new(&damped, EPS_PARA)?;
    let long = SolverConfig {
        t_final: 1.0,
        ..cfg.clone()
    };
    let dk = kato_solve(&dpara, &small_data(&g, 1e-2, cfg.ladder.s1)?, &long)?;
    let dor = oracle_solve_state(&damped, &small_data(&g, 1e-2, cfg.ladder.s1)?, &long)?;
    let monotone = |e: &[f64]| {
        let rises = e.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-10)).count();
        let decay = e.last().unwrap() / e[0];
        (rises as f64, decay)
    };
    let (rk, dkr) = monotone(&dk.physical_energy);
    let (ro, dor_r) = monotone(&dor.physical_energy);
    Ok(Outcome {
        checks: vec![
            Check {
                name: "parity_system_passes_check".into(),
                value: check_parity(&sys) as u8 as f64,
                bound: "== 1".into(),
                pass: check_parity(&sys),
            },
            check_le("kato_reality_defect", sup(&kato.reality_defect), 1e-10),
            check_le("kato_parity_defect", sup(&kato.parity_defect), 1e-10),
            check_le("oracle_reality_defect", sup(&orc.reality_defect), 1e-10),
            check_le("oracle_parity_defect", sup(&orc.parity_defect), 1e-10),
            check_le("damped_kato_energy_rises", rk, 0.0),
            check_le("damped_oracle_energy_rises", ro, 0.0),
            check_le("damped_kato_energy_ratio", dkr, 1.0 - 1e-3),
            check_le("damped_oracle_energy_ratio", dor_r, 1.0 - 1e-3),
        ],
    })
}

fn report(id: usize, title: &str, result: Result<Outcome>, secs: f64) -> bool {
    match result {
        Ok(o) => {
            let pass = o.checks.iter().all(|c| c.pass);
            println!(
                "criterion {id:>2} [{}] {title} ({secs:.1} s)",
                if pass { "PASS" } else { "FAIL" }
            );
            for c in &o.checks {
                println!(
                    "    {} {} = {:.4e} ({})",
                    if c.pass { "ok  " } else { "FAIL" },
                    c.name,
                    c.value,
                    c.bound
                );
            }
            pass
        }
        Err(e) => {
            println!("criterion {id:>2} [FAIL] {title}: error {e}");
            false
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

fn pair(r: Result<(Outcome, Outcome)>) -> (Result<Outcome>, Result<Outcome>) {
    match r {
        Ok((a, b)) => (Ok(a), Ok(b)),
        Err(e) => {
            let msg = e.to_string();
            (Err(e), Err(bwsolve::Error::Config(msg)))
        }
    }
}

fn main() {
    let mut all = true;
    let (r, t) = timed(criteria_1_2);
    let (a, b) = pair(r);
    all &= report(1, "quantization correctness", a, t);
    all &= report(2, "symbolic-calculus residuals N-stable", b, t);
    let (r, t) = timed(criteria_3_4);
    let (a, b) = pair(r);
    all &= report(3, "diagonalization identities", a, t);
    all &= report(4, "parametrix contracts", b, t);
    let (r, t) = timed(criteria_5_6);
    let (a, b) = pair(r);
    all &= report(5, "norm equivalence and Garding constants", a, t);
    all &= report(6, "smoothing-rate law", b, t);
    let (r, t) = timed(criterion_7);
    all &= report(7, "linear exactness", r, t);
    let (r, t) = timed(criteria_8_9);
    let (a, b) = pair(r);
    all &= report(8, "oracle equivalence", a, t);
    all &= report(9, "Kato contraction", b, t);
    let (r, t) = timed(criterion_10);
    all &= report(10, "epsilon continuation", r, t);
    let (r, t) = timed(criterion_11);
    all &= report(11, "Bona-Smith and continuity", r, t);
    let (r, t) = timed(criterion_12);
    all &= report(12, "structure preservation", r, t);
    if all {
        println!("acceptance: all 12 criteria pass");
    } else {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
}

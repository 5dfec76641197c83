//! Verification suites: each runs a family of invariant checks and returns a
//! self-describing report of measured values, bounds and pass flags.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bridge_model::{check_parity, BridgeSystem};
use crate::error::Result;
use crate::evolve::{
    duhamel_heat_ratio, kato_solve, linear_solve, loglog_slope, oracle_solve, relative_discrepancy,
    time_grid, HeatBlock, SolverConfig,
};
use crate::linalg::CMatrix;
use crate::paralin::{complexify, realify, ParalinearizedSystem};
use crate::parametrix::{
    build_parametrix, conjugation_residual, eigen_identity_defect, equivalence_and_garding_report,
    gauge_residual,
};
use crate::quantize::{
    bony_weyl_quantize, composition_residual, estimate_operator_norm, remainder_bw_minus_weyl,
    weyl_quantize,
};
use crate::spectral_core::{block_sobolev_norm, SpectralFunction, StateVector, TorusGrid, C64};
use crate::symbol_calc::{FrequencyMultiplier as FM, SeparableSymbol};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub details: serde_json::Value,
}

impl SuiteReport {
    fn new(suite: &str, checks: Vec<Check>, details: serde_json::Value) -> Self {
        Self {
            suite: suite.into(),
            passed: checks.iter().all(|c| c.pass),
            checks,
            details,
        }
    }
}

pub fn check_le(name: &str, value: f64, bound: f64) -> Check {
    Check {
        name: name.into(),
        value,
        bound: format!("<= {bound:e}"),
        pass: value <= bound,
    }
}

pub fn check_range(name: &str, value: f64, lo: f64, hi: f64) -> Check {
    Check {
        name: name.into(),
        value,
        bound: format!("in [{lo}, {hi}]"),
        pass: (lo..=hi).contains(&value),
    }
}

/// Largest relative distance of the values from their median.
pub fn spread_about_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    if v.is_empty() {
        return 0.0;
    }
    let med = if v.len() % 2 == 1 {
        v[v.len() / 2]
    } else {
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    if med == 0.0 {
        return if v.iter().all(|x| *x == 0.0) { 0.0 } else { f64::INFINITY };
    }
    v.iter().map(|x| ((x - med) / med).abs()).fold(0.0, f64::max)
}

/// All values within `frac` of their median.
pub fn check_stable(name: &str, values: &[f64], frac: f64) -> Check {
    let s = spread_about_median(values);
    Check {
        name: name.into(),
        value: s,
        bound: format!("spread about median <= {frac}"),
        pass: s <= frac && values.iter().all(|v| v.is_finite()),
    }
}

/// Last over first value, required to exceed `factor` (growth with N).
pub fn check_grows(name: &str, values: &[f64], factor: f64) -> Check {
    let r = values.last().copied().unwrap_or(0.0) / values.first().copied().unwrap_or(1.0);
    Check {
        name: name.into(),
        value: r,
        bound: format!("last/first >= {factor}"),
        pass: r >= factor && values.windows(2).all(|w| w[1] > w[0]),
    }
}

fn columns(n: usize, f: impl Fn(&[C64]) -> Vec<C64>) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n {
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[k] = C64::new(1.0, 0.0);
        for (j, v) in f(&e).into_iter().enumerate() {
            m.set(j, k, v);
        }
    }
    m
}

fn fixed_symbols(grid: &TorusGrid) -> [SeparableSymbol; 3] {
    let f1 = SpectralFunction::from_fn(grid, |x| 1.0 + 0.2 * x.cos());
    let f2 = SpectralFunction::from_fn(grid, |x| 0.3 * x.sin());
    let f3 = SpectralFunction::from_fn(grid, |x| (0.1 * (2.0 * x).cos()).exp());
    [
        SeparableSymbol::term(f1, FM::Bracket(2.0)),
        SeparableSymbol::term(f2, FM::Power(1)),
        SeparableSymbol::term(f3, FM::Bracket(0.5)),
    ]
}

/// Quantization exactness and symbolic-calculus residual stability.
pub fn operators_suite(n_list: &[usize], eps_para: f64, s: f64) -> Result<SuiteReport> {
    let mut mult_err = 0.0f64;
    let mut deriv_err = 0.0f64;
    let mut diag_err = 0.0f64;
    let mut bw = vec![Vec::new(); 3];
    let mut comp = vec![Vec::new(); 3];
    for &n in n_list {
        let g = TorusGrid::new(n)?;
        let f = SpectralFunction::from_fn(&g, |x| 1.0 + 0.3 * x.cos() + 0.1 * (2.0 * x).sin());
        let exact = columns(n, |e| {
            let u = SpectralFunction::from_coeffs(&g, e.to_vec(), false).expect("length");
            f.mul_exact(&u).resample(&g).coeffs().to_vec()
        });
        mult_err = mult_err.max(weyl_quantize(&SeparableSymbol::x_only(f.clone())).matrix().sub(&exact).max_abs());
        let dx = columns(n, |e| {
            let u = SpectralFunction::from_coeffs(&g, e.to_vec(), false).expect("length");
            u.derivative(1).coeffs().to_vec()
        });
        let i_xi = SeparableSymbol::term(SpectralFunction::constant(&g, 1.0).scale(C64::new(0.0, 1.0)), FM::Power(1));
        deriv_err = deriv_err.max(weyl_quantize(&i_xi).matrix().sub(&dx).max_abs());
        let syms = fixed_symbols(&g);
        let mut a = syms[0].clone();
        for t in syms[1].terms() {
            a.push(t.coeff.clone(), t.mult.clone());
        }
        let d = weyl_quantize(&a).sub(&bony_weyl_quantize(&a, eps_para));
        diag_err = diag_err.max((0..n).map(|j| d.matrix().get(j, j).norm()).fold(0.0, f64::max));
        for (i, sym) in syms.iter().enumerate() {
            bw[i].push(estimate_operator_norm(&remainder_bw_minus_weyl(sym, eps_para), s, s + 2.0)?);
        }
        for (i, (p, q)) in [(0, 1), (1, 2), (0, 2)].iter().enumerate() {
            let (a, b) = (&syms[*p], &syms[*q]);
            let r = composition_residual(a, b, 2.0, eps_para)?;
            let gain = 2.0 - a.order() - b.order();
            comp[i].push(estimate_operator_norm(&r.interior(), s, s + gain)?);
        }
    }
    let mut checks = vec![
        check_le("weyl_x_only_is_multiplication", mult_err, 1e-12),
        check_le("weyl_i_xi_is_derivative", deriv_err, 1e-12),
        check_le("bony_weyl_equals_weyl_on_diagonal", diag_err, 1e-12),
    ];
    for i in 0..3 {
        checks.push(check_stable(&format!("weyl_minus_bw_symbol_{}", i + 1), &bw[i], 0.25));
        checks.push(check_stable(&format!("composition_pair_{}", i + 1), &comp[i], 0.25));
    }
    Ok(SuiteReport::new(
        "operators",
        checks,
        json!({"n_list": n_list, "s": s, "weyl_minus_bw": bw, "composition": comp}),
    ))
}

/// Builds the system and frozen background at a given grid size.
pub type Setup<'a> = &'a dyn Fn(usize) -> Result<(BridgeSystem, StateVector)>;

/// Diagonalization identities and parametrix contracts across N.
pub fn parametrix_suite(setup: Setup, n_list: &[usize], eps_para: f64, s: f64) -> Result<SuiteReport> {
    let mut eig = 0.0f64;
    let mut mcancel = 0.0f64;
    let (mut gauged, mut bare) = (Vec::new(), Vec::new());
    let mut reports = Vec::new();
    for &n in n_list {
        let (sys, vt) = setup(n)?;
        let para = ParalinearizedSystem::new(&sys, eps_para)?;
        let p = build_parametrix(&para, &vt, s)?;
        eig = eig
            .max(eigen_identity_defect(&p.beam.a))
            .max(eigen_identity_defect(&p.wave.a_w));
        mcancel = mcancel.max(p.beam.m_cancellation_defect()?);
        let (gr, br) = gauge_residual(&p.beam, eps_para, s)?;
        gauged.push(gr);
        bare.push(br);
        reports.push(conjugation_residual(&para, &p, &vt, s)?);
    }
    let col = |f: fn(&crate::parametrix::ConjugationReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
    let checks = vec![
        check_le("eigen_identity_beam_and_wave", eig, 1e-10),
        check_le("m_minus1_offdiag_cancellation", mcancel, 1e-10),
        check_stable("gauge_residual_stable", &gauged, 0.25),
        check_grows("gauge_free_residual_grows", &bare, 1.5),
        check_stable("psi_phi_minus_identity", &col(|r| r.psi_phi_norm), 0.25),
        check_stable("conjugation_residual_m", &col(|r| r.m_norm), 0.25),
        check_stable("offdiag_with_t", &col(|r| r.offdiag_norm), 0.25),
        check_grows("offdiag_without_t_grows", &col(|r| r.offdiag_without_t), 1.5),
    ];
    Ok(SuiteReport::new(
        "parametrix",
        checks,
        json!({"n_list": n_list, "s": s, "gauge_residual": gauged, "gauge_free": bare, "conjugation": reports}),
    ))
}

/// Norm equivalence, Garding and smoothing-rate laws.
pub fn energy_suite(
    setup: Setup,
    n_list: &[usize],
    eps_para: f64,
    sigma: f64,
    samples: usize,
    seed: u64,
) -> Result<SuiteReport> {
    let mut reps = Vec::new();
    let (mut tmin, mut tmax) = (f64::INFINITY, 0.0f64);
    for &n in n_list {
        let (sys, vt) = setup(n)?;
        let para = ParalinearizedSystem::new(&sys, eps_para)?;
        reps.push(equivalence_and_garding_report(&para, &vt, sigma, samples, seed)?);
        let g = TorusGrid::new(n)?;
        let triv = ParalinearizedSystem::new(&BridgeSystem::trivial(&g), eps_para)?;
        let tr = equivalence_and_garding_report(&triv, &StateVector::zeros(&g), sigma, samples, seed)?;
        tmin = tmin.min(tr.homogeneous_min);
        tmax = tmax.max(tr.homogeneous_max);
    }
    let e4 = (-4.0f64).exp();
    let heat_grid = TorusGrid::new(128)?;
    let eps = [1e-1, 1e-2, 1e-3, 1e-4];
    let ts = [0.1, 0.05, 0.02, 0.01];
    let beam: Vec<f64> = eps.iter().map(|&e| duhamel_heat_ratio(&heat_grid, HeatBlock::Beam, e, 0.1)).collect();
    let wave_t: Vec<f64> = ts.iter().map(|&t| duhamel_heat_ratio(&heat_grid, HeatBlock::Wave, 0.1, t)).collect();
    let beam_slope = loglog_slope(&eps, &beam).unwrap_or(f64::NAN);
    let wave_slope = loglog_slope(&ts, &wave_t).unwrap_or(f64::NAN);
    let col = |f: fn(&crate::parametrix::EquivalenceReport) -> f64| reps.iter().map(f).collect::<Vec<_>>();
    let checks = vec![
        check_stable("equivalence_constant_c_r", &col(|r| r.c_r), 0.25),
        check_stable("equivalence_upper", &col(|r| r.upper), 0.25),
        check_stable("equivalence_lower", &col(|r| r.lower), 0.25),
        check_stable("garding_ratio", &col(|r| r.garding_ratio), 0.25),
        check_stable("garding_defect", &col(|r| r.garding_defect), 0.25),
        check_range("trivial_ratio_min", tmin, e4 * (1.0 - 1e-12), 1.0),
        check_range("trivial_ratio_max", tmax, e4, 1.0 + 1e-12),
        check_range("beam_smoothing_eps_slope", beam_slope, -0.55, -0.45),
        check_range("wave_smoothing_t_slope", wave_slope, 0.70, 0.80),
    ];
    Ok(SuiteReport::new(
        "energy",
        checks,
        json!({"n_list": n_list, "sigma": sigma, "samples": samples, "reports": reps,
               "beam_ratios": beam, "wave_t_ratios": wave_t}),
    ))
}

/// Maximum over the listed modes of |ŷ(j, t) − cos(ω_j t)ŷ(j, 0)|, with
/// ω_j = j² (beam) and |j| (wave), for zero initial velocity.
fn mode_error(v0: &StateVector, v1: &StateVector, t: f64, modes: &[i64]) -> f64 {
    let (r0, r1) = (realify(v0), realify(v1));
    modes
        .iter()
        .map(|&j| {
            let wb = ((j * j) as f64 * t).cos();
            let ww = (j.abs() as f64 * t).cos();
            (r1.y.coeff(j) - r0.y.coeff(j) * wb)
                .norm()
                .max((r1.theta.coeff(j) - r0.theta.coeff(j) * ww).norm())
        })
        .fold(0.0, f64::max)
}

/// Linear exactness on the trivial system over [0, 1].
pub fn linear_exactness(n: usize, eps_para: f64) -> Result<(f64, f64, f64)> {
    let g = TorusGrid::new(n)?;
    let sys = BridgeSystem::trivial(&g);
    let para = ParalinearizedSystem::new(&sys, eps_para)?;
    let y = SpectralFunction::from_fn(&g, |x| x.sin() + 0.5 * (2.0 * x).sin() + 0.25 * (3.0 * x).cos());
    let th = SpectralFunction::from_fn(&g, |x| (2.0 * x).sin() - 0.5 * x.cos());
    let zero = SpectralFunction::zeros(&g);
    let v0 = complexify(&y, &zero, &th, &zero)?;
    let cfg = SolverConfig {
        t_final: 1.0,
        dt: Some(1e-3),
        ..SolverConfig::default()
    };
    let modes = [1, 2, 3];
    let kato = kato_solve(&para, &v0, &cfg)?;
    let k_err = mode_error(&v0, &StateVector::from_blocks(&g, kato.final_state())?, 1.0, &modes);
    let orc = oracle_solve(&sys, &y, &zero, &th, &zero, &cfg)?;
    let o_err = mode_error(&v0, &StateVector::from_blocks(&g, orc.final_state())?, 1.0, &modes);
    let (steps, _) = time_grid(&sys, &cfg)?;
    let path = vec![vec![C64::new(0.0, 0.0); 4 * n]; steps + 1];
    let lin = linear_solve(&para, &path, &v0, None, &cfg)?;
    let n0 = lin.norm_s1[0];
    let drift = lin
        .norm_s1
        .iter()
        .zip(&lin.times)
        .skip(1)
        .map(|(v, t)| ((v - n0) / n0).abs() / t)
        .fold(0.0, f64::max);
    Ok((k_err, o_err, drift))
}

/// Kato-versus-oracle agreement, Kato contraction and linear exactness.
pub fn oracle_suite(setup: Setup, n: usize, eps_para: f64, cfg: &SolverConfig) -> Result<SuiteReport> {
    let (sys, v0) = setup(n)?;
    let para = ParalinearizedSystem::new(&sys, eps_para)?;
    let kato = kato_solve(&para, &v0, cfg)?;
    let r = realify(&v0);
    let orc = oracle_solve(&sys, &r.y, &r.y_t, &r.theta, &r.theta_t, cfg)?;
    let disc = relative_discrepancy(&kato, &orc, cfg.ladder.s1)?;
    let ratios = kato.kato_ratios();
    let worst_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let g = TorusGrid::new(n)?;
    let triv = ParalinearizedSystem::new(&BridgeSystem::trivial(&g), eps_para)?;
    let tk = kato_solve(&triv, &v0, cfg)?;
    let (k_err, o_err, drift) = linear_exactness(32, eps_para)?;
    let checks = vec![
        check_le("kato_vs_oracle_relative_h_s1", disc, 1e-4),
        check_le("kato_increment_ratio_max", worst_ratio, 0.5),
        check_le("trivial_second_increment", tk.kato_increments.get(1).copied().unwrap_or(f64::NAN), 0.0),
        check_le("linear_modes_kato", k_err, 1e-8),
        check_le("linear_modes_oracle", o_err, 1e-8),
        check_le("trivial_flow_norm_drift_per_time", drift, 1e-8),
    ];
    Ok(SuiteReport::new(
        "oracle",
        checks,
        json!({"n_points": n, "t_final": cfg.t_final, "discrepancy": disc,
               "kato_increments": kato.kato_increments, "kato_ratios": ratios,
               "initial_norm_s1": block_sobolev_norm(&g, &v0.to_blocks(), cfg.ladder.s1),
               "parity_ok": check_parity(&sys)}),
    ))
}

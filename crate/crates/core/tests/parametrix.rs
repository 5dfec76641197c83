use bwsolve::bridge_model::{preset, BridgeSystem};
use bwsolve::paralin::{complexify, ParalinearizedSystem};
use bwsolve::parametrix::{
    beam_inverse_residual, build_beam_diagonalizer, build_parametrix, build_t_symbols,
    build_wave_diagonalizer, conjugation_residual, diagonalizing_entries, phi_difference_quotient,
    wave_offdiag_residual,
};
use bwsolve::spectral_core::{SpectralFunction, StateVector, TorusGrid, C64};
use bwsolve::suites::spread_about_median;
use bwsolve::symbol_calc::seminorm;

const EPS: f64 = 0.5;

fn smooth_state(g: &TorusGrid) -> StateVector {
    let y = SpectralFunction::from_fn(g, |x| 0.05 * x.sin() + 0.03 * (2.0 * x).cos());
    let yt = SpectralFunction::from_fn(g, |x| 0.02 * x.cos());
    let th = SpectralFunction::from_fn(g, |x| 0.05 * x.cos());
    let tt = SpectralFunction::from_fn(g, |x| 0.01 * (2.0 * x).sin());
    complexify(&y, &yt, &th, &tt).unwrap()
}

fn grows(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0]) && v[v.len() - 1] > 1.5 * v[0]
}

#[test]
fn lambda_for_constant_backgrounds() {
    assert!((diagonalizing_entries(0.1).0 - 1.2f64.sqrt()).abs() < 1e-15);
    assert!((diagonalizing_entries(0.105).0 - 1.1).abs() < 1e-15);
    let g = TorusGrid::new(16).unwrap();
    let w = build_wave_diagonalizer(&SpectralFunction::zeros(&g), EPS).unwrap();
    let id = bwsolve::quantize::SpectralOperator::identity(&g, 2);
    assert!(w.d_w.sub(&id).max_abs() < 1e-15);
}

#[test]
fn beam_inverse_residual_bounded_in_n() {
    let r: Vec<f64> = [32, 64, 128, 256]
        .iter()
        .map(|&n| {
            let g = TorusGrid::new(n).unwrap();
            let a = SpectralFunction::from_fn(&g, |x| 0.1 * x.cos());
            beam_inverse_residual(&build_beam_diagonalizer(&a, EPS).unwrap(), 2.0).unwrap()
        })
        .collect();
    assert!(r[0] > 0.0 && spread_about_median(&r) < 0.25, "{r:?}");
}

#[test]
fn wave_conjugation_removes_offdiagonal_growth() {
    let (mut conj, mut bare) = (Vec::new(), Vec::new());
    for n in [32, 64, 128] {
        let g = TorusGrid::new(n).unwrap();
        let mut sys = BridgeSystem::trivial(&g);
        sys.c = SpectralFunction::from_fn(&g, |x| 1.0 + 0.2 * x.sin());
        let para = ParalinearizedSystem::new(&sys, EPS).unwrap();
        let vt = StateVector::zeros(&g);
        let a_w = para.build_g_functions(&vt).a_w();
        assert!((&a_w - &SpectralFunction::from_fn(&g, |x| 0.1 * x.sin())).max_abs() < 1e-14);
        let wave = build_wave_diagonalizer(&a_w, EPS).unwrap();
        let (c, b) = wave_offdiag_residual(&para, &wave, &vt, 2.0).unwrap();
        conj.push(c);
        bare.push(b);
    }
    assert!(spread_about_median(&conj) < 0.25, "{conj:?}");
    assert!(grows(&bare), "{bare:?}");
}

#[test]
fn correctors_scale_linearly_with_background() {
    let g = TorusGrid::new(64).unwrap();
    let para = ParalinearizedSystem::new(&preset("mixed").unwrap().build(&g).unwrap(), EPS).unwrap();
    let beam = build_beam_diagonalizer(para.a(), EPS).unwrap();
    let v = smooth_state(&g);
    let r: Vec<f64> = [1.0, 1e-1, 1e-2]
        .iter()
        .map(|&t| {
            let (t1, t2) = build_t_symbols(&para.build_g_functions(&v.scale(t)), &beam);
            let n1 = seminorm(t1.entry(0, 0), -1.5, 0.6, 4).unwrap();
            let n2 = seminorm(t2.entry(0, 1), -1.5, 0.6, 4).unwrap();
            assert!(n1 > 0.0 && n2 > 0.0);
            n1 / t
        })
        .collect();
    assert!(spread_about_median(&r) < 1e-10, "{r:?}");
}

#[test]
fn trivial_conjugation_residual_vanishes() {
    let m: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            let g = TorusGrid::new(n).unwrap();
            let para = ParalinearizedSystem::new(&BridgeSystem::trivial(&g), EPS).unwrap();
            let vt = StateVector::zeros(&g);
            let p = build_parametrix(&para, &vt, 2.0).unwrap();
            conjugation_residual(&para, &p, &vt, 2.0).unwrap().m_norm
        })
        .collect();
    assert!(m.iter().all(|x| *x < 1e-12), "{m:?}");
}

#[test]
fn phi_time_derivative_converges() {
    let g = TorusGrid::new(64).unwrap();
    let para = ParalinearizedSystem::new(&preset("mixed").unwrap().build(&g).unwrap(), EPS).unwrap();
    let v0 = smooth_state(&g);
    let dir = {
        let y = SpectralFunction::from_fn(&g, |x| 0.02 * (2.0 * x).sin());
        let th = SpectralFunction::from_fn(&g, |x| 0.03 * x.sin());
        complexify(&y, &SpectralFunction::zeros(&g), &th, &y).unwrap()
    };
    let q: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&h| phi_difference_quotient(&para, &v0, &v0.add(&dir.scale(h)), h, 2.0).unwrap())
        .collect();
    assert!(q[2] > 0.0 && spread_about_median(&q) < 0.05, "{q:?}");
}

#[test]
fn modified_energy_vanishes_on_zero_and_constant_states() {
    let g = TorusGrid::new(32).unwrap();
    let para = ParalinearizedSystem::new(&preset("mixed").unwrap().build(&g).unwrap(), EPS).unwrap();
    let p = build_parametrix(&para, &smooth_state(&g), 2.0).unwrap();
    assert_eq!(p.modified_energy(&StateVector::zeros(&g)), 0.0);
    let para = ParalinearizedSystem::new(&BridgeSystem::trivial(&g), EPS).unwrap();
    let p = build_parametrix(&para, &StateVector::zeros(&g), 2.0).unwrap();
    let mut v = StateVector::zeros(&g);
    v.z.set_coeff(0, C64::new(0.3, 0.2));
    v.w.set_coeff(0, C64::new(-0.1, 0.5));
    assert!(p.modified_energy(&v).abs() < 1e-28);
}

#[test]
fn garding_form_on_a_high_beam_mode() {
    let g = TorusGrid::new(64).unwrap();
    let para = ParalinearizedSystem::new(&BridgeSystem::trivial(&g), EPS).unwrap();
    let sigma = 2.0;
    let p = build_parametrix(&para, &StateVector::zeros(&g), sigma).unwrap();
    let j = 9i64;
    let mut v = StateVector::zeros(&g);
    v.z.set_coeff(j, C64::new(1.0, 0.0));
    let form = p.garding_form(&v.to_blocks());
    let expect = (-4.0f64).exp() * (j as f64).powf(2.0 * sigma + 4.0);
    assert!(form > 0.0);
    assert!((form - expect).abs() < 1e-10 * expect, "{form} vs {expect}");
}

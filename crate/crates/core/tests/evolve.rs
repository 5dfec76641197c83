use bwsolve::bridge_model::{preset, BridgeSystem};
use bwsolve::evolve::{
    bona_smith_experiment, epsilon_continuation, kato_solve, linear_solve, oracle_solve,
    oracle_solve_state, relative_discrepancy, time_grid, SolverConfig,
};
use bwsolve::paralin::{complexify, realify, ParalinearizedSystem};
use bwsolve::spectral_core::{SpectralFunction, StateVector, TorusGrid, C64};
use bwsolve::Error;

const EPS: f64 = 0.5;

fn small_data(g: &TorusGrid, amplitude: f64) -> StateVector {
    let y = SpectralFunction::from_fn(g, |x| x.sin() + 0.5 * (2.0 * x).cos());
    let yt = SpectralFunction::from_fn(g, |x| 0.3 * x.cos());
    let th = SpectralFunction::from_fn(g, |x| x.cos() - 0.4 * (3.0 * x).sin());
    let tt = SpectralFunction::from_fn(g, |x| 0.2 * (2.0 * x).sin());
    let v = complexify(&y, &yt, &th, &tt).unwrap();
    v.scale(amplitude / v.sobolev_norm(SolverConfig::default().ladder.s1))
}

fn para(name: &str, g: &TorusGrid) -> ParalinearizedSystem {
    ParalinearizedSystem::new(&preset(name).unwrap().build(g).unwrap(), EPS).unwrap()
}

fn mode_error(g: &TorusGrid, dt: f64) -> f64 {
    let p = ParalinearizedSystem::new(&BridgeSystem::trivial(g), EPS).unwrap();
    let j = 7;
    let mut v0 = StateVector::zeros(g);
    v0.z.set_coeff(j, C64::new(1.0, 0.0));
    let cfg = SolverConfig {
        dt: Some(dt),
        t_final: 0.5,
        cfl_safety: 1.0,
        ..SolverConfig::default()
    };
    let (steps, _) = time_grid(&BridgeSystem::trivial(g), &cfg).unwrap();
    let path = vec![vec![C64::new(0.0, 0.0); 4 * g.n_points()]; steps + 1];
    let run = linear_solve(&p, &path, &v0, None, &cfg).unwrap();
    let z = StateVector::from_blocks(g, run.final_state()).unwrap().z;
    let exact = C64::new(0.0, -((j * j) as f64) * 0.5).exp();
    (z.coeff(j) - exact).norm()
}

#[test]
fn linear_solve_is_fourth_order() {
    let g = TorusGrid::new(32).unwrap();
    let (e1, e2) = (mode_error(&g, 0.01), mode_error(&g, 0.005));
    let order = (e1 / e2).log2();
    assert!((3.7..4.3).contains(&order), "{e1} {e2} {order}");
}

#[test]
fn oracle_reproduces_linear_modes_and_conserves_energy() {
    let g = TorusGrid::new(16).unwrap();
    let sys = BridgeSystem::trivial(&g);
    let cfg = SolverConfig {
        t_final: 1.0,
        dt: Some(1e-3),
        ..SolverConfig::default()
    };
    let y0 = SpectralFunction::from_fn(&g, |x| x.sin() + 0.5 * (3.0 * x).sin());
    let th0 = SpectralFunction::from_fn(&g, |x| (2.0 * x).sin());
    let zero = SpectralFunction::zeros(&g);
    let run = oracle_solve(&sys, &y0, &zero, &th0, &zero, &cfg).unwrap();
    let r = realify(&StateVector::from_blocks(&g, run.final_state()).unwrap());
    let y_exact = SpectralFunction::from_fn(&g, |x| 1f64.cos() * x.sin() + 0.5 * 9f64.cos() * (3.0 * x).sin());
    let th_exact = SpectralFunction::from_fn(&g, |x| 2f64.cos() * (2.0 * x).sin());
    assert!((&r.y - &y_exact).max_abs() < 1e-8);
    assert!((&r.theta - &th_exact).max_abs() < 1e-8);
    let e0 = run.physical_energy[0];
    let drift = run.physical_energy.iter().map(|e| ((e - e0) / e0).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-8, "{drift}");
}

#[test]
fn kato_agrees_with_oracle_on_forced_and_variable_coefficient_presets() {
    let g = TorusGrid::new(32).unwrap();
    let cfg = SolverConfig::default();
    for name in ["forced", "arioli_gazzola", "damped", "parity"] {
        let p = para(name, &g);
        let v0 = small_data(&g, 1e-2);
        let k = kato_solve(&p, &v0, &cfg).unwrap();
        let o = oracle_solve_state(p.system(), &v0, &cfg).unwrap();
        let d = relative_discrepancy(&k, &o, cfg.ladder.s1).unwrap();
        assert!(d < 1e-4, "{name}: {d}");
    }
}

#[test]
fn regularization_does_not_increase_growth() {
    let g = TorusGrid::new(32).unwrap();
    let p = para("theta_xx_squared", &g);
    let v0 = small_data(&g, 1e-2);
    let c: Vec<f64> = [0.0, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&e| {
            let cfg = SolverConfig {
                epsilon: e,
                ..SolverConfig::default()
            };
            kato_solve(&p, &v0, &cfg).unwrap().growth_constant
        })
        .collect();
    assert!(c[0].abs() < 1.0, "{c:?}");
    assert!(c[1..].iter().all(|x| x.is_finite() && *x <= c[0] + 1e-9), "{c:?}");
}

#[test]
fn band_limited_truncations_coincide() {
    let g = TorusGrid::new(32).unwrap();
    let p = para("theta_xx_squared", &g);
    let cfg = SolverConfig {
        t_final: 0.02,
        ..SolverConfig::default()
    };
    let v0 = small_data(&g, 1e-2);
    let r = bona_smith_experiment(&p, &v0, &[4, 8, 15], &[1e-4], &cfg).unwrap();
    assert!(r.truncation_gaps.iter().all(|x| *x <= 1e-12 * 1e-2), "{:?}", r.truncation_gaps);
    assert!(r.moduli[0] > 0.1 && r.moduli[0] < 10.0);
}

#[test]
fn zero_mode_data_is_unaffected_by_regularization() {
    let g = TorusGrid::new(16).unwrap();
    let p = ParalinearizedSystem::new(&BridgeSystem::trivial(&g), EPS).unwrap();
    let one = SpectralFunction::constant(&g, 1e-2);
    let zero = SpectralFunction::zeros(&g);
    let v0 = complexify(&one, &zero, &one, &zero).unwrap();
    let r = epsilon_continuation(&p, &v0, &[1e-1, 1e-2], &SolverConfig::default()).unwrap();
    assert!(r.gaps.iter().all(|x| *x == 0.0), "{:?}", r.gaps);
}

#[test]
fn preconditions_are_reported() {
    let g = TorusGrid::new(32).unwrap();
    let p = para("theta_xx_squared", &g);
    let big = small_data(&g, 50.0);
    assert!(matches!(kato_solve(&p, &big, &SolverConfig::default()), Err(Error::Smallness { .. })));
    let mut sys = BridgeSystem::trivial(&g);
    sys.c = SpectralFunction::from_fn(&g, |x| 0.5 + x.cos());
    assert!(matches!(
        oracle_solve_state(&sys, &small_data(&g, 1e-2), &SolverConfig::default()),
        Err(Error::Ellipticity { .. })
    ));
    let eps_run = SolverConfig {
        epsilon: 1e-3,
        ..SolverConfig::default()
    };
    assert!(oracle_solve_state(p.system(), &small_data(&g, 1e-2), &eps_run).is_err());
}

#[test]
fn modified_energy_is_monitored_on_request() {
    let g = TorusGrid::new(32).unwrap();
    let p = para("mixed", &g);
    let cfg = SolverConfig {
        monitor_every: 5,
        ..SolverConfig::default()
    };
    let run = kato_solve(&p, &small_data(&g, 1e-2), &cfg).unwrap();
    let monitored: Vec<usize> = run
        .modified_energy
        .iter()
        .enumerate()
        .filter_map(|(k, e)| e.map(|_| k))
        .collect();
    assert_eq!(monitored[0], 0);
    assert!(monitored.windows(2).all(|w| w[1] - w[0] == 5));
    assert!(run.energy_growth_constant.unwrap().is_finite());
}

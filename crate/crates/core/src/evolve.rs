//! Time integration: the regularized frozen-coefficient linear solver, the
//! Kato iteration, the direct real-variable oracle, and the ε and
//! Bona-Smith experiments.
//!
//! Every solver works on the flat 4-block layout [z, z̄, w, w̄] and advances
//! with Strang splitting: half a heat step, one RK4 step of the
//! paradifferential part, half a heat step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bridge_model::{check_ellipticity, check_radius_condition, BridgeSystem, JetFields};
use crate::error::{Error, Result};
use crate::paralin::{complexify, realify, ParalinearizedSystem, RealState};
use crate::parametrix::{build_parametrix, random_state, SAMPLE_BAND};
use crate::quantize::SpectralOperator;
use crate::spectral_core::{
    block_sobolev_norm, inner_product, reality_defect, RegularityLadder, SpectralFunction,
    StateVector, TorusGrid, C64,
};

/// Stability bound of classical RK4 on the imaginary axis (2√2, rounded down).
pub const RK4_IMAGINARY_BOUND: f64 = 2.8;
pub const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Time step; `None` takes cfl_safety times the CFL limit.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub epsilon: f64,
    pub cfl_safety: f64,
    /// Kato stops once the increment is below kato_tol·r, r = 2‖V₀‖_{H^{s₁}}.
    pub kato_tol: f64,
    pub kato_max_iter: usize,
    /// Frozen operators are rebuilt every this many time nodes.
    pub rebuild_every: usize,
    /// Modified energy is recorded every this many nodes; 0 disables it.
    pub monitor_every: usize,
    pub ladder: RegularityLadder,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: None,
            t_final: 0.1,
            epsilon: 0.0,
            cfl_safety: 0.5,
            kato_tol: 1e-10,
            kato_max_iter: 30,
            rebuild_every: 1,
            monitor_every: 0,
            ladder: RegularityLadder::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad("t_final must be positive");
        }
        if !(self.epsilon >= 0.0) {
            return bad("epsilon must be nonnegative");
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad("cfl_safety must lie in (0, 1]");
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return bad("dt must be positive");
            }
        }
        if !(self.kato_tol > 0.0) || self.kato_max_iter == 0 || self.rebuild_every == 0 {
            return bad("kato_tol, kato_max_iter and rebuild_every must be positive");
        }
        self.ladder.validate()
    }
}

/// dt limit √(max b)·j_max²·dt ≤ 2.8 of the beam block.
pub fn cfl_limit(sys: &BridgeSystem) -> f64 {
    let jm = sys.grid.j_max() as f64;
    RK4_IMAGINARY_BOUND / (sys.b.max_real().max(0.0).sqrt() * jm * jm)
}

/// (number of steps, step) covering [0, t_final] with a step no larger than
/// the requested one.
pub fn time_grid(sys: &BridgeSystem, cfg: &SolverConfig) -> Result<(usize, f64)> {
    let limit = cfg.cfl_safety * cfl_limit(sys);
    let dt = cfg.dt.unwrap_or(limit);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let steps = ((cfg.t_final / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok((steps, cfg.t_final / steps as f64))
}

/// j⁴ on the beam blocks, j² on the wave blocks.
pub fn heat_rate(block: usize, j: i64) -> f64 {
    let j = j as f64;
    if block < 2 {
        j.powi(4)
    } else {
        j * j
    }
}

/// e^{−ετj⁴} on the beam blocks, e^{−ετj²} on the wave blocks.
pub fn heat_multiplier(block: usize, j: i64, eps: f64, tau: f64) -> f64 {
    (-eps * tau * heat_rate(block, j)).exp()
}

pub fn heat_factor(grid: &TorusGrid, eps: f64, tau: f64) -> Result<SpectralOperator> {
    if !(eps >= 0.0 && tau >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "heat factor needs eps, tau >= 0, got {eps}, {tau}"
        )));
    }
    Ok(SpectralOperator::diagonal(grid, 4, 0.0, |b, j| {
        C64::new(heat_multiplier(b, j, eps, tau), 0.0)
    }))
}

fn apply_heat(grid: &TorusGrid, v: &mut [C64], eps: f64, tau: f64) {
    if eps == 0.0 {
        return;
    }
    let n = grid.n_points();
    for (i, c) in v.iter_mut().enumerate() {
        *c *= heat_multiplier(i / n, grid.mode(i % n), eps, tau);
    }
}

/// Which smoothing law to probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatBlock {
    Beam,
    Wave,
}

/// sup over modes of ‖∫₀ᵗ e^{−ε(t−t′)L}f dt′‖_{H^σ}/‖f‖_{L^∞H^{σ−g}} for
/// time-constant f, with L = ∂⁴, g = 2 (beam) or L = −∂², g = 1/2 (wave).
pub fn duhamel_heat_ratio(grid: &TorusGrid, block: HeatBlock, eps: f64, t: f64) -> f64 {
    let (b, gain) = match block {
        HeatBlock::Beam => (0, 2.0),
        HeatBlock::Wave => (2, 0.5),
    };
    (1..=grid.j_max())
        .map(|j| {
            let rate = heat_rate(b, j);
            let integral = -(-eps * t * rate).exp_m1() / (eps * rate);
            (1.0 + (j * j) as f64).powf(gain / 2.0) * integral
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub solver: String,
    pub n_points: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub times: Vec<f64>,
    /// ‖V(t)‖_{H^{s₁}}
    pub norm_s1: Vec<f64>,
    /// ½(‖yₜ‖² + ‖θₜ‖² − ⟨𝓑y, y⟩ − ⟨𝓒θ, θ⟩) on Fourier coefficients
    pub physical_energy: Vec<f64>,
    /// |V|²_{V,s₁} at monitored nodes
    pub modified_energy: Vec<Option<f64>>,
    pub reality_defect: Vec<f64>,
    /// max of the odd defects of y and θ
    pub parity_defect: Vec<f64>,
    /// sup_t ‖Vₙ − Vₙ₋₁‖_{H^{s₁}} per Kato sweep, starting with ‖V₁‖
    pub kato_increments: Vec<f64>,
    /// max over t > 0 of ln(‖V(t)‖_{H^{s₁}}/‖V₀‖_{H^{s₁}})/t
    pub growth_constant: f64,
    /// max over monitored intervals of (Δ|V|²/Δt)/‖V‖²_{H^{s₁}}
    pub energy_growth_constant: Option<f64>,
    pub termination: String,
    #[serde(skip)]
    pub trajectory: Vec<Vec<C64>>,
}

impl RunResult {
    pub fn final_state(&self) -> &[C64] {
        self.trajectory.last().expect("nonempty trajectory")
    }

    pub fn kato_ratios(&self) -> Vec<f64> {
        self.kato_increments
            .windows(2)
            .map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] })
            .collect()
    }
}

/// max_t ‖a(t) − b(t)‖_{H^s} / max_t ‖b(t)‖_{H^s}.
pub fn relative_discrepancy(a: &RunResult, b: &RunResult, s: f64) -> Result<f64> {
    if a.trajectory.len() != b.trajectory.len() {
        return Err(Error::Dimension {
            expected: b.trajectory.len(),
            got: a.trajectory.len(),
        });
    }
    let grid = TorusGrid::new(a.n_points)?;
    Ok(sup_gap(&grid, &a.trajectory, &b.trajectory, s) / sup_norm(&grid, &b.trajectory, s))
}

fn sup_gap(grid: &TorusGrid, a: &[Vec<C64>], b: &[Vec<C64>], s: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| block_sobolev_norm(grid, &sub(x, y), s))
        .fold(0.0, f64::max)
}

fn sup_norm(grid: &TorusGrid, a: &[Vec<C64>], s: f64) -> f64 {
    a.iter().map(|x| block_sobolev_norm(grid, x, s)).fold(0.0, f64::max)
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn axpy(y: &[C64], a: f64, x: &[C64]) -> Vec<C64> {
    y.iter().zip(x).map(|(p, q)| p + q * a).collect()
}

/// Value of a node path at node k plus frac ∈ {0, ½, 1}; midpoints use
/// four-point cubic interpolation, one-sided at the ends.
fn path_at(path: &[Vec<C64>], k: usize, frac: f64) -> Vec<C64> {
    if frac == 0.0 {
        return path[k].clone();
    }
    if frac == 1.0 {
        return path[k + 1].clone();
    }
    let last = path.len() - 1;
    let (idx, w): ([usize; 4], [f64; 4]) = if last < 3 {
        return path[k].iter().zip(&path[k + 1]).map(|(a, b)| (a + b) * 0.5).collect();
    } else if k == 0 {
        ([0, 1, 2, 3], [5.0, 15.0, -5.0, 1.0])
    } else if k + 1 == last {
        ([last - 3, last - 2, last - 1, last], [1.0, -5.0, 15.0, 5.0])
    } else {
        ([k - 1, k, k + 1, k + 2], [-1.0, 9.0, 9.0, -1.0])
    };
    (0..path[k].len())
        .map(|i| idx.iter().zip(&w).map(|(&p, &c)| path[p][i] * c).sum::<C64>() / 16.0)
        .collect()
}

/// Strang-split RK4 from v0 over `steps` steps; `rhs(k, frac, t, v)`
/// evaluates the paradifferential part at node k plus frac.
fn integrate(
    grid: &TorusGrid,
    v0: Vec<C64>,
    steps: usize,
    dt: f64,
    eps: f64,
    guard_s: f64,
    mut rhs: impl FnMut(usize, f64, f64, &[C64]) -> Result<Vec<C64>>,
) -> Result<Vec<Vec<C64>>> {
    let n0 = block_sobolev_norm(grid, &v0, guard_s);
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push(v0);
    for k in 0..steps {
        let t = k as f64 * dt;
        let mut v = traj[k].clone();
        apply_heat(grid, &mut v, eps, 0.5 * dt);
        let k1 = rhs(k, 0.0, t, &v)?;
        let k2 = rhs(k, 0.5, t + 0.5 * dt, &axpy(&v, 0.5 * dt, &k1))?;
        let k3 = rhs(k, 0.5, t + 0.5 * dt, &axpy(&v, 0.5 * dt, &k2))?;
        let k4 = rhs(k, 1.0, t + dt, &axpy(&v, dt, &k3))?;
        for i in 0..v.len() {
            v[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
        apply_heat(grid, &mut v, eps, 0.5 * dt);
        let t1 = t + dt;
        if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite { t: t1 });
        }
        let norm = block_sobolev_norm(grid, &v, guard_s);
        if n0 > 0.0 && norm > BLOWUP_FACTOR * n0 {
            return Err(Error::BlowUp { t: t1, norm });
        }
        traj.push(v);
    }
    Ok(traj)
}

fn hermitian_defect(u: &SpectralFunction) -> f64 {
    let h = u.grid().n_points() as i64 / 2;
    (-h + 1..h)
        .map(|j| (u.coeff(j) - u.coeff(-j).conj()).norm())
        .fold(0.0, f64::max)
}

pub fn physical_energy(sys: &BridgeSystem, r: &RealState) -> f64 {
    let ip = |a: &SpectralFunction, b: &SpectralFunction| inner_product(a, b).map(|c| c.re).unwrap_or(f64::NAN);
    0.5 * (ip(&r.y_t, &r.y_t) + ip(&r.theta_t, &r.theta_t)
        - ip(&sys.beam_operator(&r.y), &r.y)
        - ip(&sys.wave_operator(&r.theta), &r.theta))
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    solver: &str,
    sys: &BridgeSystem,
    para: Option<&ParalinearizedSystem>,
    traj: Vec<Vec<C64>>,
    reality: Option<Vec<f64>>,
    dt: f64,
    cfg: &SolverConfig,
    increments: Vec<f64>,
    termination: &str,
) -> RunResult {
    let grid = sys.grid;
    let s1 = cfg.ladder.s1;
    let times: Vec<f64> = (0..traj.len()).map(|k| k as f64 * dt).collect();
    let norms: Vec<f64> = traj.iter().map(|v| block_sobolev_norm(&grid, v, s1)).collect();
    let mut energy = Vec::with_capacity(traj.len());
    let mut parity = Vec::with_capacity(traj.len());
    for v in &traj {
        let r = realify(&StateVector::from_blocks(&grid, v).expect("block length"));
        energy.push(physical_energy(sys, &r));
        parity.push(r.y.odd_defect().max(r.theta.odd_defect()));
    }
    let reality = reality.unwrap_or_else(|| traj.iter().map(|v| reality_defect(&grid, v)).collect());
    let mut modified = vec![None; traj.len()];
    if let (Some(p), true) = (para, cfg.monitor_every > 0) {
        for k in (0..traj.len()).step_by(cfg.monitor_every) {
            let sv = StateVector::from_blocks(&grid, &traj[k]).expect("block length");
            if let Ok(par) = build_parametrix(p, &sv, s1) {
                modified[k] = Some(par.modified_energy(&sv));
            }
        }
    }
    let mut egrowth: Option<f64> = None;
    let mon: Vec<usize> = (0..traj.len()).filter(|&k| modified[k].is_some()).collect();
    for w in mon.windows(2) {
        let (a, b) = (w[0], w[1]);
        let rate = (modified[b].unwrap() - modified[a].unwrap()) / (times[b] - times[a]);
        let base = norms[a].powi(2).max(1e-300);
        egrowth = Some(egrowth.map_or(rate / base, |g: f64| g.max(rate / base)));
    }
    let growth = norms
        .iter()
        .zip(&times)
        .skip(1)
        .filter(|_| norms[0] > 0.0)
        .map(|(n, t)| (n / norms[0]).ln() / t)
        .fold(f64::NEG_INFINITY, f64::max);
    RunResult {
        solver: solver.into(),
        n_points: grid.n_points(),
        dt,
        n_steps: traj.len() - 1,
        times,
        norm_s1: norms,
        physical_energy: energy,
        modified_energy: modified,
        reality_defect: reality,
        parity_defect: parity,
        kato_increments: increments,
        growth_constant: if growth.is_finite() { growth } else { 0.0 },
        energy_growth_constant: egrowth,
        termination: termination.into(),
        trajectory: traj,
    }
}

fn frozen_apply(para: &ParalinearizedSystem, vt: &[C64], v: &[C64]) -> Result<Vec<C64>> {
    let sv = StateVector::from_blocks(para.grid(), vt)?;
    Ok(para.frozen_operator(&sv).matvec(v))
}

/// ∂ₜV = (𝔄(Ṽ) + 𝔅(Ṽ))V + 𝕽(t) − εΔV along a given node path Ṽ and
/// source 𝕽 (both sampled on the solver's time nodes).
pub fn linear_solve(
    para: &ParalinearizedSystem,
    vt_path: &[Vec<C64>],
    v0: &StateVector,
    source: Option<&[Vec<C64>]>,
    cfg: &SolverConfig,
) -> Result<RunResult> {
    cfg.validate()?;
    let sys = para.system();
    let (steps, dt) = time_grid(sys, cfg)?;
    for p in std::iter::once(vt_path).chain(source) {
        if p.len() != steps + 1 {
            return Err(Error::Dimension {
                expected: steps + 1,
                got: p.len(),
            });
        }
    }
    let k_reb = cfg.rebuild_every;
    let traj = integrate(&sys.grid, v0.to_blocks(), steps, dt, cfg.epsilon, cfg.ladder.s1, |k, frac, _, v| {
        let vt = if k_reb == 1 {
            path_at(vt_path, k, frac)
        } else {
            vt_path[k - k % k_reb].clone()
        };
        let pair = para.assemble_frak(&StateVector::from_blocks(para.grid(), &vt)?);
        let mut out = pair.0.apply(v);
        out.iter_mut().zip(pair.1.apply(v)).for_each(|(o, b)| *o += b);
        if let Some(src) = source {
            out.iter_mut().zip(path_at(src, k, frac)).for_each(|(o, s)| *o += s);
        }
        Ok(out)
    })?;
    Ok(summarize("linear", sys, Some(para), traj, None, dt, cfg, vec![], "completed"))
}

/// sup over grid points and the six jets of the realified data.
pub fn jet_sup(v: &StateVector) -> f64 {
    let r = realify(v);
    JetFields::new(&r.y, &r.theta)
        .vals
        .iter()
        .flatten()
        .fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Radius used for the smallness precondition: twice the data's jet sup.
pub fn data_radius(v: &StateVector) -> f64 {
    (2.0 * jet_sup(v)).max(1e-300)
}

/// One Kato sweep: solve ∂ₜV = 𝔐(Ṽ)V + ℛ(Ṽ) + G with Ṽ the previous
/// iterate, written as full_rhs(Ṽ) + 𝔐(Ṽ)(V − Ṽ).
fn kato_sweep(
    para: &ParalinearizedSystem,
    prev: Option<&[Vec<C64>]>,
    v0: &[C64],
    steps: usize,
    dt: f64,
    cfg: &SolverConfig,
) -> Result<Vec<Vec<C64>>> {
    let grid = *para.grid();
    let linear = para.system().is_linear();
    let k_reb = cfg.rebuild_every;
    integrate(&grid, v0.to_vec(), steps, dt, cfg.epsilon, cfg.ladder.s1, |k, frac, t, v| {
        if linear {
            return para.full_rhs_blocks(v, t);
        }
        let vt = match prev {
            Some(p) => path_at(p, k, frac),
            None => vec![C64::new(0.0, 0.0); v.len()],
        };
        let frozen_at = match prev {
            Some(p) if k_reb > 1 => p[k - k % k_reb].clone(),
            _ => vt.clone(),
        };
        let mut out = para.full_rhs_blocks(&vt, t)?;
        let corr = frozen_apply(para, &frozen_at, &sub(v, &vt))?;
        out.iter_mut().zip(corr).for_each(|(o, c)| *o += c);
        Ok(out)
    })
}

/// Kato iteration (𝒫)ₙ from V₀ until the sweep increment falls below
/// kato_tol·r with r = 2‖V₀‖_{H^{s₁}}.
pub fn kato_solve(para: &ParalinearizedSystem, v0: &StateVector, cfg: &SolverConfig) -> Result<RunResult> {
    cfg.validate()?;
    let sys = para.system();
    check_ellipticity(sys)?;
    if !sys.f2.is_zero() {
        check_radius_condition(sys, data_radius(v0), 64)?;
    }
    let (steps, dt) = time_grid(sys, cfg)?;
    let grid = sys.grid;
    let s1 = cfg.ladder.s1;
    let vb = v0.to_blocks();
    let r = 2.0 * block_sobolev_norm(&grid, &vb, s1);
    let threshold = cfg.kato_tol * r;
    let mut current = kato_sweep(para, None, &vb, steps, dt, cfg)?;
    let mut increments = vec![sup_norm(&grid, &current, s1)];
    for sweep in 2..=cfg.kato_max_iter.max(2) {
        let next = kato_sweep(para, Some(&current), &vb, steps, dt, cfg)?;
        let inc = sup_gap(&grid, &next, &current, s1);
        let prev = *increments.last().unwrap();
        increments.push(inc);
        current = next;
        if inc <= threshold {
            return Ok(summarize("kato", sys, Some(para), current, None, dt, cfg, increments, "converged"));
        }
        if sweep > 2 && inc > prev {
            return Err(Error::KatoDivergence {
                sweep,
                increment: inc,
                previous: prev,
            });
        }
    }
    Err(Error::KatoMaxIter {
        sweeps: cfg.kato_max_iter,
        increment: *increments.last().unwrap(),
    })
}

fn real_rhs(sys: &BridgeSystem, s: &RealState, t: f64) -> RealState {
    let mut ytt = &sys.beam_operator(&s.y) + &sys.f1.eval_dealiased(&s.y, &s.theta);
    ytt = &ytt + &(&s.y_t * sys.alpha);
    let mut ttt = &sys.wave_operator(&s.theta) + &sys.f2.eval_dealiased(&s.y, &s.theta);
    ttt = &ttt + &(&s.theta_t * sys.beta);
    let fb = sys.gamma * sys.f_b.eval(t);
    let fw = sys.delta * sys.f_w.eval(t);
    ytt.set_coeff(0, ytt.coeff(0) + fb);
    ttt.set_coeff(0, ttt.coeff(0) + fw);
    ytt.symmetrize();
    ttt.symmetrize();
    RealState {
        y: s.y_t.clone(),
        y_t: ytt,
        theta: s.theta_t.clone(),
        theta_t: ttt,
    }
}

fn real_axpy(s: &RealState, a: f64, d: &RealState) -> RealState {
    RealState {
        y: &s.y + &(&d.y * a),
        y_t: &s.y_t + &(&d.y_t * a),
        theta: &s.theta + &(&d.theta * a),
        theta_t: &s.theta_t + &(&d.theta_t * a),
    }
}

fn real_norm(s: &RealState) -> f64 {
    [&s.y, &s.y_t, &s.theta, &s.theta_t]
        .iter()
        .map(|u| u.sobolev_norm(0.0).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Method of lines on (y, yₜ, θ, θₜ) with Galerkin linear terms, de-aliased
/// products and classical RK4; the unregularized system only.
pub fn oracle_solve(
    sys: &BridgeSystem,
    y0: &SpectralFunction,
    y1: &SpectralFunction,
    theta0: &SpectralFunction,
    theta1: &SpectralFunction,
    cfg: &SolverConfig,
) -> Result<RunResult> {
    cfg.validate()?;
    if cfg.epsilon != 0.0 {
        return Err(Error::Config("the oracle integrates the unregularized system; set epsilon = 0".into()));
    }
    check_ellipticity(sys)?;
    let (steps, dt) = time_grid(sys, cfg)?;
    let mut s = RealState {
        y: y0.clone(),
        y_t: y1.clone(),
        theta: theta0.clone(),
        theta_t: theta1.clone(),
    };
    let n0 = real_norm(&s);
    let mut states = vec![s.clone()];
    for k in 0..steps {
        let t = k as f64 * dt;
        let k1 = real_rhs(sys, &s, t);
        let k2 = real_rhs(sys, &real_axpy(&s, 0.5 * dt, &k1), t + 0.5 * dt);
        let k3 = real_rhs(sys, &real_axpy(&s, 0.5 * dt, &k2), t + 0.5 * dt);
        let k4 = real_rhs(sys, &real_axpy(&s, dt, &k3), t + dt);
        s = real_axpy(&s, dt / 6.0, &k1);
        s = real_axpy(&s, dt / 3.0, &k2);
        s = real_axpy(&s, dt / 3.0, &k3);
        s = real_axpy(&s, dt / 6.0, &k4);
        let norm = real_norm(&s);
        if !norm.is_finite() {
            return Err(Error::NonFinite { t: t + dt });
        }
        if n0 > 0.0 && norm > BLOWUP_FACTOR * n0 {
            return Err(Error::BlowUp { t: t + dt, norm });
        }
        states.push(s.clone());
    }
    let reality = states
        .iter()
        .map(|r| {
            [&r.y, &r.y_t, &r.theta, &r.theta_t]
                .iter()
                .map(|u| hermitian_defect(u))
                .fold(0.0, f64::max)
        })
        .collect();
    let traj = states
        .iter()
        .map(|r| complexify(&r.y, &r.y_t, &r.theta, &r.theta_t).map(|v| v.to_blocks()))
        .collect::<Result<Vec<_>>>()?;
    let mut res = summarize("oracle", sys, None, traj, Some(reality), dt, cfg, vec![], "completed");
    for (p, r) in res.parity_defect.iter_mut().zip(&states) {
        *p = r.y.odd_defect().max(r.theta.odd_defect());
    }
    Ok(res)
}

/// Oracle run from complex data.
pub fn oracle_solve_state(sys: &BridgeSystem, v0: &StateVector, cfg: &SolverConfig) -> Result<RunResult> {
    let r = realify(v0);
    oracle_solve(sys, &r.y, &r.y_t, &r.theta, &r.theta_t, cfg)
}

fn project_state(v: &StateVector, m: i64) -> StateVector {
    StateVector {
        z: v.z.project(m),
        w: v.w.project(m),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BonaSmithReport {
    pub t_final: f64,
    pub n_list: Vec<i64>,
    /// ‖V_N − V_{N_max}‖_{L^∞H^{s₁}} per truncation, last entry 0
    pub truncation_gaps: Vec<f64>,
    pub monotone: bool,
    pub deltas: Vec<f64>,
    /// ‖V^δ − V‖_{L^∞H^{s₁}}
    pub perturbation_gaps: Vec<f64>,
    /// perturbation gap / δ
    pub moduli: Vec<f64>,
}

/// Kato runs from Π_N V₀ for each truncation in `n_list` (increasing), and
/// from V₀ + δW for a fixed seeded direction W with ‖W‖_{H^{s₁}} = 1.
pub fn bona_smith_experiment(
    para: &ParalinearizedSystem,
    v0: &StateVector,
    n_list: &[i64],
    deltas: &[f64],
    cfg: &SolverConfig,
) -> Result<BonaSmithReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n_list must be nonempty and increasing".into()));
    }
    let grid = *para.grid();
    let s1 = cfg.ladder.s1;
    let runs = n_list
        .iter()
        .map(|&m| kato_solve(para, &project_state(v0, m), cfg))
        .collect::<Result<Vec<_>>>()?;
    let top = runs.last().unwrap();
    let truncation_gaps: Vec<f64> = runs
        .iter()
        .map(|r| sup_gap(&grid, &r.trajectory, &top.trajectory, s1))
        .collect();
    let monotone = truncation_gaps.windows(2).all(|w| w[1] <= w[0]);
    let base = kato_solve(para, v0, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xb0a5);
    let dir = random_state(&grid, SAMPLE_BAND, &mut rng);
    let dir = dir.scale(1.0 / dir.sobolev_norm(s1).max(1e-300));
    let mut gaps = Vec::new();
    let mut moduli = Vec::new();
    for &d in deltas {
        let run = kato_solve(para, &v0.add(&dir.scale(d)), cfg)?;
        let g = sup_gap(&grid, &run.trajectory, &base.trajectory, s1);
        gaps.push(g);
        moduli.push(g / d);
    }
    Ok(BonaSmithReport {
        t_final: cfg.t_final,
        n_list: n_list.to_vec(),
        truncation_gaps,
        monotone,
        deltas: deltas.to_vec(),
        perturbation_gaps: gaps,
        moduli,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonReport {
    pub eps: Vec<f64>,
    /// ‖V^ε − V^0‖_{L^∞H^{s₁}}
    pub gaps: Vec<f64>,
    /// gaps divided by ‖V^0‖_{L^∞H^{s₁}}
    pub relative_gaps: Vec<f64>,
    pub slope: Option<f64>,
}

/// Kato runs at each ε against the unregularized run.
pub fn epsilon_continuation(
    para: &ParalinearizedSystem,
    v0: &StateVector,
    eps_list: &[f64],
    cfg: &SolverConfig,
) -> Result<EpsilonReport> {
    if eps_list.iter().any(|e| !(*e > 0.0)) || eps_list.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidParameter("eps_list must be positive and decreasing".into()));
    }
    let grid = *para.grid();
    let s1 = cfg.ladder.s1;
    let reference = kato_solve(para, v0, &SolverConfig { epsilon: 0.0, ..cfg.clone() })?;
    let scale = sup_norm(&grid, &reference.trajectory, s1);
    let mut gaps = Vec::new();
    for &e in eps_list {
        let run = kato_solve(para, v0, &SolverConfig { epsilon: e, ..cfg.clone() })?;
        gaps.push(sup_gap(&grid, &run.trajectory, &reference.trajectory, s1));
    }
    Ok(EpsilonReport {
        eps: eps_list.to_vec(),
        relative_gaps: gaps.iter().map(|g| if scale > 0.0 { g / scale } else { 0.0 }).collect(),
        slope: loglog_slope(eps_list, &gaps),
        gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_examples() {
        let g = TorusGrid::new(16).unwrap();
        let h = heat_factor(&g, 0.1, 0.5).unwrap();
        let idx = g.index(2).unwrap();
        assert!((h.matrix().get(idx, idx).re - (-0.8f64).exp()).abs() < 1e-15);
        let id = heat_factor(&g, 0.0, 3.0).unwrap();
        assert_eq!(id.sub(&SpectralOperator::identity(&g, 4)).max_abs(), 0.0);
        assert!(heat_factor(&g, -1.0, 1.0).is_err());
    }

    #[test]
    fn cubic_midpoint_is_exact_on_cubics() {
        let f = |t: f64| C64::new(t * t * t - 2.0 * t, 0.5 * t * t);
        let path: Vec<Vec<C64>> = (0..7).map(|k| vec![f(k as f64)]).collect();
        for k in 0..6 {
            let v = path_at(&path, k, 0.5)[0];
            assert!((v - f(k as f64 + 0.5)).norm() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() + 0.5).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn cfl_rejects_large_step() {
        let g = TorusGrid::new(32).unwrap();
        let sys = BridgeSystem::trivial(&g);
        let cfg = SolverConfig {
            dt: Some(1.0),
            ..SolverConfig::default()
        };
        assert!(matches!(time_grid(&sys, &cfg), Err(Error::Cfl { .. })));
        let (steps, dt) = time_grid(&sys, &SolverConfig::default()).unwrap();
        assert!((steps as f64 * dt - 0.1).abs() < 1e-14);
        assert!(dt * 15.0f64.powi(2) <= 0.5 * 2.8 + 1e-12);
    }
}

//! The physical beam-wave system: coefficients, lower-order operators,
//! damping, forcing and quadratic nonlinearities.
//!
//!   y_tt = −b y_xxxx + B y + F₁ + α y_t + γ f_b(t)
//!   θ_tt =  c θ_xx + C θ + F₂ + β θ_t + δ f_w(t)
//!
//! with F_i(x, y, y_x, y_xx, θ, θ_x, θ_xx) quadratic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_core::{transform_real, SpectralFunction, TorusGrid, C64, I};

/// Arguments of the nonlinearities, h₁ … h₆.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JetVar {
    Y,
    Yx,
    Yxx,
    Theta,
    ThetaX,
    ThetaXx,
}

impl JetVar {
    pub const ALL: [JetVar; 6] = [
        JetVar::Y,
        JetVar::Yx,
        JetVar::Yxx,
        JetVar::Theta,
        JetVar::ThetaX,
        JetVar::ThetaXx,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Sign picked up under the odd reflection of (y, θ).
    pub fn parity_sign(self) -> f64 {
        match self {
            JetVar::Yx | JetVar::ThetaX => 1.0,
            _ => -1.0,
        }
    }
}

/// Grid values of (y, y_x, y_xx, θ, θ_x, θ_xx).
#[derive(Clone, Debug)]
pub struct JetFields {
    pub vals: [Vec<f64>; 6],
}

impl JetFields {
    pub fn new(y: &SpectralFunction, theta: &SpectralFunction) -> Self {
        Self {
            vals: [
                y.real_values(),
                y.derivative(1).real_values(),
                y.derivative(2).real_values(),
                theta.real_values(),
                theta.derivative(1).real_values(),
                theta.derivative(2).real_values(),
            ],
        }
    }

    /// Fields built from the two-thirds filtered inputs.
    pub fn dealiased(y: &SpectralFunction, theta: &SpectralFunction) -> Self {
        Self::new(&y.dealias(), &theta.dealias())
    }

    pub fn get(&self, v: JetVar) -> &[f64] {
        &self.vals[v.index()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadTerm {
    pub coeff: SpectralFunction,
    pub a: JetVar,
    pub b: JetVar,
    values: Vec<f64>,
}

impl QuadTerm {
    pub fn new(coeff: SpectralFunction, a: JetVar, b: JetVar) -> Self {
        let values = coeff.real_values();
        Self {
            coeff,
            a,
            b,
            values,
        }
    }

    pub fn coeff_values(&self) -> &[f64] {
        &self.values
    }
}

/// Σ c_{ab}(x) h_a h_b.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticNonlinearity {
    grid: TorusGrid,
    terms: Vec<QuadTerm>,
}

impl QuadraticNonlinearity {
    pub fn zero(grid: &TorusGrid) -> Self {
        Self {
            grid: *grid,
            terms: Vec::new(),
        }
    }

    pub fn push(&mut self, coeff: SpectralFunction, a: JetVar, b: JetVar) {
        self.terms.push(QuadTerm::new(coeff, a, b));
    }

    pub fn with_term(mut self, coeff: f64, a: JetVar, b: JetVar) -> Self {
        let g = self.grid;
        self.push(SpectralFunction::constant(&g, coeff), a, b);
        self
    }

    pub fn terms(&self) -> &[QuadTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn depends_on(&self, v: JetVar) -> bool {
        self.terms.iter().any(|t| t.a == v || t.b == v)
    }

    /// F at grid point m with arguments h.
    pub fn eval_point(&self, m: usize, h: &[f64; 6]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.values[m] * h[t.a.index()] * h[t.b.index()])
            .sum()
    }

    /// ∂F/∂h_v at grid point m.
    pub fn partial_point(&self, m: usize, h: &[f64; 6], v: JetVar) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            if t.a == v {
                acc += t.values[m] * h[t.b.index()];
            }
            if t.b == v {
                acc += t.values[m] * h[t.a.index()];
            }
        }
        acc
    }

    pub fn eval_fields(&self, f: &JetFields) -> Vec<f64> {
        let n = self.grid.n_points();
        (0..n)
            .map(|m| {
                self.terms
                    .iter()
                    .map(|t| t.values[m] * f.vals[t.a.index()][m] * f.vals[t.b.index()][m])
                    .sum()
            })
            .collect()
    }

    pub fn partial_fields(&self, f: &JetFields, v: JetVar) -> Vec<f64> {
        let n = self.grid.n_points();
        let mut out = vec![0.0; n];
        for t in &self.terms {
            if t.a == v {
                for m in 0..n {
                    out[m] += t.values[m] * f.vals[t.b.index()][m];
                }
            }
            if t.b == v {
                for m in 0..n {
                    out[m] += t.values[m] * f.vals[t.a.index()][m];
                }
            }
        }
        out
    }

    /// F(y, θ) with the two-thirds rule on inputs and output.
    pub fn eval_dealiased(&self, y: &SpectralFunction, theta: &SpectralFunction) -> SpectralFunction {
        if self.is_zero() {
            return SpectralFunction::zeros(&self.grid);
        }
        let f = JetFields::dealiased(y, theta);
        transform_real(&self.grid, &self.eval_fields(&f))
            .expect("grid length")
            .dealias()
    }

    /// ∂F/∂h_v(y, θ) with the two-thirds rule on inputs and output.
    pub fn partial_dealiased(
        &self,
        y: &SpectralFunction,
        theta: &SpectralFunction,
        v: JetVar,
    ) -> SpectralFunction {
        if !self.depends_on(v) {
            return SpectralFunction::zeros(&self.grid);
        }
        let f = JetFields::dealiased(y, theta);
        transform_real(&self.grid, &self.partial_fields(&f, v))
            .expect("grid length")
            .dealias()
    }

    /// Every term flips sign under the odd reflection and has an even coefficient.
    pub fn parity_ok(&self) -> bool {
        self.terms.iter().all(|t| {
            t.a.parity_sign() * t.b.parity_sign() < 0.0 && is_even(&t.coeff)
        })
    }
}

fn is_even(f: &SpectralFunction) -> bool {
    let scale = f.max_abs().max(1e-300);
    f.grid()
        .modes()
        .skip(1)
        .all(|j| (f.coeff(j) - f.coeff(-j)).norm() <= 1e-12 * scale)
}

/// Σ c_k(x) ∂_x^k with k ≤ 2.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOp {
    grid: TorusGrid,
    terms: Vec<(SpectralFunction, u32)>,
}

impl DiffOp {
    pub fn zero(grid: &TorusGrid) -> Self {
        Self {
            grid: *grid,
            terms: Vec::new(),
        }
    }

    pub fn push(&mut self, coeff: SpectralFunction, k: u32) -> Result<()> {
        if k > 2 {
            return Err(Error::InvalidParameter(format!(
                "lower-order operators allow derivatives up to order 2, got {k}"
            )));
        }
        self.terms.push((coeff, k));
        Ok(())
    }

    pub fn terms(&self) -> &[(SpectralFunction, u32)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Galerkin application: exact products truncated to the grid.
    pub fn apply(&self, u: &SpectralFunction) -> SpectralFunction {
        let mut out = SpectralFunction::zeros(&self.grid);
        for (c, k) in &self.terms {
            out = &out + &mul_galerkin(c, &u.derivative(*k));
        }
        out
    }
}

/// Exact product truncated back to the grid of the first factor.
pub fn mul_galerkin(a: &SpectralFunction, b: &SpectralFunction) -> SpectralFunction {
    let mut p = a.mul_exact(b).resample(a.grid());
    if a.is_real() && b.is_real() {
        p.symmetrize();
    }
    p
}

/// Scalar time profile for the forcing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Forcing {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// amplitude · sin(ω t + φ)
    Sine {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Forcing {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Constant { value } => *value,
            Forcing::Sine {
                amplitude,
                omega,
                phase,
            } => amplitude * (omega * t + phase).sin(),
        }
    }

    /// The documented non-trivial default, sin t.
    pub fn default_sinusoid() -> Self {
        Forcing::Sine {
            amplitude: 1.0,
            omega: 1.0,
            phase: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BridgeSystem {
    pub grid: TorusGrid,
    pub b: SpectralFunction,
    pub c: SpectralFunction,
    pub b_op: DiffOp,
    pub c_op: DiffOp,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub f_b: Forcing,
    pub f_w: Forcing,
    pub f1: QuadraticNonlinearity,
    pub f2: QuadraticNonlinearity,
}

impl BridgeSystem {
    /// b = c = 1, no lower-order terms, no damping, forcing or nonlinearity.
    pub fn trivial(grid: &TorusGrid) -> Self {
        Self {
            grid: *grid,
            b: SpectralFunction::constant(grid, 1.0),
            c: SpectralFunction::constant(grid, 1.0),
            b_op: DiffOp::zero(grid),
            c_op: DiffOp::zero(grid),
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
            delta: 0.0,
            f_b: Forcing::Zero,
            f_w: Forcing::Zero,
            f1: QuadraticNonlinearity::zero(grid),
            f2: QuadraticNonlinearity::zero(grid),
        }
    }

    /// 𝓑y = −b y_xxxx + B y.
    pub fn beam_operator(&self, y: &SpectralFunction) -> SpectralFunction {
        &self.b_op.apply(y) - &mul_galerkin(&self.b, &y.derivative(4))
    }

    /// 𝓦θ = c θ_xx + C θ.
    pub fn wave_operator(&self, theta: &SpectralFunction) -> SpectralFunction {
        &self.c_op.apply(theta) + &mul_galerkin(&self.c, &theta.derivative(2))
    }

    pub fn is_linear(&self) -> bool {
        self.f1.is_zero() && self.f2.is_zero()
    }
}

/// Grid minima (min b, min c), or the offending grid points.
pub fn check_ellipticity(sys: &BridgeSystem) -> Result<(f64, f64)> {
    let bv = sys.b.real_values();
    let cv = sys.c.real_values();
    let min_b = bv.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_c = cv.iter().cloned().fold(f64::INFINITY, f64::min);
    let points: Vec<usize> = (0..bv.len()).filter(|&m| bv[m] <= 0.0 || cv[m] <= 0.0).collect();
    if points.is_empty() {
        Ok((min_b, min_c))
    } else {
        Err(Error::Ellipticity {
            min_b,
            min_c,
            points,
        })
    }
}

/// min over x samples and |h_i| ≤ R of c(x) + ∂_{h₆}F₂(h), by exhausting
/// the 2⁶ sign corners (the quantity is affine in h).
pub fn check_radius_condition(sys: &BridgeSystem, r: f64, samples: usize) -> Result<f64> {
    if r <= 0.0 || samples == 0 {
        return Err(Error::InvalidParameter("radius and sample count must be positive".into()));
    }
    let xs: Vec<f64> = (0..samples)
        .map(|m| 2.0 * std::f64::consts::PI * m as f64 / samples as f64)
        .collect();
    let cvals: Vec<f64> = xs.iter().map(|&x| sys.c.eval_at(x).re).collect();
    let term_vals: Vec<Vec<f64>> = sys
        .f2
        .terms()
        .iter()
        .map(|t| xs.iter().map(|&x| t.coeff.eval_at(x).re).collect())
        .collect();
    let mut best = f64::INFINITY;
    let mut witness = (0usize, [0.0; 6]);
    for (m, &x_c) in cvals.iter().enumerate() {
        for corner in 0..64u32 {
            let mut h = [0.0; 6];
            for (i, hi) in h.iter_mut().enumerate() {
                *hi = if corner >> i & 1 == 1 { r } else { -r };
            }
            let mut d = 0.0;
            for (t, vals) in sys.f2.terms().iter().zip(&term_vals) {
                if t.a == JetVar::ThetaXx {
                    d += vals[m] * h[t.b.index()];
                }
                if t.b == JetVar::ThetaXx {
                    d += vals[m] * h[t.a.index()];
                }
            }
            let v = x_c + d;
            if v < best {
                best = v;
                witness = (m, h);
            }
        }
    }
    if best > 0.0 {
        Ok(best)
    } else {
        Err(Error::Smallness {
            min_value: best,
            witness: format!("x = {:.6}, h = {:?}", xs[witness.0], witness.1),
        })
    }
}

fn preserves_odd(grid: &TorusGrid, f: impl Fn(&SpectralFunction) -> SpectralFunction) -> bool {
    (1..=grid.j_max()).all(|j| {
        let s = SpectralFunction::from_fn(grid, |x| (j as f64 * x).sin());
        let out = f(&s);
        out.odd_defect() <= 1e-10 * out.max_abs().max(1.0)
    })
}

/// Sign identity of F₁, F₂ and odd-preservation of b, c, B, C.
pub fn check_parity(sys: &BridgeSystem) -> bool {
    let g = sys.grid;
    sys.f1.parity_ok()
        && sys.f2.parity_ok()
        && preserves_odd(&g, |u| sys.beam_operator(u))
        && preserves_odd(&g, |u| sys.wave_operator(u))
}

/// Odd periodic extension of samples y(πm/M), m = 0..=M, onto 2M points.
pub fn dirichlet_embed(samples: &[f64]) -> Result<SpectralFunction> {
    if samples.len() < 3 {
        return Err(Error::InvalidParameter("need at least 3 samples".into()));
    }
    let m = samples.len() - 1;
    let scale = samples.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let (left, right) = (samples[0], samples[m]);
    if left.abs() > 1e-10 * scale || right.abs() > 1e-10 * scale {
        return Err(Error::Endpoint { left, right });
    }
    let grid = TorusGrid::new(2 * m)?;
    let mut vals = vec![0.0; 2 * m];
    for k in 1..m {
        vals[k] = samples[k];
        vals[2 * m - k] = -samples[k];
    }
    let u = transform_real(&grid, &vals)?;
    let mut coeffs = vec![C64::new(0.0, 0.0); 2 * m];
    for j in 1..=grid.j_max() {
        let c = I * u.coeff(j).im;
        coeffs[grid.index(j).unwrap()] = c;
        coeffs[grid.index(-j).unwrap()] = -c;
    }
    SpectralFunction::from_coeffs(&grid, coeffs, true)
}

/// Samples on [0, π] of an odd function.
pub fn dirichlet_restrict(u: &SpectralFunction) -> Vec<f64> {
    let v = u.real_values();
    let m = u.grid().n_points() / 2;
    let mut out: Vec<f64> = v[..=m].to_vec();
    out[0] = 0.0;
    out[m] = 0.0;
    out
}

/// Physical constants of the fish-bone bridge model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ArioliGazzolaParams {
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "m")]
    pub rod_mass: f64,
    #[serde(rename = "EI")]
    pub ei: f64,
    #[serde(rename = "GK")]
    pub gk: f64,
    #[serde(rename = "ell")]
    pub ell: f64,
    #[serde(rename = "H0")]
    pub h0: f64,
}

impl Default for ArioliGazzolaParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            rod_mass: 0.25,
            ei: 1.5,
            gk: 1.0,
            ell: 1.0,
            h0: 0.2,
        }
    }
}

pub fn arioli_gazzola_preset(
    p: &ArioliGazzolaParams,
    xi_profile: &SpectralFunction,
) -> Result<BridgeSystem> {
    for (name, v) in [("M", p.mass), ("m", p.rod_mass), ("EI", p.ei), ("ell", p.ell)] {
        if v <= 0.0 {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    for (name, v) in [("GK", p.gk), ("H0", p.h0)] {
        if v < 0.0 {
            return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {v}")));
        }
    }
    if xi_profile.min_real() <= 0.0 {
        return Err(Error::InvalidParameter("cable profile must be strictly positive".into()));
    }
    let grid = *xi_profile.grid();
    let xi = xi_profile.real_values();
    let map = |f: &dyn Fn(f64) -> f64| -> SpectralFunction {
        let v: Vec<f64> = xi.iter().map(|&x| f(x)).collect();
        transform_real(&grid, &v).expect("grid length")
    };
    let (mm, m) = (p.mass, p.rod_mass);
    let b = map(&|x| p.ei / (mm + 2.0 * m * x));
    let c = map(&|x| {
        3.0 * p.gk / (p.ell * p.ell * (mm + 6.0 * m * x)) + 6.0 * p.h0 / (x * x * (mm + 6.0 * m * x))
    });
    let tension = map(&|x| 2.0 * p.h0 / (x * x));
    let tension_x = tension.derivative(1).real_values();
    let mut b_op = DiffOp::zero(&grid);
    let mut c_op = DiffOp::zero(&grid);
    if p.h0 > 0.0 {
        b_op.push(map(&|x| 2.0 * p.h0 / (x * x * (mm + 2.0 * m * x))), 2)?;
        let tx: Vec<f64> = tension_x.iter().zip(&xi).map(|(t, &x)| t / (mm + 2.0 * m * x)).collect();
        b_op.push(transform_real(&grid, &tx)?, 1)?;
        let tw: Vec<f64> = tension_x
            .iter()
            .zip(&xi)
            .map(|(t, &x)| 3.0 * t / (mm + 6.0 * m * x))
            .collect();
        c_op.push(transform_real(&grid, &tw)?, 1)?;
    }
    let mut sys = BridgeSystem::trivial(&grid);
    sys.b = b;
    sys.c = c;
    sys.b_op = b_op;
    sys.c_op = c_op;
    Ok(sys)
}

/// Coefficient profile in a JSON system document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// mean + amplitude · cos(mode x)
    Cosine {
        mean: f64,
        amplitude: f64,
        mode: i64,
    },
    /// mean + amplitude · sin(mode x)
    Sine {
        mean: f64,
        amplitude: f64,
        mode: i64,
    },
    /// Equispaced samples on [0, 2π), spectrally resampled.
    Samples {
        values: Vec<f64>,
    },
    /// (j, re, im) for j ≥ 0; negative modes follow by conjugation.
    Fourier {
        modes: Vec<(i64, f64, f64)>,
    },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn build(&self, grid: &TorusGrid) -> Result<SpectralFunction> {
        Ok(match self {
            Profile::Constant { value } => SpectralFunction::constant(grid, *value),
            Profile::Cosine {
                mean,
                amplitude,
                mode,
            } => SpectralFunction::from_fn(grid, |x| mean + amplitude * (*mode as f64 * x).cos()),
            Profile::Sine {
                mean,
                amplitude,
                mode,
            } => SpectralFunction::from_fn(grid, |x| mean + amplitude * (*mode as f64 * x).sin()),
            Profile::Samples { values } => {
                let src = TorusGrid::new(values.len()).map_err(|_| {
                    Error::Config(format!(
                        "sample profiles need an even length >= 4, got {}",
                        values.len()
                    ))
                })?;
                transform_real(&src, values)?.resample(grid)
            }
            Profile::Fourier { modes } => {
                let mut u = SpectralFunction::zeros(grid);
                for &(j, re, im) in modes {
                    if j < 0 {
                        return Err(Error::Config("Fourier profiles list j >= 0 only".into()));
                    }
                    let c = if j == 0 { C64::new(re, 0.0) } else { C64::new(re, im) };
                    u.set_coeff(j, c);
                    if j != 0 {
                        u.set_coeff(-j, c.conj());
                    }
                }
                u.symmetrize();
                u
            }
        })
    }
}

fn default_one() -> Profile {
    Profile::constant(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffTermSpec {
    pub coeff: Profile,
    pub order: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadTermSpec {
    #[serde(default = "default_one")]
    pub coeff: Profile,
    pub a: JetVar,
    pub b: JetVar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArioliGazzolaSpec {
    #[serde(default)]
    pub params: ArioliGazzolaParams,
    #[serde(default = "default_one")]
    pub xi_profile: Profile,
}

/// JSON description of a system. When `arioli_gazzola` is present it
/// supplies b, c, B and C and the corresponding fields are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_one")]
    pub b: Profile,
    #[serde(default = "default_one")]
    pub c: Profile,
    #[serde(default)]
    pub b_op: Vec<DiffTermSpec>,
    #[serde(default)]
    pub c_op: Vec<DiffTermSpec>,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub f_b: Forcing,
    #[serde(default)]
    pub f_w: Forcing,
    #[serde(default)]
    pub f1: Vec<QuadTermSpec>,
    #[serde(default)]
    pub f2: Vec<QuadTermSpec>,
    #[serde(default)]
    pub arioli_gazzola: Option<ArioliGazzolaSpec>,
}

impl Default for SystemSpec {
    fn default() -> Self {
        Self {
            description: String::new(),
            b: default_one(),
            c: default_one(),
            b_op: Vec::new(),
            c_op: Vec::new(),
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
            delta: 0.0,
            f_b: Forcing::Zero,
            f_w: Forcing::Zero,
            f1: Vec::new(),
            f2: Vec::new(),
            arioli_gazzola: None,
        }
    }
}

impl SystemSpec {
    pub fn build(&self, grid: &TorusGrid) -> Result<BridgeSystem> {
        let mut sys = match &self.arioli_gazzola {
            Some(ag) => arioli_gazzola_preset(&ag.params, &ag.xi_profile.build(grid)?)?,
            None => {
                let mut s = BridgeSystem::trivial(grid);
                s.b = self.b.build(grid)?;
                s.c = self.c.build(grid)?;
                for t in &self.b_op {
                    s.b_op.push(t.coeff.build(grid)?, t.order)?;
                }
                for t in &self.c_op {
                    s.c_op.push(t.coeff.build(grid)?, t.order)?;
                }
                s
            }
        };
        sys.alpha = self.alpha;
        sys.beta = self.beta;
        sys.gamma = self.gamma;
        sys.delta = self.delta;
        sys.f_b = self.f_b.clone();
        sys.f_w = self.f_w.clone();
        for t in &self.f1 {
            sys.f1.push(t.coeff.build(grid)?, t.a, t.b);
        }
        for t in &self.f2 {
            sys.f2.push(t.coeff.build(grid)?, t.a, t.b);
        }
        Ok(sys)
    }
}

fn quad(a: JetVar, b: JetVar) -> QuadTermSpec {
    QuadTermSpec {
        coeff: default_one(),
        a,
        b,
    }
}

pub const PRESET_NAMES: [&str; 7] = [
    "linear",
    "theta_xx_squared",
    "mixed",
    "parity",
    "damped",
    "forced",
    "arioli_gazzola",
];

/// Built-in systems.
pub fn preset(name: &str) -> Option<SystemSpec> {
    use JetVar::*;
    let base = SystemSpec::default();
    Some(match name {
        "linear" => SystemSpec {
            description: "b = c = 1, no lower-order terms, no nonlinearity".into(),
            ..base
        },
        "theta_xx_squared" => SystemSpec {
            description: "b = c = 1 with F2 = theta_xx^2".into(),
            f2: vec![quad(ThetaXx, ThetaXx)],
            ..base
        },
        "mixed" => SystemSpec {
            description: "variable b, c; F1 = y_xx theta_xx + theta_x^2, F2 = theta_xx^2 + y_xx theta"
                .into(),
            b: Profile::Cosine {
                mean: 1.0,
                amplitude: 0.2,
                mode: 1,
            },
            c: Profile::Cosine {
                mean: 1.0,
                amplitude: 0.1,
                mode: 2,
            },
            f1: vec![quad(Yxx, ThetaXx), quad(ThetaX, ThetaX)],
            f2: vec![quad(ThetaXx, ThetaXx), quad(Yxx, Theta)],
            ..base
        },
        "parity" => SystemSpec {
            description: "odd-preserving: even b, c; F1 = y theta_x, F2 = y theta_x".into(),
            b: Profile::Cosine {
                mean: 1.0,
                amplitude: 0.2,
                mode: 1,
            },
            c: Profile::Cosine {
                mean: 1.0,
                amplitude: 0.1,
                mode: 2,
            },
            f1: vec![quad(Y, ThetaX)],
            f2: vec![quad(Y, ThetaX)],
            ..base
        },
        "damped" => SystemSpec {
            description: "linear with alpha = beta = -0.5".into(),
            alpha: -0.5,
            beta: -0.5,
            ..base
        },
        "forced" => SystemSpec {
            description: "F2 = theta_xx^2 with gamma = delta = 1 and sin t forcing".into(),
            gamma: 1.0,
            delta: 1.0,
            f_b: Forcing::default_sinusoid(),
            f_w: Forcing::default_sinusoid(),
            f2: vec![quad(ThetaXx, ThetaXx)],
            ..base
        },
        "arioli_gazzola" => SystemSpec {
            description: "fish-bone bridge coefficients, cable profile 1 + 0.1 cos x".into(),
            arioli_gazzola: Some(ArioliGazzolaSpec {
                params: ArioliGazzolaParams::default(),
                xi_profile: Profile::Cosine {
                    mean: 1.0,
                    amplitude: 0.1,
                    mode: 1,
                },
            }),
            ..base
        },
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TorusGrid {
        TorusGrid::new(32).unwrap()
    }

    #[test]
    fn ellipticity() {
        let g = grid();
        let mut sys = BridgeSystem::trivial(&g);
        assert_eq!(check_ellipticity(&sys).unwrap(), (1.0, 1.0));
        sys.b = SpectralFunction::from_fn(&g, |x| 1.0 + 1.5 * x.cos());
        match check_ellipticity(&sys) {
            Err(Error::Ellipticity { points, .. }) => {
                let pts = g.points();
                assert!(points.iter().all(|&m| (pts[m] - std::f64::consts::PI).abs() < 1.0));
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn radius_condition() {
        let g = grid();
        let mut sys = BridgeSystem::trivial(&g);
        assert!((check_radius_condition(&sys, 3.0, 16).unwrap() - 1.0).abs() < 1e-14);
        sys.f2 = QuadraticNonlinearity::zero(&g).with_term(1.0, JetVar::ThetaXx, JetVar::ThetaXx);
        assert!((check_radius_condition(&sys, 0.25, 16).unwrap() - 0.5).abs() < 1e-14);
        assert!(matches!(check_radius_condition(&sys, 0.6, 16), Err(Error::Smallness { .. })));
    }

    #[test]
    fn parity_examples() {
        let g = grid();
        let mut sys = BridgeSystem::trivial(&g);
        assert!(check_parity(&sys));
        sys.f2 = QuadraticNonlinearity::zero(&g).with_term(1.0, JetVar::Yx, JetVar::ThetaX);
        assert!(!check_parity(&sys));
        sys.f2 = QuadraticNonlinearity::zero(&g).with_term(1.0, JetVar::Y, JetVar::ThetaX);
        assert!(check_parity(&sys));
        sys.b = SpectralFunction::from_fn(&g, |x| 1.0 + 0.1 * x.sin());
        assert!(!check_parity(&sys));
    }

    #[test]
    fn dirichlet() {
        let m = 16;
        let s: Vec<f64> = (0..=m).map(|k| (std::f64::consts::PI * k as f64 / m as f64).sin()).collect();
        let u = dirichlet_embed(&s).unwrap();
        assert!((u.coeff(1) - C64::new(0.0, -0.5)).norm() < 1e-14);
        assert!((u.coeff(-1) - C64::new(0.0, 0.5)).norm() < 1e-14);
        assert!(u.is_odd(0.0));
        let back = dirichlet_restrict(&u);
        for (a, b) in s.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10);
        }
        let c: Vec<f64> = (0..=m).map(|k| (std::f64::consts::PI * k as f64 / m as f64).cos()).collect();
        assert!(matches!(dirichlet_embed(&c), Err(Error::Endpoint { .. })));
    }

    #[test]
    fn arioli_gazzola() {
        let g = grid();
        let p = ArioliGazzolaParams {
            mass: 1.0,
            rod_mass: 1.0,
            ei: 1.0,
            gk: 1.0,
            ell: 1.0,
            h0: 1.0,
        };
        let sys = arioli_gazzola_preset(&p, &SpectralFunction::constant(&g, 1.0)).unwrap();
        for v in sys.b.real_values() {
            assert!((v - 1.0 / 3.0).abs() < 1e-14);
        }
        assert!(check_ellipticity(&sys).is_ok());
        let p0 = ArioliGazzolaParams { gk: 0.0, h0: 0.0, ..p };
        let sys = arioli_gazzola_preset(&p0, &SpectralFunction::constant(&g, 1.0)).unwrap();
        assert!(check_ellipticity(&sys).is_err());
        let bad = ArioliGazzolaParams { ei: -1.0, ..p };
        assert!(arioli_gazzola_preset(&bad, &SpectralFunction::constant(&g, 1.0)).is_err());
    }

    #[test]
    fn partials_match_finite_differences() {
        let g = grid();
        let mut f = QuadraticNonlinearity::zero(&g);
        f.push(SpectralFunction::from_fn(&g, |x| 1.0 + 0.3 * x.cos()), JetVar::ThetaXx, JetVar::ThetaXx);
        f.push(SpectralFunction::constant(&g, -0.7), JetVar::Yxx, JetVar::Theta);
        f.push(SpectralFunction::constant(&g, 0.4), JetVar::Y, JetVar::ThetaX);
        let h = [0.3, -0.2, 0.5, 0.1, -0.6, 0.25];
        for v in JetVar::ALL {
            let mut hp = h;
            let mut hm = h;
            hp[v.index()] += 1e-5;
            hm[v.index()] -= 1e-5;
            let fd = (f.eval_point(3, &hp) - f.eval_point(3, &hm)) / 2e-5;
            let exact = f.partial_point(3, &h, v);
            assert!((fd - exact).abs() < 1e-8 * exact.abs().max(1.0));
        }
        assert_eq!(f.eval_point(0, &[0.0; 6]), 0.0);
    }

    #[test]
    fn presets_build() {
        let g = grid();
        for name in PRESET_NAMES {
            let sys = preset(name).unwrap().build(&g).unwrap();
            assert!(check_ellipticity(&sys).is_ok(), "{name}");
        }
        assert!(check_parity(&preset("parity").unwrap().build(&g).unwrap()));
        let json = serde_json::to_string(&preset("mixed").unwrap()).unwrap();
        let back: SystemSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, preset("mixed").unwrap());
    }
}

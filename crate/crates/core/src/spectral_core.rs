//! Torus grid, Fourier transforms, Sobolev norms, inner products and
//! Fourier multipliers.
//!
//! Coefficients follow û(j) = (1/2π)∫ u(x) e^{-ijx} dx, so that
//! u(x) = Σ_j û(j) e^{ijx}. Modes are j ∈ [-n/2, n/2) and are stored at
//! index j + n/2. The unpaired mode -n/2 is kept at zero.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Japanese bracket ⟨ξ⟩ = √(1+ξ²).
#[inline]
pub fn bracket(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    n: usize,
}

impl TorusGrid {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 4 || n_points % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "grid size must be an even integer >= 4, got {n_points}"
            )));
        }
        Ok(Self { n: n_points })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|m| m as f64 * self.spacing()).collect()
    }

    /// Largest paired mode, n/2 - 1.
    pub fn j_max(&self) -> i64 {
        self.n as i64 / 2 - 1
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let h = self.n as i64 / 2;
        -h..h
    }

    #[inline]
    pub fn mode(&self, idx: usize) -> i64 {
        idx as i64 - self.n as i64 / 2
    }

    #[inline]
    pub fn index(&self, j: i64) -> Option<usize> {
        let h = self.n as i64 / 2;
        if j >= -h && j < h {
            Some((j + h) as usize)
        } else {
            None
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }
}

fn fft_in_place(buf: &mut [C64], inverse: bool) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let plan = if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        };
        plan.process(buf);
    });
}

/// Grid samples to Fourier coefficients.
pub fn transform(grid: &TorusGrid, values: &[C64]) -> Result<SpectralFunction> {
    grid.check_len(values.len())?;
    let n = grid.n;
    let mut buf = values.to_vec();
    fft_in_place(&mut buf, false);
    let scale = 1.0 / n as f64;
    let mut coeffs = vec![C64::new(0.0, 0.0); n];
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let j = grid.mode(idx);
        *c = buf[j.rem_euclid(n as i64) as usize] * scale;
    }
    Ok(SpectralFunction {
        grid: *grid,
        coeffs,
        is_real: false,
    })
}

/// Real grid samples to coefficients; the result is exactly Hermitian and
/// the unpaired mode is dropped.
pub fn transform_real(grid: &TorusGrid, values: &[f64]) -> Result<SpectralFunction> {
    let cv: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    let mut u = transform(grid, &cv)?;
    u.coeffs[0] = C64::new(0.0, 0.0);
    u.symmetrize();
    Ok(u)
}

/// Coefficients to grid samples.
pub fn inverse_transform(u: &SpectralFunction) -> Vec<C64> {
    let n = u.grid.n;
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for (idx, &c) in u.coeffs.iter().enumerate() {
        let j = u.grid.mode(idx);
        buf[j.rem_euclid(n as i64) as usize] = c;
    }
    fft_in_place(&mut buf, true);
    buf
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFunction {
    grid: TorusGrid,
    coeffs: Vec<C64>,
    is_real: bool,
}

impl SpectralFunction {
    pub fn zeros(grid: &TorusGrid) -> Self {
        Self {
            grid: *grid,
            coeffs: vec![C64::new(0.0, 0.0); grid.n],
            is_real: true,
        }
    }

    pub fn constant(grid: &TorusGrid, value: f64) -> Self {
        let mut u = Self::zeros(grid);
        u.coeffs[grid.n / 2] = C64::new(value, 0.0);
        u
    }

    /// amp · e^{ijx}.
    pub fn single_mode(grid: &TorusGrid, j: i64, amp: C64) -> Self {
        let mut u = Self::zeros(grid);
        if let Some(idx) = grid.index(j) {
            if idx != 0 {
                u.coeffs[idx] = amp;
            }
        }
        u.is_real = false;
        u
    }

    pub fn from_coeffs(grid: &TorusGrid, coeffs: Vec<C64>, is_real: bool) -> Result<Self> {
        grid.check_len(coeffs.len())?;
        let mut u = Self {
            grid: *grid,
            coeffs,
            is_real,
        };
        u.coeffs[0] = C64::new(0.0, 0.0);
        if is_real {
            u.symmetrize();
        }
        Ok(u)
    }

    pub fn from_fn(grid: &TorusGrid, f: impl Fn(f64) -> f64) -> Self {
        let vals: Vec<f64> = grid.points().into_iter().map(f).collect();
        transform_real(grid, &vals).expect("length matches grid")
    }

    pub fn from_fn_complex(grid: &TorusGrid, f: impl Fn(f64) -> C64) -> Self {
        let vals: Vec<C64> = grid.points().into_iter().map(f).collect();
        let mut u = transform(grid, &vals).expect("length matches grid");
        u.coeffs[0] = C64::new(0.0, 0.0);
        u
    }

    pub fn from_real_samples(grid: &TorusGrid, values: &[f64]) -> Result<Self> {
        transform_real(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn coeff(&self, j: i64) -> C64 {
        self.grid
            .index(j)
            .map(|i| self.coeffs[i])
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn set_coeff(&mut self, j: i64, value: C64) {
        if let Some(idx) = self.grid.index(j) {
            if idx != 0 {
                self.coeffs[idx] = value;
            }
        }
        self.is_real = false;
    }

    /// Enforce û(-j) = conj(û(j)) by averaging the pair.
    pub fn symmetrize(&mut self) {
        let h = self.grid.n as i64 / 2;
        for j in 0..h {
            let a = self.coeff(j);
            let b = self.coeff(-j).conj();
            let m = (a + b) * 0.5;
            let ip = self.grid.index(j).unwrap();
            let im = self.grid.index(-j).unwrap();
            self.coeffs[ip] = m;
            self.coeffs[im] = m.conj();
        }
        self.coeffs[0] = C64::new(0.0, 0.0);
        self.is_real = true;
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(1e-300);
        let h = self.grid.n as i64 / 2;
        (-h + 1..h).all(|j| (self.coeff(-j) - self.coeff(j).conj()).norm() <= tol * scale)
    }

    /// û(-j) = -û(j) for every paired mode.
    pub fn is_odd(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(1e-300);
        let h = self.grid.n as i64 / 2;
        (-h + 1..h).all(|j| (self.coeff(-j) + self.coeff(j)).norm() <= tol * scale)
    }

    pub fn odd_defect(&self) -> f64 {
        let h = self.grid.n as i64 / 2;
        (-h + 1..h)
            .map(|j| (self.coeff(-j) + self.coeff(j)).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn values(&self) -> Vec<C64> {
        inverse_transform(self)
    }

    pub fn real_values(&self) -> Vec<f64> {
        inverse_transform(self).into_iter().map(|c| c.re).collect()
    }

    /// Fourier sum at an arbitrary point.
    pub fn eval_at(&self, x: f64) -> C64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(idx, &c)| c * C64::from_polar(1.0, self.grid.mode(idx) as f64 * x))
            .sum()
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        sobolev_norm(self, s)
    }

    pub fn apply_multiplier(&self, g: impl Fn(i64) -> C64) -> SpectralFunction {
        apply_multiplier(self, g)
    }

    /// Real even multiplier: keeps the reality flag.
    pub fn apply_real_multiplier(&self, g: impl Fn(i64) -> f64) -> SpectralFunction {
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            *c *= g(self.grid.mode(idx));
        }
        out
    }

    pub fn derivative(&self, k: u32) -> SpectralFunction {
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            let j = self.grid.mode(idx) as f64;
            *c *= (I * j).powu(k);
        }
        out.coeffs[0] = C64::new(0.0, 0.0);
        out
    }

    /// ⟨D⟩^s.
    pub fn bracket_pow(&self, s: f64) -> SpectralFunction {
        self.apply_real_multiplier(|j| bracket(j as f64).powf(s))
    }

    /// Π_m: keep |j| ≤ m.
    pub fn project(&self, m: i64) -> SpectralFunction {
        self.apply_real_multiplier(|j| if j.abs() <= m { 1.0 } else { 0.0 })
    }

    /// Two-thirds filter |j| ≤ n/3.
    pub fn dealias(&self) -> SpectralFunction {
        self.project(self.grid.n as i64 / 3)
    }

    /// Coefficients of the complex conjugate function, conj(û(-j)).
    pub fn conj(&self) -> SpectralFunction {
        let mut out = self.clone();
        for idx in 1..self.grid.n {
            let j = self.grid.mode(idx);
            out.coeffs[idx] = self.coeff(-j).conj();
        }
        out.coeffs[0] = C64::new(0.0, 0.0);
        out
    }

    /// (u + ū)/2.
    pub fn real_part(&self) -> SpectralFunction {
        let mut out = (self + &self.conj()) * 0.5;
        out.symmetrize();
        out
    }

    pub fn scale(&self, a: C64) -> SpectralFunction {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= a;
        }
        if a.im != 0.0 {
            out.is_real = false;
        }
        out
    }

    /// Grid (collocation) product, no de-aliasing.
    pub fn mul_collocation(&self, other: &SpectralFunction) -> SpectralFunction {
        let a = self.values();
        let b = other.values();
        let p: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let mut out = transform(&self.grid, &p).expect("same grid");
        out.coeffs[0] = C64::new(0.0, 0.0);
        if self.is_real && other.is_real {
            out.symmetrize();
        }
        out
    }

    /// Product with both factors and the output filtered to |j| ≤ n/3.
    pub fn mul_dealiased(&self, other: &SpectralFunction) -> SpectralFunction {
        self.dealias().mul_collocation(&other.dealias()).dealias()
    }

    /// Pointwise map of a real function through its grid values.
    pub fn map_real(&self, f: impl Fn(f64) -> f64) -> SpectralFunction {
        let v: Vec<f64> = self.real_values().into_iter().map(f).collect();
        transform_real(&self.grid, &v).expect("same grid")
    }

    pub fn min_real(&self) -> f64 {
        self.real_values().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_real(&self) -> f64 {
        self.real_values().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Re-sample on another grid by zero padding or truncation.
    pub fn resample(&self, grid: &TorusGrid) -> SpectralFunction {
        let mut out = SpectralFunction::zeros(grid);
        out.is_real = self.is_real;
        let h = (grid.n.min(self.grid.n) / 2) as i64;
        for j in (-h + 1)..h {
            if let Some(idx) = grid.index(j) {
                out.coeffs[idx] = self.coeff(j);
            }
        }
        out
    }

    /// Exact (unaliased) product on the doubled grid, returned there.
    pub fn mul_exact(&self, other: &SpectralFunction) -> SpectralFunction {
        let big = TorusGrid::new(self.grid.n * 2).expect("even");
        self.resample(&big).mul_collocation(&other.resample(&big))
    }
}

impl Add for &SpectralFunction {
    type Output = SpectralFunction;
    fn add(self, rhs: &SpectralFunction) -> SpectralFunction {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        SpectralFunction {
            grid: self.grid,
            coeffs,
            is_real: self.is_real && rhs.is_real,
        }
    }
}

impl Sub for &SpectralFunction {
    type Output = SpectralFunction;
    fn sub(self, rhs: &SpectralFunction) -> SpectralFunction {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        SpectralFunction {
            grid: self.grid,
            coeffs,
            is_real: self.is_real && rhs.is_real,
        }
    }
}

impl Mul<f64> for &SpectralFunction {
    type Output = SpectralFunction;
    fn mul(self, rhs: f64) -> SpectralFunction {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= rhs);
        out
    }
}

impl Mul<f64> for SpectralFunction {
    type Output = SpectralFunction;
    fn mul(self, rhs: f64) -> SpectralFunction {
        &self * rhs
    }
}

impl Neg for &SpectralFunction {
    type Output = SpectralFunction;
    fn neg(self) -> SpectralFunction {
        self * -1.0
    }
}

pub fn sobolev_norm(u: &SpectralFunction, s: f64) -> f64 {
    sobolev_norm_coeffs(&u.grid, &u.coeffs, s)
}

pub fn sobolev_norm_coeffs(grid: &TorusGrid, coeffs: &[C64], s: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| c.norm_sqr() * bracket(grid.mode(idx) as f64).powf(2.0 * s))
        .sum::<f64>()
        .sqrt()
}

pub fn apply_multiplier(u: &SpectralFunction, g: impl Fn(i64) -> C64) -> SpectralFunction {
    let mut out = u.clone();
    for (idx, c) in out.coeffs.iter_mut().enumerate() {
        *c *= g(u.grid.mode(idx));
    }
    out.coeffs[0] = C64::new(0.0, 0.0);
    out.is_real = u.is_real && out.is_hermitian(1e-12);
    out
}

/// Σ û(j) conj(v̂(j)).
pub fn inner_product(u: &SpectralFunction, v: &SpectralFunction) -> Result<C64> {
    u.grid.check_same(&v.grid)?;
    Ok(u.coeffs.iter().zip(&v.coeffs).map(|(a, b)| a * b.conj()).sum())
}

/// (Z₁, Z₂) for pairs Z = (u⁺, u⁻): ½Re[(u₁⁺,u₂⁺) + (u₁⁻,u₂⁻)], which is
/// Re(z₁, z₂) whenever u⁻ is the conjugate of u⁺.
pub fn inner_product_two_block(z1: &[C64], z2: &[C64]) -> f64 {
    0.5 * z1.iter().zip(z2).map(|(a, b)| (a * b.conj()).re).sum::<f64>()
}

/// ⟨V₁, V₂⟩ = (Z₁, Z₂) + (W₁, W₂) on flat 4-block vectors.
pub fn inner_product_four_block(v1: &[C64], v2: &[C64]) -> f64 {
    inner_product_two_block(v1, v2)
}

/// Block vector norm: ½ Σ over blocks of Σ|v̂|²⟨j⟩^{2s}, rooted.
/// For conjugate-consistent vectors this is (‖z‖² + ‖w‖²)^{1/2}.
pub fn block_sobolev_norm(grid: &TorusGrid, v: &[C64], s: f64) -> f64 {
    let n = grid.n;
    let weights: Vec<f64> = (0..n).map(|i| bracket(grid.mode(i) as f64).powf(2.0 * s)).collect();
    (0.5 * v
        .iter()
        .enumerate()
        .map(|(i, c)| c.norm_sqr() * weights[i % n])
        .sum::<f64>())
    .sqrt()
}

/// Per-block exponents, e.g. H^{s-2} × H^{s-1} on a 4-block vector.
pub fn block_sobolev_norm_mixed(grid: &TorusGrid, v: &[C64], s_blocks: &[f64]) -> f64 {
    let n = grid.n;
    (0.5 * v
        .iter()
        .enumerate()
        .map(|(i, c)| c.norm_sqr() * bracket(grid.mode(i % n) as f64).powf(2.0 * s_blocks[i / n]))
        .sum::<f64>())
    .sqrt()
}

/// Complexified unknown V = (Z, W) with Z = (z, z̄), W = (w, w̄).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub z: SpectralFunction,
    pub w: SpectralFunction,
}

impl StateVector {
    pub fn zeros(grid: &TorusGrid) -> Self {
        let mut z = SpectralFunction::zeros(grid);
        z.is_real = false;
        Self { z: z.clone(), w: z }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.z.grid()
    }

    /// Flat [z, z̄, w, w̄] coefficient vector of length 4n.
    pub fn to_blocks(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(4 * self.z.grid.n);
        out.extend_from_slice(&self.z.coeffs);
        out.extend_from_slice(&self.z.conj().coeffs);
        out.extend_from_slice(&self.w.coeffs);
        out.extend_from_slice(&self.w.conj().coeffs);
        out
    }

    /// Reads the z and w blocks; the conjugate blocks are ignored.
    pub fn from_blocks(grid: &TorusGrid, v: &[C64]) -> Result<Self> {
        let n = grid.n;
        if v.len() != 4 * n {
            return Err(Error::Dimension {
                expected: 4 * n,
                got: v.len(),
            });
        }
        let z = SpectralFunction::from_coeffs(grid, v[..n].to_vec(), false)?;
        let w = SpectralFunction::from_coeffs(grid, v[2 * n..3 * n].to_vec(), false)?;
        Ok(Self { z, w })
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        (self.z.sobolev_norm(s).powi(2) + self.w.sobolev_norm(s).powi(2)).sqrt()
    }

    pub fn add(&self, other: &StateVector) -> StateVector {
        StateVector {
            z: &self.z + &other.z,
            w: &self.w + &other.w,
        }
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        StateVector {
            z: &self.z - &other.z,
            w: &self.w - &other.w,
        }
    }

    pub fn scale(&self, a: f64) -> StateVector {
        StateVector {
            z: &self.z * a,
            w: &self.w * a,
        }
    }
}

/// Largest mismatch between the conjugate blocks of a 4-block vector and the
/// conjugates of their partners, relative to the vector size.
pub fn reality_defect(grid: &TorusGrid, v: &[C64]) -> f64 {
    let n = grid.n;
    let scale = v.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    let mut worst = 0.0f64;
    for pair in 0..v.len() / (2 * n) {
        let plus = &v[2 * pair * n..(2 * pair + 1) * n];
        let minus = &v[(2 * pair + 1) * n..(2 * pair + 2) * n];
        for idx in 1..n {
            let j = grid.mode(idx);
            let partner = plus[grid.index(-j).unwrap()].conj();
            worst = worst.max((minus[idx] - partner).norm());
        }
    }
    worst / scale
}

/// The Sobolev indices s₀ < s₁ < s₂ < 𝔰 ≤ s used throughout the scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityLadder {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s_frak: f64,
    pub s: f64,
}

impl RegularityLadder {
    pub fn new(s0: f64, s: f64) -> Result<Self> {
        if s0 <= 0.5 {
            return Err(Error::InvalidParameter(format!("s0 must exceed 1/2, got {s0}")));
        }
        let s1 = s0 + 1.5;
        let s2 = s1 + 2.0;
        let s_frak = s2 + 1.0;
        if s < s2 {
            return Err(Error::InvalidParameter(format!("s = {s} is below s2 = {s2}")));
        }
        Ok(Self {
            s0,
            s1,
            s2,
            s_frak,
            s,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fresh = Self::new(self.s0, self.s)?;
        if (fresh.s1 - self.s1).abs() > 1e-12
            || (fresh.s2 - self.s2).abs() > 1e-12
            || (fresh.s_frak - self.s_frak).abs() > 1e-12
        {
            return Err(Error::InvalidParameter("inconsistent regularity ladder".into()));
        }
        Ok(())
    }
}

impl Default for RegularityLadder {
    fn default() -> Self {
        Self::new(0.6, 7.1).expect("valid defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TameReport {
    pub tame_lhs: f64,
    pub tame_rhs: f64,
    pub tame_constant: f64,
    pub interp_lhs: f64,
    pub interp_rhs: f64,
    pub interp_low: f64,
    pub interp_high: f64,
}

impl TameReport {
    pub fn tame_slack(&self) -> f64 {
        self.tame_constant * self.tame_rhs - self.tame_lhs
    }
    pub fn interp_slack(&self) -> f64 {
        self.interp_rhs - self.interp_lhs
    }
}

/// Both sides of the tame product estimate and of the interpolation
/// inequality ‖u‖_{H^s} ≤ ‖u‖^θ_{H^{s₀}}‖u‖^{1-θ}_{H^{σ}}, σ = (s-θs₀)/(1-θ).
/// The tame constant is max(1, 2^{s-1})·(Σ_k ⟨k⟩^{-2s₀})^{1/2} over the grid modes.
pub fn check_tame_and_interpolation(
    u: &SpectralFunction,
    v: &SpectralFunction,
    s: f64,
    s0: f64,
    theta: f64,
) -> Result<TameReport> {
    u.grid.check_same(&v.grid)?;
    if !(0.0..1.0).contains(&theta) || s < s0 || s0 <= 0.5 {
        return Err(Error::InvalidParameter(
            "need 0 <= theta < 1, s >= s0 > 1/2".into(),
        ));
    }
    let prod = u.mul_exact(v);
    let tame_lhs = prod.sobolev_norm(s);
    let tame_rhs = u.sobolev_norm(s) * v.sobolev_norm(s0) + u.sobolev_norm(s0) * v.sobolev_norm(s);
    let l1: f64 = u
        .grid
        .modes()
        .map(|k| bracket(k as f64).powf(-2.0 * s0))
        .sum::<f64>()
        .sqrt();
    let tame_constant = (2f64.powf(s - 1.0)).max(1.0) * l1;
    let high = (s - theta * s0) / (1.0 - theta);
    let interp_lhs = u.sobolev_norm(s);
    let interp_rhs = u.sobolev_norm(s0).powf(theta) * u.sobolev_norm(high).powf(1.0 - theta);
    Ok(TameReport {
        tame_lhs,
        tame_rhs,
        tame_constant,
        interp_lhs,
        interp_rhs,
        interp_low: s0,
        interp_high: high,
    })
}

/// Random real band-limited function with coefficients of size ⟨j⟩^{-decay}.
pub fn random_real<R: Rng>(
    grid: &TorusGrid,
    band: i64,
    decay: f64,
    mean_zero: bool,
    rng: &mut R,
) -> SpectralFunction {
    let mut u = SpectralFunction::zeros(grid);
    let band = band.min(grid.j_max());
    for j in 0..=band {
        if j == 0 && mean_zero {
            continue;
        }
        let w = bracket(j as f64).powf(-decay);
        let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * w;
        let c = if j == 0 { C64::new(c.re, 0.0) } else { c };
        let ip = grid.index(j).unwrap();
        let im = grid.index(-j).unwrap();
        u.coeffs[ip] = c;
        u.coeffs[im] = c.conj();
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_mode_and_constant() {
        let g = TorusGrid::new(16).unwrap();
        let u = transform(&g, &g.points().iter().map(|&x| C64::from_polar(1.0, x)).collect::<Vec<_>>()).unwrap();
        for j in g.modes() {
            let want = if j == 1 { 1.0 } else { 0.0 };
            assert!((u.coeff(j) - want).norm() < 1e-14);
        }
        let one = SpectralFunction::from_fn(&g, |_| 1.0);
        assert!((one.coeff(0) - 1.0).norm() < 1e-15);
        assert!((one.sobolev_norm(3.3) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sobolev_norm_examples() {
        let g = TorusGrid::new(16).unwrap();
        let e1 = SpectralFunction::single_mode(&g, 1, C64::new(1.0, 0.0));
        assert!((e1.sobolev_norm(1.0) - 2f64.sqrt()).abs() < 1e-14);
        let e2 = SpectralFunction::single_mode(&g, 2, C64::new(1.0, 0.0));
        assert!((e2.sobolev_norm(2.0) - 5.0).abs() < 1e-13);
    }

    #[test]
    fn multipliers() {
        let g = TorusGrid::new(16).unwrap();
        let e1 = SpectralFunction::single_mode(&g, 1, C64::new(1.0, 0.0));
        assert!((e1.bracket_pow(-1.0).coeff(1) - 1.0 / 2f64.sqrt()).norm() < 1e-15);
        let e2 = SpectralFunction::single_mode(&g, 2, C64::new(1.0, 0.0));
        assert!((e2.derivative(1).coeff(2) - C64::new(0.0, 2.0)).norm() < 1e-15);
        let sum = &e1 + &SpectralFunction::single_mode(&g, 3, C64::new(1.0, 0.0));
        let p = sum.project(1);
        assert_eq!(p.coeff(3), C64::new(0.0, 0.0));
        assert_eq!(p.coeff(1), C64::new(1.0, 0.0));
    }

    #[test]
    fn inner_products() {
        let g = TorusGrid::new(16).unwrap();
        let e1 = SpectralFunction::single_mode(&g, 1, C64::new(1.0, 0.0));
        let e2 = SpectralFunction::single_mode(&g, 2, C64::new(1.0, 0.0));
        assert!((inner_product(&e1, &e1).unwrap() - 1.0).norm() < 1e-15);
        assert!(inner_product(&e1, &e2).unwrap().norm() < 1e-15);
        let v = StateVector {
            z: SpectralFunction::single_mode(&g, 1, I),
            w: StateVector::zeros(&g).w,
        };
        let b = v.to_blocks();
        assert!((inner_product_four_block(&b, &b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = TorusGrid::new(32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = transform(&g, &vals.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>()).unwrap();
        let back = inverse_transform(&u);
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b.re).abs() < 1e-13 && b.im.abs() < 1e-13);
        }
        let l2: f64 = back.iter().map(|c| c.norm_sqr()).sum::<f64>() / 32.0;
        assert!((inner_product(&u, &u).unwrap().re - l2).abs() < 1e-12 * l2);
        assert!(transform(&g, &[C64::new(0.0, 0.0); 5]).is_err());
    }

    #[test]
    fn interpolation_equality_for_single_mode() {
        let g = TorusGrid::new(16).unwrap();
        let e1 = SpectralFunction::from_fn(&g, |x| x.cos());
        let r = check_tame_and_interpolation(&e1, &e1, 2.0, 1.0, 0.3).unwrap();
        assert!((r.interp_lhs - r.interp_rhs).abs() < 1e-12 * r.interp_lhs);
        let one = SpectralFunction::constant(&g, 1.0);
        let r = check_tame_and_interpolation(&one, &one, 2.0, 1.0, 0.5).unwrap();
        assert!((r.interp_lhs - 1.0).abs() < 1e-14 && (r.interp_rhs - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ladder() {
        let l = RegularityLadder::default();
        assert!((l.s1 - 2.1).abs() < 1e-12 && (l.s2 - 4.1).abs() < 1e-12);
        assert!(RegularityLadder::new(0.4, 8.0).is_err());
        assert!(RegularityLadder::new(0.6, 3.0).is_err());
    }
}

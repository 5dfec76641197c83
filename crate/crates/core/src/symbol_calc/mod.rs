//! Symbols a(x, ξ) as finite sums of spatial coefficients times closed-form
//! frequency multipliers, with exact ξ-derivatives, seminorms, products,
//! Poisson brackets and the #ρ composition law.

pub mod jet;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::spectral_core::{bracket, SpectralFunction, TorusGrid, C64};
pub use jet::Jet;

/// Default paradifferential cutoff parameter.
pub const DEFAULT_EPS_PARA: f64 = 0.5;

fn smooth_step_jet(t: Jet) -> Jet {
    let t0 = t.value();
    if t0 <= 0.0 {
        return Jet::zero();
    }
    if t0 >= 1.0 {
        return Jet::constant(1.0);
    }
    let g1 = (-t.recip()).exp();
    let g2 = (-(Jet::constant(1.0) - t).recip()).exp();
    g1 * (g1 + g2).recip()
}

fn abs_jet(xi: Jet) -> Jet {
    if xi.value() < 0.0 {
        -xi
    } else {
        xi
    }
}

fn chi_jet(xi: Jet) -> Jet {
    let a = abs_jet(xi);
    if a.value() <= 1.1 {
        return Jet::constant(1.0);
    }
    smooth_step_jet((Jet::constant(1.9) - a).scale(1.0 / 0.8))
}

fn psi_jet(xi: Jet) -> Jet {
    let a = abs_jet(xi);
    if a.value() <= 0.25 {
        return Jet::zero();
    }
    smooth_step_jet((a - Jet::constant(0.25)).scale(4.0))
}

/// χ: 1 on |ξ| ≤ 1.1, 0 on |ξ| ≥ 1.9.
pub fn cutoff_chi_unit(xi: f64) -> f64 {
    chi_jet(Jet::constant(xi)).value()
}

/// χ_ε(ξ) = χ(ξ/ε).
pub fn cutoff_chi(xi: f64, eps_para: f64) -> f64 {
    cutoff_chi_unit(xi / eps_para)
}

/// ψ: 0 on |ξ| ≤ 1/4, 1 on |ξ| ≥ 1/2.
pub fn cutoff_psi(xi: f64) -> f64 {
    psi_jet(Jet::constant(xi)).value()
}

/// Closed-form functions of ξ alone.
#[derive(Clone, Debug, PartialEq)]
pub enum FrequencyMultiplier {
    Const(f64),
    /// ξ^k
    Power(u32),
    /// ⟨ξ⟩^s
    Bracket(f64),
    /// |ξ|
    Abs,
    /// |ξ|^p
    AbsPow(f64),
    /// χ_ε(ξ)
    Chi(f64),
    /// ψ(ξ)
    Psi,
    Product(Box<FrequencyMultiplier>, Box<FrequencyMultiplier>),
    Sum(Box<FrequencyMultiplier>, Box<FrequencyMultiplier>),
    Quotient(Box<FrequencyMultiplier>, Box<FrequencyMultiplier>),
    /// ∂_ξ^d of the inner multiplier
    Deriv(Box<FrequencyMultiplier>, u8),
}

use FrequencyMultiplier as FM;

impl FrequencyMultiplier {
    pub fn one() -> Self {
        FM::Const(1.0)
    }

    pub fn times(self, other: FM) -> FM {
        match (&self, &other) {
            (FM::Const(a), _) if *a == 1.0 => other,
            (_, FM::Const(b)) if *b == 1.0 => self,
            _ => FM::Product(Box::new(self), Box::new(other)),
        }
    }

    pub fn plus(self, other: FM) -> FM {
        FM::Sum(Box::new(self), Box::new(other))
    }

    pub fn over(self, other: FM) -> FM {
        FM::Quotient(Box::new(self), Box::new(other))
    }

    /// ∂_ξ^β as a new multiplier.
    pub fn dxi(&self, beta: u8) -> FM {
        if beta == 0 {
            return self.clone();
        }
        match self {
            FM::Const(_) => FM::Const(0.0),
            FM::Deriv(inner, d) => FM::Deriv(inner.clone(), d + beta),
            _ => FM::Deriv(Box::new(self.clone()), beta),
        }
    }

    /// Highest ξ-derivative still available exactly.
    pub fn available_order(&self) -> usize {
        match self {
            FM::Product(a, b) | FM::Sum(a, b) | FM::Quotient(a, b) => {
                a.available_order().min(b.available_order())
            }
            FM::Deriv(a, d) => a.available_order().saturating_sub(*d as usize),
            _ => jet::JET_LEN - 1,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, FM::Const(c) if *c == 0.0)
    }

    pub fn order(&self) -> f64 {
        match self {
            FM::Const(_) => 0.0,
            FM::Power(k) => *k as f64,
            FM::Bracket(s) => *s,
            FM::Abs => 1.0,
            FM::AbsPow(p) => *p,
            FM::Chi(_) => f64::NEG_INFINITY,
            FM::Psi => 0.0,
            FM::Product(a, b) => a.order() + b.order(),
            FM::Sum(a, b) => a.order().max(b.order()),
            FM::Quotient(a, b) => a.order() - b.order(),
            FM::Deriv(a, d) => a.order() - *d as f64,
        }
    }

    pub fn jet(&self, xi: f64) -> Jet {
        let x = Jet::var(xi);
        match self {
            FM::Const(c) => Jet::constant(*c),
            FM::Power(k) => {
                let mut r = Jet::constant(1.0);
                for _ in 0..*k {
                    r = r * x;
                }
                r
            }
            FM::Bracket(s) => (x * x + Jet::constant(1.0)).powf(*s * 0.5),
            FM::Abs => abs_jet(x),
            FM::AbsPow(p) => {
                if xi == 0.0 {
                    Jet::zero()
                } else {
                    abs_jet(x).powf(*p)
                }
            }
            FM::Chi(eps) => chi_jet(x.scale(1.0 / eps)),
            FM::Psi => psi_jet(x),
            FM::Product(a, b) => a.jet(xi) * b.jet(xi),
            FM::Sum(a, b) => a.jet(xi) + b.jet(xi),
            FM::Quotient(a, b) => {
                let num = a.jet(xi);
                if num.is_zero() {
                    Jet::zero()
                } else {
                    num * b.jet(xi).recip()
                }
            }
            FM::Deriv(a, d) => a.jet(xi).shift(*d as usize),
        }
    }

    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            FM::Const(c) => *c,
            FM::Power(k) => xi.powi(*k as i32),
            FM::Bracket(s) => bracket(xi).powf(*s),
            FM::Abs => xi.abs(),
            FM::AbsPow(p) => {
                if xi == 0.0 {
                    0.0
                } else {
                    xi.abs().powf(*p)
                }
            }
            FM::Chi(eps) => cutoff_chi(xi, *eps),
            FM::Psi => cutoff_psi(xi),
            FM::Product(a, b) => a.eval(xi) * b.eval(xi),
            FM::Sum(a, b) => a.eval(xi) + b.eval(xi),
            FM::Quotient(a, b) => {
                let n = a.eval(xi);
                if n == 0.0 {
                    0.0
                } else {
                    n / b.eval(xi)
                }
            }
            FM::Deriv(..) => self.jet(xi).value(),
        }
    }

    /// ∂_ξ^β g(ξ), exact.
    pub fn derivative_at(&self, xi: f64, beta: usize) -> Result<f64> {
        if beta > self.available_order() {
            return Err(Error::DerivativeOrder(beta));
        }
        if beta == 0 {
            return Ok(self.eval(xi));
        }
        Ok(self.jet(xi).deriv(beta))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolTerm {
    pub coeff: SpectralFunction,
    pub mult: FrequencyMultiplier,
}

/// a(x, ξ) = Σ_k f_k(x) g_k(ξ).
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableSymbol {
    grid: TorusGrid,
    terms: Vec<SymbolTerm>,
}

impl SeparableSymbol {
    pub fn zero(grid: &TorusGrid) -> Self {
        Self {
            grid: *grid,
            terms: Vec::new(),
        }
    }

    pub fn term(coeff: SpectralFunction, mult: FrequencyMultiplier) -> Self {
        let grid = *coeff.grid();
        let mut s = Self::zero(&grid);
        s.push(coeff, mult);
        s
    }

    pub fn constant(grid: &TorusGrid, c: f64) -> Self {
        Self::term(SpectralFunction::constant(grid, c), FM::one())
    }

    pub fn x_only(f: SpectralFunction) -> Self {
        Self::term(f, FM::one())
    }

    pub fn xi_only(grid: &TorusGrid, g: FrequencyMultiplier) -> Self {
        Self::term(SpectralFunction::constant(grid, 1.0), g)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn terms(&self) -> &[SymbolTerm] {
        &self.terms
    }

    pub fn push(&mut self, coeff: SpectralFunction, mult: FrequencyMultiplier) {
        assert_eq!(coeff.grid(), &self.grid, "grid mismatch");
        if mult.is_zero() || coeff.max_abs() == 0.0 {
            return;
        }
        if let Some(t) = self.terms.iter_mut().find(|t| t.mult == mult) {
            t.coeff = &t.coeff + &coeff;
        } else {
            self.terms.push(SymbolTerm { coeff, mult });
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.max_abs() == 0.0)
    }

    pub fn order(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.mult.order())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Evaluation at an arbitrary x via Fourier sums.
    pub fn eval(&self, x: f64, xi: f64) -> C64 {
        self.terms
            .iter()
            .map(|t| t.coeff.eval_at(x) * t.mult.eval(xi))
            .sum()
    }

    /// Evaluation at grid point index m.
    pub fn eval_grid(&self, m: usize, xi: f64) -> C64 {
        self.terms
            .iter()
            .map(|t| t.coeff.values()[m] * t.mult.eval(xi))
            .sum()
    }

    pub fn add(&self, other: &SeparableSymbol) -> SeparableSymbol {
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.coeff.clone(), t.mult.clone());
        }
        out
    }

    pub fn sub(&self, other: &SeparableSymbol) -> SeparableSymbol {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, a: C64) -> SeparableSymbol {
        SeparableSymbol {
            grid: self.grid,
            terms: self
                .terms
                .iter()
                .map(|t| SymbolTerm {
                    coeff: t.coeff.scale(a),
                    mult: t.mult.clone(),
                })
                .collect(),
        }
    }

    /// Multiply every term by a multiplier.
    pub fn times_multiplier(&self, g: &FrequencyMultiplier) -> SeparableSymbol {
        let mut out = SeparableSymbol::zero(&self.grid);
        for t in &self.terms {
            out.push(t.coeff.clone(), t.mult.clone().times(g.clone()));
        }
        out
    }

    /// Multiply every coefficient by f(x) on the grid.
    pub fn times_function(&self, f: &SpectralFunction) -> SeparableSymbol {
        let mut out = SeparableSymbol::zero(&self.grid);
        for t in &self.terms {
            out.push(t.coeff.mul_collocation(f), t.mult.clone());
        }
        out
    }

    /// Pointwise product; coefficients are multiplied on the grid.
    pub fn mul(&self, other: &SeparableSymbol) -> SeparableSymbol {
        let mut out = SeparableSymbol::zero(&self.grid);
        for a in &self.terms {
            for b in &other.terms {
                out.push(a.coeff.mul_collocation(&b.coeff), a.mult.clone().times(b.mult.clone()));
            }
        }
        out
    }

    pub fn dx(&self) -> SeparableSymbol {
        let mut out = SeparableSymbol::zero(&self.grid);
        for t in &self.terms {
            out.push(t.coeff.derivative(1), t.mult.clone());
        }
        out
    }

    pub fn dxi(&self, beta: u8) -> SeparableSymbol {
        let mut out = SeparableSymbol::zero(&self.grid);
        for t in &self.terms {
            out.push(t.coeff.clone(), t.mult.dxi(beta));
        }
        out
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.grid.n_points().hash(&mut h);
        for t in &self.terms {
            for c in t.coeff.coeffs() {
                c.re.to_bits().hash(&mut h);
                c.im.to_bits().hash(&mut h);
            }
            format!("{:?}", t.mult).hash(&mut h);
        }
        h.finish()
    }
}

/// {a, b} = ∂_ξa ∂_xb − ∂_xa ∂_ξb.
pub fn poisson_bracket(a: &SeparableSymbol, b: &SeparableSymbol) -> SeparableSymbol {
    a.dxi(1).mul(&b.dx()).sub(&a.dx().mul(&b.dxi(1)))
}

/// a #_ρ b: ab for ρ ≤ 1, ab + (1/2i){a, b} for ρ ∈ (1, 2].
pub fn sharp_rho(a: &SeparableSymbol, b: &SeparableSymbol, rho: f64) -> Result<SeparableSymbol> {
    if !(rho > 0.0 && rho <= 2.0) {
        return Err(Error::InvalidParameter(format!("rho must lie in (0, 2], got {rho}")));
    }
    let ab = a.mul(b);
    if rho <= 1.0 {
        return Ok(ab);
    }
    let half_over_i = C64::new(0.0, -0.5);
    Ok(ab.add(&poisson_bracket(a, b).scale(half_over_i)))
}

/// Sampled Weyl evaluation set: ξ = j/2 for |j| ≤ n_points.
pub fn seminorm_xi_samples(grid: &TorusGrid) -> Vec<f64> {
    let n = grid.n_points() as i64;
    (-n..=n).map(|j| j as f64 * 0.5).collect()
}

/// |a|_{m,s,n} = max_{β ≤ n} sup_ξ ⟨ξ⟩^{β−m} ‖∂_ξ^β a(·, ξ)‖_{H^s}.
pub fn seminorm(a: &SeparableSymbol, m: f64, s: f64, n: usize) -> Result<f64> {
    if n > 8 {
        return Err(Error::DerivativeOrder(n));
    }
    for t in a.terms() {
        if t.mult.available_order() < n {
            return Err(Error::DerivativeOrder(n));
        }
    }
    let grid = *a.grid();
    let xis = seminorm_xi_samples(&grid);
    let len = grid.n_points();
    let mut best = 0.0f64;
    for beta in 0..=n {
        for &xi in &xis {
            let mut acc = vec![C64::new(0.0, 0.0); len];
            for t in a.terms() {
                let g = t.mult.derivative_at(xi, beta)?;
                if g == 0.0 {
                    continue;
                }
                for (o, c) in acc.iter_mut().zip(t.coeff.coeffs()) {
                    *o += c * g;
                }
            }
            let norm = crate::spectral_core::sobolev_norm_coeffs(&grid, &acc, s);
            best = best.max(norm * bracket(xi).powf(beta as f64 - m));
        }
    }
    Ok(best)
}

/// Rectangular array of separable symbols; 2×2 blocks or 4×4.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSymbol {
    dim: usize,
    entries: Vec<SeparableSymbol>,
}

impl MatrixSymbol {
    pub fn zeros(grid: &TorusGrid, dim: usize) -> Self {
        Self {
            dim,
            entries: vec![SeparableSymbol::zero(grid); dim * dim],
        }
    }

    pub fn from_constant(grid: &TorusGrid, m: &[&[f64]]) -> Self {
        let dim = m.len();
        let mut out = Self::zeros(grid, dim);
        for i in 0..dim {
            for j in 0..dim {
                if m[i][j] != 0.0 {
                    out.entries[i * dim + j] = SeparableSymbol::constant(grid, m[i][j]);
                }
            }
        }
        out
    }

    pub fn identity(grid: &TorusGrid, dim: usize) -> Self {
        let mut out = Self::zeros(grid, dim);
        for i in 0..dim {
            out.entries[i * dim + i] = SeparableSymbol::constant(grid, 1.0);
        }
        out
    }

    /// E = diag(1, −1).
    pub fn e(grid: &TorusGrid) -> Self {
        Self::from_constant(grid, &[&[1.0, 0.0], &[0.0, -1.0]])
    }

    /// U = all ones.
    pub fn u(grid: &TorusGrid) -> Self {
        Self::from_constant(grid, &[&[1.0, 1.0], &[1.0, 1.0]])
    }

    /// Constant matrix times a scalar symbol.
    pub fn constant_times(grid: &TorusGrid, m: &[&[f64]], a: &SeparableSymbol) -> Self {
        let dim = m.len();
        let mut out = Self::zeros(grid, dim);
        for i in 0..dim {
            for j in 0..dim {
                if m[i][j] != 0.0 {
                    out.entries[i * dim + j] = a.scale(C64::new(m[i][j], 0.0));
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &SeparableSymbol {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, a: SeparableSymbol) {
        self.entries[i * self.dim + j] = a;
    }

    pub fn order(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.order())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn add(&self, other: &MatrixSymbol) -> MatrixSymbol {
        MatrixSymbol {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn scale(&self, a: C64) -> MatrixSymbol {
        MatrixSymbol {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e.scale(a)).collect(),
        }
    }

    fn combine(
        &self,
        other: &MatrixSymbol,
        f: impl Fn(&SeparableSymbol, &SeparableSymbol) -> Result<SeparableSymbol>,
    ) -> Result<MatrixSymbol> {
        let d = self.dim;
        let grid = *self.entries[0].grid();
        let mut out = MatrixSymbol::zeros(&grid, d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = SeparableSymbol::zero(&grid);
                for k in 0..d {
                    let a = self.entry(i, k);
                    let b = other.entry(k, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.add(&f(a, b)?);
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// Matrix product with pointwise entry products.
    pub fn mul(&self, other: &MatrixSymbol) -> MatrixSymbol {
        self.combine(other, |a, b| Ok(a.mul(b))).expect("infallible")
    }

    /// Matrix #ρ product.
    pub fn sharp(&self, other: &MatrixSymbol, rho: f64) -> Result<MatrixSymbol> {
        self.combine(other, |a, b| sharp_rho(a, b, rho))
    }

    /// Pointwise value at a grid point.
    pub fn eval_grid(&self, m: usize, xi: f64) -> Vec<C64> {
        self.entries.iter().map(|e| e.eval_grid(m, xi)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TorusGrid {
        TorusGrid::new(32).unwrap()
    }

    #[test]
    fn cutoff_values() {
        assert_eq!(cutoff_chi_unit(1.0), 1.0);
        assert_eq!(cutoff_chi_unit(2.0), 0.0);
        assert_eq!(cutoff_psi(1.0), 1.0);
        assert_eq!(cutoff_psi(0.0), 0.0);
        let c = cutoff_chi_unit(1.5);
        assert!(c > 0.0 && c < 1.0);
        let mut prev = 1.0;
        for k in 1..80 {
            let v = cutoff_chi_unit(1.1 + 0.01 * k as f64);
            assert!(v <= prev);
            if (10..70).contains(&k) {
                assert!(v < prev);
            }
            prev = v;
        }
        assert_eq!(cutoff_chi(0.5, 0.5), 1.0);
    }

    #[test]
    fn multiplier_derivatives() {
        let g = FM::Bracket(1.5);
        let h = 1e-4;
        let xi = 0.8;
        let fd = (g.eval(xi + h) - g.eval(xi - h)) / (2.0 * h);
        let d1 = g.derivative_at(xi, 1).unwrap();
        assert!((d1 - fd).abs() < 1e-7, "{d1} vs {fd}");
        let q = FM::Psi.over(FM::Power(1));
        assert_eq!(q.eval(0.0), 0.0);
        assert_eq!(q.derivative_at(0.0, 3).unwrap(), 0.0);
        assert!(FM::Psi.dxi(8).derivative_at(0.3, 1).is_err());
        assert_eq!(FM::Power(2).times(FM::Bracket(-1.5)).order(), 0.5);
    }

    #[test]
    fn half_derivative_identity() {
        // ξ²/⟨ξ⟩ − |ξ| = −|ξ|/((|ξ|+⟨ξ⟩)⟨ξ⟩)
        for &xi in &[0.3, 1.0, 2.5, -4.0] {
            let lhs = xi * xi / bracket(xi) - xi.abs();
            let rhs = -xi.abs() / ((xi.abs() + bracket(xi)) * bracket(xi));
            assert!((lhs - rhs).abs() < 1e-14);
        }
        let at1 = 1.0 / 2f64.sqrt() - 1.0;
        assert!((at1 + 0.292893).abs() < 1e-6);
    }

    #[test]
    fn bracket_examples() {
        let g = grid();
        let a = SeparableSymbol::x_only(SpectralFunction::from_fn(&g, f64::cos));
        let b = SeparableSymbol::xi_only(&g, FM::Power(2));
        let pb = poisson_bracket(&a, &b);
        for &x in &[0.1f64, 1.3, 4.0] {
            for &xi in &[0.5, 2.0, -3.0] {
                let want = 2.0 * xi * x.sin();
                assert!((pb.eval(x, xi) - want).norm() < 1e-12);
            }
        }
        let s = SeparableSymbol::x_only(SpectralFunction::from_fn(&g, f64::sin));
        let xi1 = SeparableSymbol::xi_only(&g, FM::Power(1));
        let c = sharp_rho(&s, &xi1, 2.0).unwrap();
        for &x in &[0.2f64, 2.2] {
            let want = C64::new(1.7 * x.sin(), 0.5 * x.cos());
            assert!((c.eval(x, 1.7) - want).norm() < 1e-12);
        }
        let aa = sharp_rho(&pb, &pb, 2.0).unwrap().sub(&pb.mul(&pb));
        for &x in &[0.4, 5.0] {
            assert!(aa.eval(x, 1.1).norm() < 1e-11);
        }
    }

    #[test]
    fn seminorm_examples() {
        let g = grid();
        let one = SeparableSymbol::constant(&g, 1.0);
        assert!((seminorm(&one, 0.0, 2.0, 4).unwrap() - 1.0).abs() < 1e-14);
        let xi2 = SeparableSymbol::xi_only(&g, FM::Power(2));
        let v = seminorm(&xi2, 2.0, 0.0, 0).unwrap();
        assert!(v < 1.0 && v > 0.99);
        let e = SpectralFunction::single_mode(&g, 1, C64::new(1.0, 0.0));
        let a = SeparableSymbol::term(e, FM::Bracket(-1.5));
        assert!((seminorm(&a, -1.5, 0.0, 0).unwrap() - 1.0).abs() < 1e-14);
        assert!(seminorm(&a, -1.5, 0.0, 9).is_err());
    }
}

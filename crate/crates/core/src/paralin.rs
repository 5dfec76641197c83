//! Complexified form of the beam-wave system and its paradifferential
//! decomposition ∂ₜV = 𝔄(V)V + 𝔅(V)V + 𝚁V + ℛ(V) + G(t).
//!
//! Vectors are flat [z, z̄, w, w̄] coefficient arrays of length 4n, with
//! z = (⟨D⟩y + i⟨D⟩⁻¹yₜ)/√2 and w = (⟨D⟩^{½}θ + i⟨D⟩^{−½}θₜ)/√2.

use std::collections::VecDeque;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use crate::bridge_model::{check_ellipticity, BridgeSystem, JetVar};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::quantize::{bony_weyl_quantize_matrix, SpectralOperator};
use crate::spectral_core::{bracket, SpectralFunction, StateVector, TorusGrid, C64, I};
use crate::symbol_calc::{FrequencyMultiplier as FM, MatrixSymbol, SeparableSymbol};

const SQRT2: f64 = std::f64::consts::SQRT_2;
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Real fields (y, yₜ, θ, θₜ).
#[derive(Clone, Debug, PartialEq)]
pub struct RealState {
    pub y: SpectralFunction,
    pub y_t: SpectralFunction,
    pub theta: SpectralFunction,
    pub theta_t: SpectralFunction,
}

fn require_real(u: &SpectralFunction, name: &str) -> Result<()> {
    if u.is_real() || u.is_hermitian(1e-12) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be real-valued")))
    }
}

pub fn complexify(
    y: &SpectralFunction,
    y_t: &SpectralFunction,
    theta: &SpectralFunction,
    theta_t: &SpectralFunction,
) -> Result<StateVector> {
    for (u, name) in [(y, "y"), (y_t, "y_t"), (theta, "theta"), (theta_t, "theta_t")] {
        require_real(u, name)?;
    }
    let g = *y.grid();
    let mk = |p: &SpectralFunction, q: &SpectralFunction, s: f64| {
        let coeffs: Vec<C64> = g
            .modes()
            .enumerate()
            .map(|(idx, j)| {
                if idx == 0 {
                    return ZERO;
                }
                let w = bracket(j as f64).powf(s);
                (p.coeff(j) * w + I * q.coeff(j) / w) / SQRT2
            })
            .collect();
        SpectralFunction::from_coeffs(&g, coeffs, false)
    };
    Ok(StateVector {
        z: mk(y, y_t, 1.0)?,
        w: mk(theta, theta_t, 0.5)?,
    })
}

pub fn realify(v: &StateVector) -> RealState {
    let split = |u: &SpectralFunction, s: f64| {
        let re = u.real_part();
        let mut im = (u - &u.conj()).scale(C64::new(0.0, -0.5));
        im.symmetrize();
        (
            re.bracket_pow(-s) * SQRT2,
            im.bracket_pow(s) * SQRT2,
        )
    };
    let (y, y_t) = split(&v.z, 1.0);
    let (theta, theta_t) = split(&v.w, 0.5);
    RealState {
        y,
        y_t,
        theta,
        theta_t,
    }
}

/// Background functions entering the paradifferential symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct GFunctions {
    pub a: SpectralFunction,
    pub d: SpectralFunction,
    pub g1_w: SpectralFunction,
    pub g_half_b: SpectralFunction,
    pub g_half_w: SpectralFunction,
}

impl GFunctions {
    /// a_w = d + g_{1,w}.
    pub fn a_w(&self) -> SpectralFunction {
        &self.d + &self.g1_w
    }
}

/// A_b, A_w, B_b, B_w.
#[derive(Clone, Debug, PartialEq)]
pub struct ParaSymbols {
    pub a_b: MatrixSymbol,
    pub a_w: MatrixSymbol,
    pub b_b: MatrixSymbol,
    pub b_w: MatrixSymbol,
}

/// (1·𝟙 + f·U) g(ξ) as a 2×2 matrix symbol.
fn identity_plus_u(grid: &TorusGrid, f: &SpectralFunction, g: FM) -> MatrixSymbol {
    let mut m = MatrixSymbol::zeros(grid, 2);
    let one = SpectralFunction::constant(grid, 1.0);
    for i in 0..2 {
        for j in 0..2 {
            let mut s = SeparableSymbol::zero(grid);
            if i == j {
                s.push(one.clone(), g.clone());
            }
            s.push(f.clone(), g.clone());
            m.set(i, j, s);
        }
    }
    m
}

fn u_times(grid: &TorusGrid, f: &SpectralFunction, g: FM) -> MatrixSymbol {
    MatrixSymbol::constant_times(grid, &[&[1.0, 1.0], &[1.0, 1.0]], &SeparableSymbol::term(f.clone(), g))
}

/// Multiply the rows of the first half by −i and of the second half by +i.
pub(crate) fn minus_i_e(op: &SpectralOperator) -> SpectralOperator {
    let n = op.grid().n_points();
    let m = op.matrix();
    let d = m.rows();
    let out = CMatrix::from_fn(d, d, |r, c| {
        let f = if r < n { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) };
        m.get(r, c) * f
    });
    SpectralOperator::new(op.grid(), op.blocks(), out, op.declared_order())
}

pub(crate) fn embed_4(
    grid: &TorusGrid,
    tl: Option<&SpectralOperator>,
    tr: Option<&SpectralOperator>,
    bl: Option<&SpectralOperator>,
    br: Option<&SpectralOperator>,
) -> SpectralOperator {
    let n = grid.n_points();
    let mut m = CMatrix::zeros(4 * n, 4 * n);
    let mut order = f64::NEG_INFINITY;
    for (pos, op) in [((0, 0), tl), ((0, 1), tr), ((1, 0), bl), ((1, 1), br)] {
        if let Some(op) = op {
            m.set_block(pos.0, pos.1, op.matrix());
            order = order.max(op.declared_order());
        }
    }
    SpectralOperator::new(grid, 4, m, order)
}

/// Complex 2-block operator [[Q₁, Q₂], [conj Q₂, conj Q₁]].
fn conj_pair(q1: &SpectralOperator, q2: &SpectralOperator) -> SpectralOperator {
    let g = *q1.grid();
    let c1 = q1.conjugate();
    let c2 = q2.conjugate();
    SpectralOperator::from_block_grid(&g, &[vec![Some(q1), Some(q2)], vec![Some(&c2), Some(&c1)]])
}

fn fingerprint(v: &[C64]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for c in v {
        c.re.to_bits().hash(&mut h);
        c.im.to_bits().hash(&mut h);
    }
    h.finish()
}

const CACHE_CAPACITY: usize = 8;

type FrakPair = Arc<(SpectralOperator, SpectralOperator)>;

pub struct ParalinearizedSystem {
    sys: BridgeSystem,
    grid: TorusGrid,
    eps_para: f64,
    a: SpectralFunction,
    d: SpectralFunction,
    l_complex: SpectralOperator,
    frak_a_beam: SpectralOperator,
    frak_a0: SpectralOperator,
    r_op: SpectralOperator,
    cache: Mutex<VecDeque<(u64, FrakPair)>>,
    frozen_cache: Mutex<VecDeque<(u64, Arc<CMatrix>)>>,
}

impl std::fmt::Debug for ParalinearizedSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParalinearizedSystem")
            .field("n_points", &self.grid.n_points())
            .field("eps_para", &self.eps_para)
            .finish()
    }
}

impl ParalinearizedSystem {
    pub fn new(sys: &BridgeSystem, eps_para: f64) -> Result<Self> {
        if !(eps_para > 0.0 && eps_para < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps_para must lie in (0, 1), got {eps_para}"
            )));
        }
        check_ellipticity(sys)?;
        let grid = sys.grid;
        let one = SpectralFunction::constant(&grid, 1.0);
        let a = (&sys.b - &one) * 0.5;
        let d = (&sys.c - &one) * 0.5;
        let l_complex = linear_complex(sys);
        let a_b = a_b_symbol(&grid, &a);
        let frak_a_beam = minus_i_e(&bony_weyl_quantize_matrix(&a_b, eps_para));
        let a_w0 = identity_plus_u(&grid, &d, FM::Abs);
        let wave0 = minus_i_e(&bony_weyl_quantize_matrix(&a_w0, eps_para));
        let frak_a0 = embed_4(&grid, Some(&frak_a_beam), None, None, Some(&wave0)).with_order(2.0);
        let r_op = l_complex.sub(&frak_a0).with_order(0.0);
        Ok(Self {
            sys: sys.clone(),
            grid,
            eps_para,
            a,
            d,
            l_complex,
            frak_a_beam,
            frak_a0,
            r_op,
            cache: Mutex::new(VecDeque::new()),
            frozen_cache: Mutex::new(VecDeque::new()),
        })
    }

    pub fn system(&self) -> &BridgeSystem {
        &self.sys
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn eps_para(&self) -> f64 {
        self.eps_para
    }

    /// a = (b − 1)/2.
    pub fn a(&self) -> &SpectralFunction {
        &self.a
    }

    /// d = (c − 1)/2.
    pub fn d(&self) -> &SpectralFunction {
        &self.d
    }

    /// Exact complexified linear part, damping included.
    pub fn l_complex(&self) -> &SpectralOperator {
        &self.l_complex
    }

    /// 𝔄(0).
    pub fn frak_a_zero(&self) -> &SpectralOperator {
        &self.frak_a0
    }

    /// 𝚁 = L_complex − 𝔄(0).
    pub fn assemble_r(&self) -> &SpectralOperator {
        &self.r_op
    }

    pub fn build_g_functions(&self, v: &StateVector) -> GFunctions {
        let r = realify(v);
        let (f1, f2) = (&self.sys.f1, &self.sys.f2);
        GFunctions {
            a: self.a.clone(),
            d: self.d.clone(),
            g1_w: f2.partial_dealiased(&r.y, &r.theta, JetVar::ThetaXx) * 0.5,
            g_half_b: f1.partial_dealiased(&r.y, &r.theta, JetVar::ThetaXx) * 0.5,
            g_half_w: f2.partial_dealiased(&r.y, &r.theta, JetVar::Yxx) * 0.5,
        }
    }

    pub fn symbols_from(&self, g: &GFunctions) -> ParaSymbols {
        let grid = self.grid;
        let b_mult = FM::Bracket(-1.5).times(FM::Power(2));
        ParaSymbols {
            a_b: a_b_symbol(&grid, &g.a),
            a_w: identity_plus_u(&grid, &g.a_w(), FM::Abs),
            b_b: u_times(&grid, &g.g_half_b, b_mult.clone()),
            b_w: u_times(&grid, &g.g_half_w, b_mult),
        }
    }

    pub fn assemble_symbols(&self, v: &StateVector) -> ParaSymbols {
        self.symbols_from(&self.build_g_functions(v))
    }

    fn frak_from_g(&self, g: &GFunctions) -> (SpectralOperator, SpectralOperator) {
        let s = self.symbols_from(g);
        let eps = self.eps_para;
        let wave = minus_i_e(&bony_weyl_quantize_matrix(&s.a_w, eps));
        let frak_a = embed_4(&self.grid, Some(&self.frak_a_beam), None, None, Some(&wave)).with_order(2.0);
        let bb = minus_i_e(&bony_weyl_quantize_matrix(&s.b_b, eps));
        let bw = minus_i_e(&bony_weyl_quantize_matrix(&s.b_w, eps));
        let frak_b = embed_4(&self.grid, None, Some(&bb), Some(&bw), None).with_order(0.5);
        (frak_a, frak_b)
    }

    /// (𝔄(V), 𝔅(V)), memoised on the coefficients of V.
    pub fn assemble_frak(&self, v: &StateVector) -> FrakPair {
        let key = fingerprint(&v.to_blocks());
        if let Some((_, p)) = self.cache.lock().unwrap().iter().find(|(k, _)| *k == key) {
            return p.clone();
        }
        let pair = Arc::new(self.frak_from_g(&self.build_g_functions(v)));
        let mut c = self.cache.lock().unwrap();
        if c.len() >= CACHE_CAPACITY {
            c.pop_front();
        }
        c.push_back((key, pair.clone()));
        pair
    }

    /// 𝔄(Ṽ) + 𝔅(Ṽ) + 𝚁 as one matrix.
    pub fn frozen_operator(&self, v: &StateVector) -> Arc<CMatrix> {
        let key = fingerprint(&v.to_blocks());
        if let Some((_, m)) = self.frozen_cache.lock().unwrap().iter().find(|(k, _)| *k == key) {
            return m.clone();
        }
        let m = if self.sys.is_linear() {
            self.l_complex.matrix().clone()
        } else {
            let pair = self.assemble_frak(v);
            let mut m = pair.0.matrix().add(pair.1.matrix());
            m.add_assign(self.r_op.matrix());
            m
        };
        let m = Arc::new(m);
        let mut c = self.frozen_cache.lock().unwrap();
        if c.len() >= CACHE_CAPACITY {
            c.pop_front();
        }
        c.push_back((key, m.clone()));
        m
    }

    /// Quadratic part: (i/√2)⟨D⟩⁻¹F₁ and (i/√2)⟨D⟩^{−½}F₂.
    pub fn nonlinear_part(&self, v: &StateVector) -> StateVector {
        if self.sys.is_linear() {
            return StateVector::zeros(&self.grid);
        }
        let r = realify(v);
        let f1 = self.sys.f1.eval_dealiased(&r.y, &r.theta);
        let f2 = self.sys.f2.eval_dealiased(&r.y, &r.theta);
        StateVector {
            z: f1.bracket_pow(-1.0).scale(I / SQRT2),
            w: f2.bracket_pow(-0.5).scale(I / SQRT2),
        }
    }

    pub fn forcing_g(&self, t: f64) -> StateVector {
        let mut out = StateVector::zeros(&self.grid);
        let fb = self.sys.gamma * self.sys.f_b.eval(t);
        let fw = self.sys.delta * self.sys.f_w.eval(t);
        out.z.set_coeff(0, I * fb / SQRT2);
        out.w.set_coeff(0, I * fw / SQRT2);
        out
    }

    /// Complexified right-hand side on a flat 4-block vector.
    pub fn full_rhs_blocks(&self, v: &[C64], t: f64) -> Result<Vec<C64>> {
        let sv = StateVector::from_blocks(&self.grid, v)?;
        let mut out = self.l_complex.apply(v);
        let extra = self.nonlinear_part(&sv).add(&self.forcing_g(t)).to_blocks();
        out.iter_mut().zip(&extra).for_each(|(o, e)| *o += e);
        Ok(out)
    }

    pub fn full_rhs(&self, v: &StateVector, t: f64) -> StateVector {
        let b = self.full_rhs_blocks(&v.to_blocks(), t).expect("block length");
        StateVector::from_blocks(&self.grid, &b).expect("block length")
    }

    /// ℛ(V) = full_rhs − 𝔄V − 𝔅V − 𝚁V − G, taken at t.
    pub fn remainder_blocks(&self, v: &StateVector, t: f64) -> Vec<C64> {
        let vb = v.to_blocks();
        let mut out = self.full_rhs_blocks(&vb, t).expect("block length");
        let pair = self.assemble_frak(v);
        let av = pair.0.apply(&vb);
        let bv = pair.1.apply(&vb);
        let rv = self.r_op.apply(&vb);
        let g = self.forcing_g(t).to_blocks();
        for i in 0..out.len() {
            out[i] -= av[i] + bv[i] + rv[i] + g[i];
        }
        out
    }

    pub fn remainder_r_of_v(&self, v: &StateVector) -> StateVector {
        StateVector::from_blocks(&self.grid, &self.remainder_blocks(v, 0.0)).expect("block length")
    }
}

/// (𝟙 + Ua)ξ² + 2iUa_xξ.
fn a_b_symbol(grid: &TorusGrid, a: &SpectralFunction) -> MatrixSymbol {
    let mut m = identity_plus_u(grid, a, FM::Power(2));
    let ax2i = a.derivative(1).scale(C64::new(0.0, 2.0));
    for i in 0..2 {
        for j in 0..2 {
            let mut s = m.entry(i, j).clone();
            s.push(ax2i.clone(), FM::Power(1));
            m.set(i, j, s);
        }
    }
    m
}

/// Galerkin matrix of Σ c_k(x)∂^k plus coeff(x)·(ik)^p.
fn galerkin_matrix(
    grid: &TorusGrid,
    principal: &SpectralFunction,
    principal_mult: impl Fn(i64) -> C64,
    lower: &[(SpectralFunction, u32)],
) -> CMatrix {
    let n = grid.n_points();
    let h = n as i64 / 2;
    CMatrix::from_fn(n, n, |r, c| {
        if r == 0 || c == 0 {
            return ZERO;
        }
        let j = grid.mode(r);
        let k = grid.mode(c);
        let l = j - k;
        if l <= -h || l >= h {
            return ZERO;
        }
        let mut acc = principal.coeff(l) * principal_mult(k);
        for (coef, p) in lower {
            acc += coef.coeff(l) * (I * k as f64).powu(*p);
        }
        acc
    })
}

/// Exact complexification of 𝓑, 𝓦 and the damping terms.
fn linear_complex(sys: &BridgeSystem) -> SpectralOperator {
    let g = sys.grid;
    let n = g.n_points();
    let br = |idx: usize, s: f64| if idx == 0 { 0.0 } else { bracket(g.mode(idx) as f64).powf(s) };

    let beam_b = galerkin_matrix(
        &g,
        &sys.b,
        |k| C64::new(-((k * k * k * k) as f64), 0.0),
        sys.b_op.terms(),
    );
    let wave_w = galerkin_matrix(&g, &sys.c, |k| C64::new(-((k * k) as f64), 0.0), sys.c_op.terms());

    let build = |m: &CMatrix, s: f64, damp: f64| {
        let p = CMatrix::from_fn(n, n, |r, c| m.get(r, c) * (br(r, -s) * br(c, -s)));
        let half_i = C64::new(0.0, 0.5);
        let q = |sign: f64, dsign: f64| {
            CMatrix::from_fn(n, n, |r, c| {
                let mut v = p.get(r, c) * half_i;
                if r == c && r != 0 {
                    v += half_i * (-sign) * br(r, 2.0 * s) + dsign * damp * 0.5;
                }
                v
            })
        };
        let q1 = SpectralOperator::new(&g, 1, q(1.0, 1.0), 2.0 * s);
        let q2 = SpectralOperator::new(&g, 1, q(-1.0, -1.0), 2.0 * s);
        conj_pair(&q1, &q2)
    };
    let beam = build(&beam_b, 1.0, sys.alpha);
    let wave = build(&wave_w, 0.5, sys.beta);
    embed_4(&g, Some(&beam), None, None, Some(&wave)).with_order(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge_model::{preset, QuadraticNonlinearity};

    fn grid() -> TorusGrid {
        TorusGrid::new(32).unwrap()
    }

    #[test]
    fn complexify_sine() {
        let g = grid();
        let y = SpectralFunction::from_fn(&g, |x| x.sin());
        let z0 = SpectralFunction::zeros(&g);
        let v = complexify(&y, &z0, &z0, &z0).unwrap();
        assert!((v.z.coeff(1) - C64::new(0.0, -0.5)).norm() < 1e-14);
        assert!((v.z.coeff(-1) - C64::new(0.0, 0.5)).norm() < 1e-14);
        assert!((v.z.sobolev_norm(0.0) - 0.5f64.sqrt()).abs() < 1e-14);
        let r = realify(&v);
        assert!((&r.y - &y).max_abs() < 1e-14);
        assert!(r.y_t.max_abs() < 1e-14);
    }

    #[test]
    fn trivial_frak_is_diagonal() {
        let g = grid();
        let p = ParalinearizedSystem::new(&BridgeSystem::trivial(&g), 0.5).unwrap();
        let pair = p.assemble_frak(&StateVector::zeros(&g));
        let m = pair.0.matrix();
        assert!(m.is_diagonal(0.0));
        let n = g.n_points();
        for idx in 1..n {
            let j = g.mode(idx) as f64;
            assert!((m.get(idx, idx) - C64::new(0.0, -j * j)).norm() < 1e-12);
            assert!((m.get(n + idx, n + idx) - C64::new(0.0, j * j)).norm() < 1e-12);
            assert!((m.get(2 * n + idx, 2 * n + idx) - C64::new(0.0, -j.abs())).norm() < 1e-12);
        }
        assert_eq!(pair.1.max_abs(), 0.0);
    }

    #[test]
    fn damping_block() {
        let g = grid();
        let mut sys = BridgeSystem::trivial(&g);
        sys.alpha = 1.0;
        let p = ParalinearizedSystem::new(&sys, 0.5).unwrap();
        let mut sys0 = BridgeSystem::trivial(&g);
        sys0.alpha = 0.0;
        let p0 = ParalinearizedSystem::new(&sys0, 0.5).unwrap();
        let diff = p.assemble_r().sub(p0.assemble_r());
        let n = g.n_points();
        for idx in 1..n {
            assert!((diff.matrix().get(idx, idx) - C64::new(0.5, 0.0)).norm() < 1e-14);
            assert!((diff.matrix().get(idx, n + idx) - C64::new(-0.5, 0.0)).norm() < 1e-14);
            assert!((diff.matrix().get(n + idx, idx) - C64::new(-0.5, 0.0)).norm() < 1e-14);
            assert!((diff.matrix().get(n + idx, n + idx) - C64::new(0.5, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn g_function_example() {
        let g = grid();
        let mut sys = BridgeSystem::trivial(&g);
        sys.f2 = QuadraticNonlinearity::zero(&g).with_term(1.0, JetVar::ThetaXx, JetVar::ThetaXx);
        let p = ParalinearizedSystem::new(&sys, 0.5).unwrap();
        let th = SpectralFunction::from_fn(&g, |x| x.sin());
        let z0 = SpectralFunction::zeros(&g);
        let v = complexify(&z0, &z0, &th, &z0).unwrap();
        let gf = p.build_g_functions(&v);
        let want = SpectralFunction::from_fn(&g, |x| -x.sin());
        assert!((&gf.g1_w - &want).max_abs() < 1e-13);
        assert_eq!(gf.g_half_b.max_abs(), 0.0);
    }

    #[test]
    fn forcing_examples() {
        let g = grid();
        let mut sys = BridgeSystem::trivial(&g);
        sys.delta = 2.0;
        sys.f_w = crate::bridge_model::Forcing::Sine {
            amplitude: 1.0,
            omega: 1.0,
            phase: 0.0,
        };
        let p = ParalinearizedSystem::new(&sys, 0.5).unwrap();
        let gv = p.forcing_g(std::f64::consts::FRAC_PI_2);
        assert!((gv.w.coeff(0).norm() - SQRT2).abs() < 1e-14);
        assert_eq!(gv.z.max_abs(), 0.0);
    }

    #[test]
    fn decomposition_resums() {
        let g = grid();
        let sys = preset("mixed").unwrap().build(&g).unwrap();
        let p = ParalinearizedSystem::new(&sys, 0.5).unwrap();
        let y = SpectralFunction::from_fn(&g, |x| 0.01 * (x.sin() + 0.3 * (2.0 * x).cos()));
        let th = SpectralFunction::from_fn(&g, |x| 0.01 * (0.5 * x.cos() - 0.2 * (3.0 * x).sin()));
        let v = complexify(&y, &th, &th, &y).unwrap();
        let vb = v.to_blocks();
        let full = p.full_rhs_blocks(&vb, 0.3).unwrap();
        let pair = p.assemble_frak(&v);
        let rem = p.remainder_blocks(&v, 0.3);
        let parts = [pair.0.apply(&vb), pair.1.apply(&vb), p.assemble_r().apply(&vb), rem, p.forcing_g(0.3).to_blocks()];
        let scale = full.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for i in 0..full.len() {
            let s: C64 = parts.iter().map(|q| q[i]).sum();
            assert!((s - full[i]).norm() <= 1e-12 * scale);
        }
    }
}

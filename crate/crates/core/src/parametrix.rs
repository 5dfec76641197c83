//! Diagonalizing maps Φ, Ψ for the frozen paradifferential system, the
//! diagonal model Λ, and the modified energy |V|²_{Ṽ,s} = ⟨𝔏_{2s}ΦV, ΦV⟩.
//!
//! Beam block: D_b = Op(k⁻¹)(𝟙 + M₋₁)Op(S_b⁻¹), D̃_b = Op(S_b)(𝟙 − M₋₁)Op(k)
//! with k = e²λ_b and M₋₁ = Op([[0, m], [m, 0]]), m = i a_x ψ(ξ)/(λ_b² ξ).
//! Wave block: D_w = Op(S_w⁻¹), D̃_w = Op(S_w).
//! Coupling: Φ = D(𝟙 + T), Ψ = (𝟙 − T)D̃ with T = antidiag(T₁, T₂).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::paralin::{embed_4, minus_i_e, GFunctions, ParalinearizedSystem};
use crate::quantize::{bony_weyl_quantize, bony_weyl_quantize_matrix, estimate_operator_norm, SpectralOperator};
use crate::spectral_core::{
    block_sobolev_norm, inner_product_four_block, random_real, SpectralFunction, StateVector,
    TorusGrid, C64,
};
use crate::symbol_calc::{FrequencyMultiplier as FM, MatrixSymbol, SeparableSymbol};

/// λ = √(1+2a), s₁ = (1+a+λ)/√(2λ(1+a+λ)), s₂ = −a/√(2λ(1+a+λ)).
pub fn diagonalizing_entries(a: f64) -> (f64, f64, f64) {
    let lam = (1.0 + 2.0 * a).sqrt();
    let den = (2.0 * lam * (1.0 + a + lam)).sqrt();
    (lam, (1.0 + a + lam) / den, -a / den)
}

/// max over grid points and entries of |S⁻¹E(𝟙+Ua)S − Eλ|.
pub fn eigen_identity_defect(a: &SpectralFunction) -> f64 {
    let mut worst = 0.0f64;
    for av in a.real_values() {
        let (lam, s1, s2) = diagonalizing_entries(av);
        let s = [[s1, s2], [s2, s1]];
        let si = [[s1, -s2], [-s2, s1]];
        let e = [1.0, -1.0];
        let mid = |i: usize, j: usize| e[i] * (if i == j { 1.0 } else { 0.0 } + av);
        for i in 0..2 {
            for j in 0..2 {
                let mut v = 0.0;
                for p in 0..2 {
                    for q in 0..2 {
                        v += si[i][p] * mid(p, q) * s[q][j];
                    }
                }
                let target = if i == j { e[i] * lam } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
    }
    worst
}

fn entry_functions(a: &SpectralFunction) -> (SpectralFunction, SpectralFunction, SpectralFunction) {
    (
        a.map_real(|v| diagonalizing_entries(v).0),
        a.map_real(|v| diagonalizing_entries(v).1),
        a.map_real(|v| diagonalizing_entries(v).2),
    )
}

/// 2×2 symbol with x-only entries; None leaves a zero entry.
fn x_matrix(grid: &TorusGrid, e: [[Option<&SpectralFunction>; 2]; 2]) -> MatrixSymbol {
    let mut m = MatrixSymbol::zeros(grid, 2);
    for (i, row) in e.iter().enumerate() {
        for (j, f) in row.iter().enumerate() {
            if let Some(f) = f {
                m.set(i, j, SeparableSymbol::x_only((*f).clone()));
            }
        }
    }
    m
}

fn scalar_2block(op: &SpectralOperator) -> SpectralOperator {
    SpectralOperator::block_diag(op, op)
}

#[derive(Clone, Debug)]
pub struct BeamDiagonalizer {
    pub a: SpectralFunction,
    pub lambda: SpectralFunction,
    pub s1: SpectralFunction,
    pub s2: SpectralFunction,
    pub k: SpectralFunction,
    /// m(x, ξ).
    pub m_symbol: SeparableSymbol,
    pub m_minus1: SpectralOperator,
    pub d_b: SpectralOperator,
    pub d_tilde_b: SpectralOperator,
}

pub fn build_beam_diagonalizer(a: &SpectralFunction, eps_para: f64) -> Result<BeamDiagonalizer> {
    let grid = *a.grid();
    let vals = a.real_values();
    let points: Vec<usize> = (0..vals.len()).filter(|&m| 1.0 + 2.0 * vals[m] <= 0.0).collect();
    if !points.is_empty() {
        return Err(Error::Ellipticity {
            min_b: vals.iter().map(|v| 1.0 + 2.0 * v).fold(f64::INFINITY, f64::min),
            min_c: f64::NAN,
            points,
        });
    }
    let (lambda, s1, s2) = entry_functions(a);
    let e2 = std::f64::consts::E.powi(2);
    let k = a.map_real(|v| e2 * diagonalizing_entries(v).0);
    let k_inv = a.map_real(|v| 1.0 / (e2 * diagonalizing_entries(v).0));
    let m_coeff = a
        .derivative(1)
        .real_values()
        .iter()
        .zip(a.real_values())
        .map(|(ax, av)| ax / (1.0 + 2.0 * av))
        .collect::<Vec<_>>();
    let m_coeff = SpectralFunction::from_real_samples(&grid, &m_coeff)?.scale(C64::new(0.0, 1.0));
    let m_symbol = SeparableSymbol::term(m_coeff, FM::Psi.over(FM::Power(1)));
    let mut msym = MatrixSymbol::zeros(&grid, 2);
    msym.set(0, 1, m_symbol.clone());
    msym.set(1, 0, m_symbol.clone());
    let m_minus1 = bony_weyl_quantize_matrix(&msym, eps_para).with_order(-1.0);
    let neg_s2 = &s2 * -1.0;
    let op_s = bony_weyl_quantize_matrix(&x_matrix(&grid, [[Some(&s1), Some(&s2)], [Some(&s2), Some(&s1)]]), eps_para);
    let op_s_inv = bony_weyl_quantize_matrix(
        &x_matrix(&grid, [[Some(&s1), Some(&neg_s2)], [Some(&neg_s2), Some(&s1)]]),
        eps_para,
    );
    let op_k = scalar_2block(&bony_weyl_quantize(&SeparableSymbol::x_only(k.clone()), eps_para));
    let op_k_inv = scalar_2block(&bony_weyl_quantize(&SeparableSymbol::x_only(k_inv), eps_para));
    let id = SpectralOperator::identity(&grid, 2);
    let d_b = op_k_inv.compose(&id.add(&m_minus1)).compose(&op_s_inv).with_order(0.0);
    let d_tilde_b = op_s.compose(&id.sub(&m_minus1)).compose(&op_k).with_order(0.0);
    Ok(BeamDiagonalizer {
        a: a.clone(),
        lambda,
        s1,
        s2,
        k,
        m_symbol,
        m_minus1,
        d_b,
        d_tilde_b,
    })
}

impl BeamDiagonalizer {
    /// λ_bξ²𝟙 + 2i(a_x/λ_b)Uξ, the beam symbol after conjugation by S_b.
    pub fn s_conjugated_symbol(&self) -> MatrixSymbol {
        let grid = *self.a.grid();
        let ax_over_l = SpectralFunction::from_real_samples(
            &grid,
            &self
                .a
                .derivative(1)
                .real_values()
                .iter()
                .zip(self.lambda.real_values())
                .map(|(ax, l)| ax / l)
                .collect::<Vec<_>>(),
        )
        .expect("grid length")
        .scale(C64::new(0.0, 2.0));
        let mut m = MatrixSymbol::zeros(&grid, 2);
        for i in 0..2 {
            for j in 0..2 {
                let mut s = SeparableSymbol::term(ax_over_l.clone(), FM::Power(1));
                if i == j {
                    s.push(self.lambda.clone(), FM::Power(2));
                }
                m.set(i, j, s);
            }
        }
        m
    }

    /// Order ≥ 1 part of the off-diagonal entry of
    /// (𝟙 + m σ) # E(λξ² + 2i(a_x/λ)Uξ) # (𝟙 − m σ).
    pub fn subprincipal_offdiag_symbol(&self) -> Result<SeparableSymbol> {
        let grid = *self.a.grid();
        let mut msym = MatrixSymbol::zeros(&grid, 2);
        msym.set(0, 1, self.m_symbol.clone());
        msym.set(1, 0, self.m_symbol.clone());
        let id = MatrixSymbol::identity(&grid, 2);
        let left = id.add(&msym);
        let right = id.add(&msym.scale(C64::new(-1.0, 0.0)));
        let mid = MatrixSymbol::e(&grid).mul(&self.s_conjugated_symbol());
        let full = left.sharp(&mid, 2.0)?.sharp(&right, 2.0)?;
        let mut out = SeparableSymbol::zero(&grid);
        for t in full.entry(0, 1).terms() {
            if t.mult.order() >= 1.0 {
                out.push(t.coeff.clone(), t.mult.clone());
            }
        }
        Ok(out)
    }

    /// sup over grid points and sampled |ξ| ≥ 1/2 of the off-diagonal
    /// subprincipal symbol, relative to sup |a_x ξ|.
    pub fn m_cancellation_defect(&self) -> Result<f64> {
        let s = self.subprincipal_offdiag_symbol()?;
        let n = self.a.grid().n_points();
        let scale = self.a.derivative(1).max_abs().max(1e-300);
        let mut worst = 0.0f64;
        let mut peak = 0.0f64;
        for j in -(n as i64)..=(n as i64) {
            let xi = j as f64 * 0.5;
            if xi.abs() < 0.5 {
                continue;
            }
            for m in 0..n {
                worst = worst.max(s.eval_grid(m, xi).norm());
            }
            peak = peak.max(scale * xi.abs());
        }
        Ok(worst / peak)
    }

    /// Largest |r(x, ξ)| over |ξ| < 1/2, where the cancelled symbol lives.
    pub fn low_frequency_remainder(&self) -> Result<f64> {
        let s = self.subprincipal_offdiag_symbol()?;
        let n = self.a.grid().n_points();
        let mut worst = 0.0f64;
        for xi in [-0.375, -0.25, 0.25, 0.375] {
            for m in 0..n {
                worst = worst.max(s.eval_grid(m, xi).norm());
            }
        }
        Ok(worst)
    }
}

/// Norms in ℒ(H^s; H^s) of Op(k⁻¹)Op(λξ² + 2i(a_x/λ)ξ)Op(k) − Op(λξ²)
/// and of the same difference without the gauge (k = 1), on |j| ≤ N/4.
pub fn gauge_residual(beam: &BeamDiagonalizer, eps_para: f64, s: f64) -> Result<(f64, f64)> {
    let sym = beam.s_conjugated_symbol();
    let first = sym.entry(0, 0);
    let op = bony_weyl_quantize(first, eps_para);
    let lam = bony_weyl_quantize(&SeparableSymbol::term(beam.lambda.clone(), FM::Power(2)), eps_para);
    let k = bony_weyl_quantize(&SeparableSymbol::x_only(beam.k.clone()), eps_para);
    let k_inv = bony_weyl_quantize(&SeparableSymbol::x_only(beam.k.map_real(|v| 1.0 / v)), eps_para);
    let gauged = k_inv.compose(&op).compose(&k).sub(&lam);
    let bare = op.sub(&lam);
    Ok((
        estimate_operator_norm(&gauged.interior(), s, s)?,
        estimate_operator_norm(&bare.interior(), s, s)?,
    ))
}

#[derive(Clone, Debug)]
pub struct WaveDiagonalizer {
    pub a_w: SpectralFunction,
    pub lambda: SpectralFunction,
    pub s1: SpectralFunction,
    pub s2: SpectralFunction,
    pub d_w: SpectralOperator,
    pub d_tilde_w: SpectralOperator,
}

pub fn build_wave_diagonalizer(a_w: &SpectralFunction, eps_para: f64) -> Result<WaveDiagonalizer> {
    let grid = *a_w.grid();
    let vals = a_w.real_values();
    let (m, min) = vals
        .iter()
        .enumerate()
        .map(|(m, v)| (m, 1.0 + 2.0 * v))
        .fold((0, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
    if min <= 0.0 {
        return Err(Error::Smallness {
            min_value: min,
            witness: format!("1 + 2 a_w at x = {:.6}", grid.points()[m]),
        });
    }
    let (lambda, s1, s2) = entry_functions(a_w);
    let neg_s2 = &s2 * -1.0;
    let d_w = bony_weyl_quantize_matrix(
        &x_matrix(&grid, [[Some(&s1), Some(&neg_s2)], [Some(&neg_s2), Some(&s1)]]),
        eps_para,
    )
    .with_order(0.0);
    let d_tilde_w = bony_weyl_quantize_matrix(&x_matrix(&grid, [[Some(&s1), Some(&s2)], [Some(&s2), Some(&s1)]]), eps_para)
        .with_order(0.0);
    Ok(WaveDiagonalizer {
        a_w: a_w.clone(),
        lambda,
        s1,
        s2,
        d_w,
        d_tilde_w,
    })
}

/// T₁ = ψ⟨ξ⟩^{−3/2}(g_{½,b}/λ_b²)U, T₂ = −ψ⟨ξ⟩^{−3/2}(g_{½,w}/λ_b²)EUE.
pub fn build_t_symbols(g: &GFunctions, beam: &BeamDiagonalizer) -> (MatrixSymbol, MatrixSymbol) {
    let grid = *g.a.grid();
    let lam2 = beam.lambda.real_values();
    let over = |f: &SpectralFunction| {
        let v: Vec<f64> = f.real_values().iter().zip(&lam2).map(|(x, l)| x / (l * l)).collect();
        SpectralFunction::from_real_samples(&grid, &v).expect("grid length")
    };
    let mult = FM::Psi.times(FM::Bracket(-1.5));
    let t1 = SeparableSymbol::term(over(&g.g_half_b), mult.clone());
    let t2 = SeparableSymbol::term(over(&g.g_half_w), mult);
    (
        MatrixSymbol::constant_times(&grid, &[&[1.0, 1.0], &[1.0, 1.0]], &t1),
        MatrixSymbol::constant_times(&grid, &[&[-1.0, 1.0], &[1.0, -1.0]], &t2),
    )
}

pub fn build_t_correctors(
    g: &GFunctions,
    beam: &BeamDiagonalizer,
    eps_para: f64,
) -> (SpectralOperator, SpectralOperator) {
    let (t1, t2) = build_t_symbols(g, beam);
    (
        bony_weyl_quantize_matrix(&t1, eps_para).with_order(-1.5),
        bony_weyl_quantize_matrix(&t2, eps_para).with_order(-1.5),
    )
}

#[derive(Clone, Debug)]
pub struct Parametrix {
    pub s: f64,
    pub beam: BeamDiagonalizer,
    pub wave: WaveDiagonalizer,
    pub t1: SpectralOperator,
    pub t2: SpectralOperator,
    pub d: SpectralOperator,
    pub d_tilde: SpectralOperator,
    pub t: SpectralOperator,
    pub phi: SpectralOperator,
    pub psi: SpectralOperator,
    pub lambda_op: SpectralOperator,
    pub frak_l: SpectralOperator,
}

pub fn build_parametrix(para: &ParalinearizedSystem, vt: &StateVector, s: f64) -> Result<Parametrix> {
    let eps = para.eps_para();
    let grid = *para.grid();
    let g = para.build_g_functions(vt);
    let beam = build_beam_diagonalizer(&g.a, eps)?;
    let wave = build_wave_diagonalizer(&g.a_w(), eps)?;
    let (t1, t2) = build_t_correctors(&g, &beam, eps);
    let d = embed_4(&grid, Some(&beam.d_b), None, None, Some(&wave.d_w)).with_order(0.0);
    let d_tilde = embed_4(&grid, Some(&beam.d_tilde_b), None, None, Some(&wave.d_tilde_w)).with_order(0.0);
    let t = embed_4(&grid, None, Some(&t1), Some(&t2), None).with_order(-1.5);
    let id = SpectralOperator::identity(&grid, 4);
    let phi = d.compose(&id.add(&t)).with_order(0.0);
    let psi = id.sub(&t).compose(&d_tilde).with_order(0.0);
    let lam_b = minus_i_e(&scalar_2block(&bony_weyl_quantize(
        &SeparableSymbol::term(beam.lambda.clone(), FM::Power(2)),
        eps,
    )));
    let lam_w = minus_i_e(&scalar_2block(&bony_weyl_quantize(
        &SeparableSymbol::term(wave.lambda.clone(), FM::Abs),
        eps,
    )));
    let lambda_op = embed_4(&grid, Some(&lam_b), None, None, Some(&lam_w)).with_order(2.0);
    let lb_s = beam.lambda.map_real(|v| v.powf(s));
    let lw_2s = wave.lambda.map_real(|v| v.powf(2.0 * s));
    let l_b = scalar_2block(&bony_weyl_quantize(&SeparableSymbol::term(lb_s, FM::AbsPow(2.0 * s)), eps));
    let l_w = scalar_2block(&bony_weyl_quantize(&SeparableSymbol::term(lw_2s, FM::AbsPow(2.0 * s)), eps));
    let frak_l = embed_4(&grid, Some(&l_b), None, None, Some(&l_w)).with_order(2.0 * s);
    Ok(Parametrix {
        s,
        beam,
        wave,
        t1,
        t2,
        d,
        d_tilde,
        t,
        phi,
        psi,
        lambda_op,
        frak_l,
    })
}

impl Parametrix {
    /// ⟨𝔏_{2s}ΦV, ΦV⟩ on a flat 4-block vector.
    pub fn modified_energy_blocks(&self, v: &[C64]) -> f64 {
        let pv = self.phi.apply(v);
        inner_product_four_block(&self.frak_l.apply(&pv), &pv)
    }

    pub fn modified_energy(&self, v: &StateVector) -> f64 {
        self.modified_energy_blocks(&v.to_blocks())
    }

    /// ⟨𝔏_{2s}ΦΔV, ΦV⟩ with Δ = diag(∂⁴, −∂²).
    pub fn garding_form(&self, v: &[C64]) -> f64 {
        let grid = *self.phi.grid();
        let delta = delta_operator(&grid);
        let pv = self.phi.apply(v);
        let pdv = self.phi.apply(&delta.apply(v));
        inner_product_four_block(&self.frak_l.apply(&pdv), &pv)
    }
}

/// Δ = diag(∂⁴, −∂²) on the 4-block layout.
pub fn delta_operator(grid: &TorusGrid) -> SpectralOperator {
    SpectralOperator::diagonal(grid, 4, 4.0, |b, j| {
        let j = j as f64;
        if b < 2 {
            C64::new(j.powi(4), 0.0)
        } else {
            C64::new(j * j, 0.0)
        }
    })
}

fn off_diagonal(op: &SpectralOperator) -> SpectralOperator {
    let grid = *op.grid();
    let n2 = 2 * grid.n_points();
    let m = op.matrix();
    let out = CMatrix::from_fn(m.rows(), m.cols(), |r, c| {
        if (r < n2) != (c < n2) {
            m.get(r, c)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    SpectralOperator::new(&grid, 4, out, op.declared_order())
}

/// Operator norms of the conjugation diagnostics, all measured at index s
/// on the interior band |j| ≤ N/4.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConjugationReport {
    pub n_points: usize,
    pub s: f64,
    /// ‖Φ(𝔄+𝔅)Ψ − Λ‖ in ℒ(H^s; H^s)
    pub m_norm: f64,
    /// off-diagonal block of the same, ℒ(H^s; H^s)
    pub offdiag_norm: f64,
    /// off-diagonal block of D(𝔄+𝔅)D̃ − Λ, i.e. without T
    pub offdiag_without_t: f64,
    /// ‖ΨΦ − 𝟙‖ in ℒ(H^s; H^{s+2})
    pub psi_phi_norm: f64,
}

pub fn conjugation_residual(
    para: &ParalinearizedSystem,
    p: &Parametrix,
    vt: &StateVector,
    s: f64,
) -> Result<ConjugationReport> {
    let grid = *para.grid();
    let pair = para.assemble_frak(vt);
    let ab = pair.0.add(&pair.1);
    let m = p.phi.compose(&ab).compose(&p.psi).sub(&p.lambda_op);
    let bare = p.d.compose(&ab).compose(&p.d_tilde).sub(&p.lambda_op);
    let id = SpectralOperator::identity(&grid, 4);
    let pp = p.psi.compose(&p.phi).sub(&id);
    Ok(ConjugationReport {
        n_points: grid.n_points(),
        s,
        m_norm: estimate_operator_norm(&m.interior(), s, s)?,
        offdiag_norm: estimate_operator_norm(&off_diagonal(&m).interior(), s, s)?,
        offdiag_without_t: estimate_operator_norm(&off_diagonal(&bare).interior(), s, s)?,
        psi_phi_norm: estimate_operator_norm(&pp.interior(), s, s + 2.0)?,
    })
}

/// Empirical constants of the norm equivalence and the Garding inequality
/// over random mean-zero samples.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EquivalenceReport {
    pub n_points: usize,
    pub sigma: f64,
    pub samples: usize,
    /// max |V|²/‖V‖²_{H^σ}
    pub upper: f64,
    /// min |V|²/(‖V‖²_{H^σ} − ‖V‖²_{H^{−2}})
    pub lower: f64,
    /// max(upper, 1/lower)
    pub c_r: f64,
    /// min ⟨𝔏ΦΔV, ΦV⟩/(‖Z‖²_{H^{σ+2}} + ‖W‖²_{H^{σ+1}})
    pub garding_ratio: f64,
    /// min and max of |V|²/‖V‖²_{Ḣ^σ} (homogeneous norm)
    pub homogeneous_min: f64,
    pub homogeneous_max: f64,
    /// prefactor used in the Garding lower bound
    pub c_g: f64,
    /// max (c_G(‖Z‖²_{σ+2} + ‖W‖²_{σ+1}) − ⟨𝔏ΦΔV, ΦV⟩)/‖V‖²_{H^σ}, floored at 0
    pub garding_defect: f64,
}

/// Prefactor in the Garding bound; e⁻⁴ is the exact trivial-background value
/// of the beam block, halved to leave room for a nontrivial background.
pub const GARDING_PREFACTOR: f64 = 0.5 * 0.018_315_638_888_734_18;

pub const SAMPLE_BAND: i64 = 10;

pub fn random_state(grid: &TorusGrid, band: i64, rng: &mut ChaCha8Rng) -> StateVector {
    let mut z = random_real(grid, band, 2.0, true, rng);
    let mut w = random_real(grid, band, 2.0, true, rng);
    let iz = random_real(grid, band, 2.0, true, rng);
    let iw = random_real(grid, band, 2.0, true, rng);
    z = &z + &iz.scale(C64::new(0.0, 1.0));
    w = &w + &iw.scale(C64::new(0.0, 1.0));
    StateVector { z, w }
}

pub fn equivalence_and_garding_report(
    para: &ParalinearizedSystem,
    vt: &StateVector,
    sigma: f64,
    samples: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    let grid = *para.grid();
    let p = build_parametrix(para, vt, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut upper, mut lower, mut ratio, mut defect) = (0.0f64, f64::INFINITY, f64::INFINITY, 0.0f64);
    let (mut hmin, mut hmax) = (f64::INFINITY, 0.0f64);
    let n = grid.n_points();
    for _ in 0..samples {
        let v = random_state(&grid, SAMPLE_BAND, &mut rng).to_blocks();
        let e = p.modified_energy_blocks(&v);
        let hs = block_sobolev_norm(&grid, &v, sigma).powi(2);
        let hm2 = block_sobolev_norm(&grid, &v, -2.0).powi(2);
        upper = upper.max(e / hs);
        lower = lower.min(e / (hs - hm2));
        let hom = e / homogeneous_norm_sq(&grid, &v, sigma);
        hmin = hmin.min(hom);
        hmax = hmax.max(hom);
        let top = block_sobolev_norm(&grid, &v[..2 * n], sigma + 2.0).powi(2) * 0.5
            + block_sobolev_norm(&grid, &v[2 * n..], sigma + 1.0).powi(2) * 0.5;
        let gform = p.garding_form(&v);
        ratio = ratio.min(gform / top);
        defect = defect.max((GARDING_PREFACTOR * top - gform) / hs);
    }
    Ok(EquivalenceReport {
        n_points: n,
        sigma,
        samples,
        upper,
        lower,
        c_r: upper.max(1.0 / lower),
        garding_ratio: ratio,
        homogeneous_min: hmin,
        homogeneous_max: hmax,
        c_g: GARDING_PREFACTOR,
        garding_defect: defect.max(0.0),
    })
}

/// Lower-right (wave) 2-block of a 4-block operator.
fn wave_part(op: &SpectralOperator) -> SpectralOperator {
    let grid = *op.grid();
    let parts: Vec<SpectralOperator> = [(2, 2), (2, 3), (3, 2), (3, 3)]
        .iter()
        .map(|&(i, j)| op.block(i, j))
        .collect();
    SpectralOperator::from_block_grid(
        &grid,
        &[vec![Some(&parts[0]), Some(&parts[1])], vec![Some(&parts[2]), Some(&parts[3])]],
    )
    .with_order(op.declared_order())
}

fn off_diagonal_2(op: &SpectralOperator) -> SpectralOperator {
    let grid = *op.grid();
    let (a, b) = (op.block(0, 1), op.block(1, 0));
    SpectralOperator::from_block_grid(&grid, &[vec![None, Some(&a)], vec![Some(&b), None]])
}

/// ‖D̃_bD_b − 𝟙‖ in ℒ(H^s; H^{s+2}) on the interior band.
pub fn beam_inverse_residual(beam: &BeamDiagonalizer, s: f64) -> Result<f64> {
    let grid = *beam.a.grid();
    let r = beam.d_tilde_b.compose(&beam.d_b).sub(&SpectralOperator::identity(&grid, 2));
    estimate_operator_norm(&r.interior(), s, s + 2.0)
}

/// Off-diagonal block of D_w(𝔄 wave block)D̃_w and of the wave block itself,
/// both in ℒ(H^s; H^s) on the interior band.
pub fn wave_offdiag_residual(
    para: &ParalinearizedSystem,
    wave: &WaveDiagonalizer,
    vt: &StateVector,
    s: f64,
) -> Result<(f64, f64)> {
    let aw = wave_part(&para.assemble_frak(vt).0);
    let conj = wave.d_w.compose(&aw).compose(&wave.d_tilde_w);
    Ok((
        estimate_operator_norm(&off_diagonal_2(&conj).interior(), s, s)?,
        estimate_operator_norm(&off_diagonal_2(&aw).interior(), s, s)?,
    ))
}

/// ‖(Φ(Ṽ₁) − Φ(Ṽ₀))/h‖ in ℒ(H^s; H^s) on the interior band.
pub fn phi_difference_quotient(
    para: &ParalinearizedSystem,
    v0: &StateVector,
    v1: &StateVector,
    h: f64,
    s: f64,
) -> Result<f64> {
    let p0 = build_parametrix(para, v0, s)?;
    let p1 = build_parametrix(para, v1, s)?;
    let d = p1.phi.sub(&p0.phi).scale(C64::new(1.0 / h, 0.0));
    estimate_operator_norm(&d.interior(), s, s)
}

/// Σ over the four blocks of ½|j|^{2s}|v̂(j)|².
pub fn homogeneous_norm_sq(grid: &TorusGrid, v: &[C64], s: f64) -> f64 {
    let n = grid.n_points();
    0.5 * v
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let j = grid.mode(i % n).abs() as f64;
            if j == 0.0 {
                0.0
            } else {
                j.powf(2.0 * s) * c.norm_sqr()
            }
        })
        .sum::<f64>()
}

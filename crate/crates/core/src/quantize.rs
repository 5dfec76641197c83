//! Weyl and Bony-Weyl quantization on truncated Fourier coefficients, and
//! operator norms between Sobolev spaces.
//!
//! Matrix entries act on coefficient vectors: (Op u)^(j) = Σ_k M[j,k] û(k),
//! with M[j,k] = Σ_t f̂_t(j−k) g_t((j+k)/2) for the Weyl rule, multiplied by
//! χ_ε(|j−k|/⟨j+k⟩) for the Bony-Weyl rule.

use std::cell::RefCell;
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::spectral_core::{bracket, TorusGrid, C64};
use crate::symbol_calc::{cutoff_chi, sharp_rho, MatrixSymbol, SeparableSymbol};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Dense operator on 1, 2 or 4 blocks of n coefficients each.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralOperator {
    grid: TorusGrid,
    blocks: usize,
    matrix: CMatrix,
    order: f64,
}

impl SpectralOperator {
    pub fn new(grid: &TorusGrid, blocks: usize, matrix: CMatrix, order: f64) -> Self {
        assert_eq!(matrix.rows(), blocks * grid.n_points(), "block size");
        assert_eq!(matrix.cols(), blocks * grid.n_points(), "block size");
        Self {
            grid: *grid,
            blocks,
            matrix,
            order,
        }
    }

    pub fn zeros(grid: &TorusGrid, blocks: usize) -> Self {
        let d = blocks * grid.n_points();
        Self::new(grid, blocks, CMatrix::zeros(d, d), f64::NEG_INFINITY)
    }

    /// Identity on paired modes; the unpaired mode row is zero.
    pub fn identity(grid: &TorusGrid, blocks: usize) -> Self {
        Self::diagonal(grid, blocks, 0.0, |_, _| C64::new(1.0, 0.0))
    }

    /// Diagonal multiplier f(block, j).
    pub fn diagonal(
        grid: &TorusGrid,
        blocks: usize,
        order: f64,
        f: impl Fn(usize, i64) -> C64,
    ) -> Self {
        let n = grid.n_points();
        let d: Vec<C64> = (0..blocks * n)
            .map(|i| {
                let idx = i % n;
                if idx == 0 {
                    ZERO
                } else {
                    f(i / n, grid.mode(idx))
                }
            })
            .collect();
        Self::new(grid, blocks, CMatrix::from_diag(&d), order)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn declared_order(&self) -> f64 {
        self.order
    }

    pub fn with_order(mut self, order: f64) -> Self {
        self.order = order;
        self
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.matrix.matvec(v)
    }

    pub fn compose(&self, other: &SpectralOperator) -> SpectralOperator {
        SpectralOperator::new(
            &self.grid,
            self.blocks,
            self.matrix.matmul(&other.matrix),
            self.order + other.order,
        )
    }

    pub fn add(&self, other: &SpectralOperator) -> SpectralOperator {
        SpectralOperator::new(
            &self.grid,
            self.blocks,
            self.matrix.add(&other.matrix),
            self.order.max(other.order),
        )
    }

    pub fn sub(&self, other: &SpectralOperator) -> SpectralOperator {
        SpectralOperator::new(
            &self.grid,
            self.blocks,
            self.matrix.sub(&other.matrix),
            self.order.max(other.order),
        )
    }

    pub fn scale(&self, a: C64) -> SpectralOperator {
        SpectralOperator::new(&self.grid, self.blocks, self.matrix.scale(a), self.order)
    }

    pub fn block(&self, bi: usize, bj: usize) -> SpectralOperator {
        let n = self.grid.n_points();
        SpectralOperator::new(&self.grid, 1, self.matrix.block(bi, bj, n), self.order)
    }

    /// Assemble from a square array of optional single-block operators.
    pub fn from_block_grid(grid: &TorusGrid, parts: &[Vec<Option<&SpectralOperator>>]) -> Self {
        let n = grid.n_points();
        let mats: Vec<Vec<Option<&CMatrix>>> = parts
            .iter()
            .map(|r| r.iter().map(|p| p.map(|o| &o.matrix)).collect())
            .collect();
        let order = parts
            .iter()
            .flatten()
            .flatten()
            .map(|o| o.order)
            .fold(f64::NEG_INFINITY, f64::max);
        Self::new(grid, parts.len(), CMatrix::from_blocks(&mats, n), order)
    }

    /// Block-diagonal sum of two operators of equal block count.
    pub fn block_diag(a: &SpectralOperator, b: &SpectralOperator) -> SpectralOperator {
        let n = a.grid.n_points();
        let nb = a.blocks + b.blocks;
        let mut m = CMatrix::zeros(nb * n, nb * n);
        for i in 0..a.matrix.rows() {
            for j in 0..a.matrix.cols() {
                m.set(i, j, a.matrix.get(i, j));
            }
        }
        let off = a.matrix.rows();
        for i in 0..b.matrix.rows() {
            for j in 0..b.matrix.cols() {
                m.set(off + i, off + j, b.matrix.get(i, j));
            }
        }
        SpectralOperator::new(&a.grid, nb, m, a.order.max(b.order))
    }

    /// Zero every row and column whose mode has |j| > band.
    pub fn restrict_band(&self, band: i64) -> SpectralOperator {
        let n = self.grid.n_points();
        let keep: Vec<bool> = (0..self.matrix.rows())
            .map(|i| self.grid.mode(i % n).abs() <= band)
            .collect();
        let m = CMatrix::from_fn(self.matrix.rows(), self.matrix.cols(), |r, c| {
            if keep[r] && keep[c] {
                self.matrix.get(r, c)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        SpectralOperator::new(&self.grid, self.blocks, m, self.order)
    }

    /// Restriction to |j| ≤ N/4, away from the truncation edge where
    /// products of band-limited operators lose their intermediate modes.
    pub fn interior(&self) -> SpectralOperator {
        self.restrict_band(interior_band(&self.grid))
    }

    /// Entry-wise max over all blocks of |M|.
    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs()
    }

    /// The operator acting on conjugates: u ↦ conj(Op conj(u)); entries
    /// conj(M[−j,−k]) within each block.
    pub fn conjugate(&self) -> SpectralOperator {
        let n = self.grid.n_points();
        let g = self.grid;
        let d = self.blocks * n;
        let flip = |i: usize| -> Option<usize> {
            let idx = i % n;
            if idx == 0 {
                return None;
            }
            g.index(-g.mode(idx)).map(|r| (i / n) * n + r)
        };
        let m = CMatrix::from_fn(d, d, |i, j| match (flip(i), flip(j)) {
            (Some(a), Some(b)) => self.matrix.get(a, b).conj(),
            _ => ZERO,
        });
        SpectralOperator::new(&self.grid, self.blocks, m, self.order)
    }
}

thread_local! {
    static BW_MASKS: RefCell<HashMap<(usize, u64), Arc<Vec<f64>>>> = RefCell::new(HashMap::new());
}

/// χ_ε(|j−k|/⟨j+k⟩) for all index pairs, cached per (n, ε).
fn bw_mask(grid: &TorusGrid, eps: f64) -> Arc<Vec<f64>> {
    let n = grid.n_points();
    let key = (n, eps.to_bits());
    if let Some(m) = BW_MASKS.with(|c| c.borrow().get(&key).cloned()) {
        return m;
    }
    let mut mask = vec![0.0; n * n];
    for a in 0..n {
        let j = grid.mode(a);
        for b in 0..n {
            let k = grid.mode(b);
            mask[a * n + b] = cutoff_chi((j - k).abs() as f64 / bracket((j + k) as f64), eps);
        }
    }
    let mask = Arc::new(mask);
    BW_MASKS.with(|c| c.borrow_mut().insert(key, mask.clone()));
    mask
}

fn quantize_scalar(a: &SeparableSymbol, eps: Option<f64>) -> CMatrix {
    let grid = *a.grid();
    let n = grid.n_points();
    let h = n as i64 / 2;
    let mut m = CMatrix::zeros(n, n);
    for t in a.terms() {
        // g at (j+k)/2, j+k ∈ [−n, n−2]
        let table: Vec<f64> = (0..=2 * n).map(|s| t.mult.eval((s as f64 - n as f64) * 0.5)).collect();
        for ja in 1..n {
            let j = grid.mode(ja);
            for kb in 1..n {
                let k = grid.mode(kb);
                let l = j - k;
                if l < -h + 1 || l >= h {
                    continue;
                }
                let c = t.coeff.coeff(l);
                if c == ZERO {
                    continue;
                }
                let g = table[(j + k + n as i64) as usize];
                if g != 0.0 {
                    m.add_at(ja, kb, c * g);
                }
            }
        }
    }
    if let Some(eps) = eps {
        let mask = bw_mask(&grid, eps);
        let d = m.data().to_vec();
        m = CMatrix::from_fn(n, n, |i, j| d[i * n + j] * mask[i * n + j]);
    }
    m
}

fn quantize_blocks(a: &MatrixSymbol, eps: Option<f64>) -> SpectralOperator {
    let dim = a.dim();
    let grid = *a.entry(0, 0).grid();
    let n = grid.n_points();
    let mut m = CMatrix::zeros(dim * n, dim * n);
    for i in 0..dim {
        for j in 0..dim {
            let e = a.entry(i, j);
            if e.is_zero() {
                continue;
            }
            m.set_block(i, j, &quantize_scalar(e, eps));
        }
    }
    SpectralOperator::new(&grid, dim, m, a.order())
}

pub fn weyl_quantize(a: &SeparableSymbol) -> SpectralOperator {
    SpectralOperator::new(a.grid(), 1, quantize_scalar(a, None), a.order())
}

pub fn weyl_quantize_matrix(a: &MatrixSymbol) -> SpectralOperator {
    quantize_blocks(a, None)
}

pub fn bony_weyl_quantize(a: &SeparableSymbol, eps_para: f64) -> SpectralOperator {
    SpectralOperator::new(a.grid(), 1, quantize_scalar(a, Some(eps_para)), a.order())
}

pub fn bony_weyl_quantize_matrix(a: &MatrixSymbol, eps_para: f64) -> SpectralOperator {
    quantize_blocks(a, Some(eps_para))
}

/// Op^W(a) − Op^BW(a).
pub fn remainder_bw_minus_weyl(a: &SeparableSymbol, eps_para: f64) -> SpectralOperator {
    weyl_quantize(a).sub(&bony_weyl_quantize(a, eps_para))
}

/// Op^BW(a)Op^BW(b) − Op^BW(a #ρ b).
pub fn composition_residual(
    a: &SeparableSymbol,
    b: &SeparableSymbol,
    rho: f64,
    eps_para: f64,
) -> Result<SpectralOperator> {
    let ab = sharp_rho(a, b, rho)?;
    let lhs = bony_weyl_quantize(a, eps_para).compose(&bony_weyl_quantize(b, eps_para));
    Ok(lhs
        .sub(&bony_weyl_quantize(&ab, eps_para))
        .with_order(a.order() + b.order() - rho))
}

pub fn interior_band(grid: &TorusGrid) -> i64 {
    grid.n_points() as i64 / 4
}

pub const NORM_TOL: f64 = 1e-8;
pub const NORM_MAX_ITER: usize = 50_000;

/// Largest singular value of ⟨j⟩^{s_out} M ⟨k⟩^{−s_in}.
pub fn estimate_operator_norm(op: &SpectralOperator, s_in: f64, s_out: f64) -> Result<f64> {
    let b = op.blocks;
    estimate_operator_norm_blocks(op, &vec![s_in; b], &vec![s_out; b])
}

/// Per-block Sobolev exponents on input and output.
pub fn estimate_operator_norm_blocks(
    op: &SpectralOperator,
    s_in: &[f64],
    s_out: &[f64],
) -> Result<f64> {
    let n = op.grid.n_points();
    let dim = op.blocks * n;
    if s_in.len() != op.blocks || s_out.len() != op.blocks {
        return Err(Error::Dimension {
            expected: op.blocks,
            got: s_in.len().min(s_out.len()),
        });
    }
    let w_in: Vec<f64> = (0..dim)
        .map(|i| bracket(op.grid.mode(i % n) as f64).powf(-s_in[i / n]))
        .collect();
    let w_out: Vec<f64> = (0..dim)
        .map(|i| bracket(op.grid.mode(i % n) as f64).powf(s_out[i / n]))
        .collect();
    power_iteration(&op.matrix, &w_in, &w_out, NORM_TOL, NORM_MAX_ITER)
}

fn power_iteration(
    m: &CMatrix,
    w_in: &[f64],
    w_out: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    if m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let dim = m.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let nrm = |v: &[C64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let n0 = nrm(&x);
    x.iter_mut().for_each(|c| *c /= n0);
    let mut prev = 0.0;
    let mut est = 0.0;
    for _ in 0..max_iter {
        let xin: Vec<C64> = x.iter().zip(w_in).map(|(c, w)| c * w).collect();
        let mut y = m.matvec(&xin);
        y.iter_mut().zip(w_out).for_each(|(c, w)| *c *= w * w);
        let mut z = m.adjoint_matvec(&y);
        z.iter_mut().zip(w_in).for_each(|(c, w)| *c *= w);
        let nz = nrm(&z);
        if nz == 0.0 {
            return Ok(0.0);
        }
        est = nz.sqrt();
        x = z.into_iter().map(|c| c / nz).collect();
        if (est - prev).abs() <= tol * est * 1e-2 {
            return Ok(est);
        }
        prev = est;
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        estimate: est,
    })
}

/// Plain-text header plus little-endian (re, im) f64 pairs, row-major.
pub fn export_dump(op: &SpectralOperator, prefix: &Path, fingerprint: u64) -> Result<()> {
    let mut hdr = std::fs::File::create(prefix.with_extension("hdr"))?;
    writeln!(hdr, "n_points {}", op.grid.n_points())?;
    writeln!(hdr, "blocks {}", op.blocks)?;
    writeln!(hdr, "rows {}", op.matrix.rows())?;
    writeln!(hdr, "cols {}", op.matrix.cols())?;
    writeln!(hdr, "order {}", op.order)?;
    writeln!(hdr, "fingerprint {fingerprint:016x}")?;
    writeln!(hdr, "layout row-major complex128 little-endian")?;
    let mut bytes = Vec::with_capacity(op.matrix.data().len() * 16);
    for c in op.matrix.data() {
        bytes.extend_from_slice(&c.re.to_le_bytes());
        bytes.extend_from_slice(&c.im.to_le_bytes());
    }
    std::fs::write(prefix.with_extension("bin"), bytes)?;
    Ok(())
}

/// Memo of Bony-Weyl quantizations keyed by (symbol fingerprint, n, ε).
#[derive(Default)]
pub struct QuantizationCache {
    map: Mutex<HashMap<(u64, usize, u64), Arc<SpectralOperator>>>,
}

impl QuantizationCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bony_weyl(&self, a: &MatrixSymbol, eps_para: f64) -> Arc<SpectralOperator> {
        let mut h = 0u64;
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                h = h.rotate_left(7) ^ a.entry(i, j).fingerprint();
            }
        }
        let key = (h, a.entry(0, 0).grid().n_points(), eps_para.to_bits());
        if let Some(op) = self.map.lock().unwrap().get(&key) {
            return op.clone();
        }
        let op = Arc::new(bony_weyl_quantize_matrix(a, eps_para));
        self.map.lock().unwrap().insert(key, op.clone());
        op
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

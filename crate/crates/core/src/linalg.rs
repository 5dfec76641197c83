//! Dense complex matrices, row-major.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols, "matvec dimension");
        (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                let mut acc = ZERO;
                for (a, b) in row.iter().zip(x) {
                    acc += a * b;
                }
                acc
            })
            .collect()
    }

    /// Mᴴx.
    pub fn adjoint_matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.rows, "adjoint matvec dimension");
        let mut out = vec![ZERO; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == ZERO {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        let oc = other.cols;
        for i in 0..self.rows {
            let orow = &mut out.data[i * oc..(i + 1) * oc];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * oc..(k + 1) * oc];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &CMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Copy of the (bi, bj) block of size bs × bs.
    pub fn block(&self, bi: usize, bj: usize, bs: usize) -> CMatrix {
        CMatrix::from_fn(bs, bs, |i, j| self.get(bi * bs + i, bj * bs + j))
    }

    pub fn set_block(&mut self, bi: usize, bj: usize, m: &CMatrix) {
        let bs = m.rows;
        for i in 0..bs {
            for j in 0..m.cols {
                self.set(bi * bs + i, bj * m.cols + j, m.get(i, j));
            }
        }
    }

    /// Assemble from a square grid of optional blocks, all bs × bs.
    pub fn from_blocks(blocks: &[Vec<Option<&CMatrix>>], bs: usize) -> CMatrix {
        let nb = blocks.len();
        let mut out = CMatrix::zeros(nb * bs, nb * bs);
        for (bi, row) in blocks.iter().enumerate() {
            for (bj, b) in row.iter().enumerate() {
                if let Some(m) = b {
                    out.set_block(bi, bj, m);
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Scale rows by r[i] and columns by c[j].
    pub fn weighted(&self, r: &[f64], c: &[f64]) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * (r[i] * c[j]))
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.get(i, j).norm() <= tol))
    }
}

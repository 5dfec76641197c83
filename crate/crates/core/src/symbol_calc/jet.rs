//! Truncated Taylor series in one variable, used to get exact
//! ξ-derivatives of closed-form multipliers.

use std::ops::{Add, Mul, Neg, Sub};

pub const JET_LEN: usize = 9;

/// Coefficients c_k = f^{(k)}(ξ₀)/k!, k ≤ 8.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub c: [f64; JET_LEN],
}

const FACT: [f64; JET_LEN] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0];

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; JET_LEN];
        c[0] = v;
        Self { c }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn var(x0: f64) -> Self {
        let mut c = [0.0; JET_LEN];
        c[0] = x0;
        c[1] = 1.0;
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative at the expansion point.
    pub fn deriv(&self, k: usize) -> f64 {
        self.c[k] * FACT[k]
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0)
    }

    /// Jet of f^{(d)}; entries past 8-d are unavailable and set to zero.
    pub fn shift(&self, d: usize) -> Self {
        let mut c = [0.0; JET_LEN];
        for k in 0..JET_LEN.saturating_sub(d) {
            c[k] = self.c[k + d] * FACT[k + d] / FACT[k];
        }
        Self { c }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|v| *v *= s);
        Self { c }
    }

    pub fn recip(&self) -> Self {
        let a0 = self.c[0];
        let mut b = [0.0; JET_LEN];
        b[0] = 1.0 / a0;
        for k in 1..JET_LEN {
            let s: f64 = (1..=k).map(|i| self.c[i] * b[k - i]).sum();
            b[k] = -s / a0;
        }
        Self { c: b }
    }

    pub fn exp(&self) -> Self {
        let mut e = [0.0; JET_LEN];
        e[0] = self.c[0].exp();
        for k in 1..JET_LEN {
            let s: f64 = (1..=k).map(|i| i as f64 * self.c[i] * e[k - i]).sum();
            e[k] = s / k as f64;
        }
        Self { c: e }
    }

    pub fn ln(&self) -> Self {
        let a0 = self.c[0];
        let mut l = [0.0; JET_LEN];
        l[0] = a0.ln();
        for k in 1..JET_LEN {
            let s: f64 = (1..k).map(|i| i as f64 * l[i] * self.c[k - i]).sum();
            l[k] = (self.c[k] - s / k as f64) / a0;
        }
        Self { c: l }
    }

    /// f^p for f(ξ₀) ≠ 0.
    pub fn powf(&self, p: f64) -> Self {
        let a0 = self.c[0];
        let mut b = [0.0; JET_LEN];
        b[0] = a0.powf(p);
        for k in 1..JET_LEN {
            let s: f64 = (1..=k)
                .map(|i| (p * i as f64 - (k - i) as f64) * self.c[i] * b[k - i])
                .sum();
            b[k] = s / (k as f64 * a0);
        }
        Self { c: b }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c) {
            *a += b;
        }
        Jet { c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; JET_LEN];
        for k in 0..JET_LEN {
            c[k] = (0..=k).map(|i| self.c[i] * o.c[k - i]).sum();
        }
        Jet { c }
    }
}

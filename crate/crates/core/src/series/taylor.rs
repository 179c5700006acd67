//! Truncated power series in one nilpotent variable `ε`.
//!
//! Used for expansions of theta quotients around a center, `f(c + ε)`, where
//! `ε` is later replaced by a nilpotent cohomology class.

use num_complex::Complex64;

use super::ring::{Analytic, QAlgebra, Ring};
use crate::error::{Error, Result};

/// `Σ_{k <= order} a_k ε^k`, known modulo `ε^{order+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Taylor<R> {
    coeffs: Vec<R>,
}

impl<R: Ring> Taylor<R> {
    pub fn from_coeffs(coeffs: Vec<R>) -> Self {
        assert!(!coeffs.is_empty(), "a Taylor series needs at least the constant term");
        Taylor { coeffs }
    }

    pub fn constant(c: R, order: usize) -> Self {
        let mut coeffs = vec![R::zero(); order + 1];
        coeffs[0] = c;
        Taylor { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Taylor { coeffs: vec![R::zero(); order + 1] }
    }

    /// The variable `ε` itself.
    pub fn variable(order: usize) -> Self {
        let mut coeffs = vec![R::zero(); order + 1];
        if order >= 1 {
            coeffs[1] = R::one();
        }
        Taylor { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> R {
        self.coeffs.get(k).cloned().unwrap_or_else(R::zero)
    }

    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&R, &R) -> R) -> Self {
        let n = self.coeffs.len().min(other.coeffs.len());
        Taylor { coeffs: (0..n).map(|k| f(&self.coeffs[k], &other.coeffs[k])).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.sub(b))
    }

    pub fn neg(&self) -> Self {
        Taylor { coeffs: self.coeffs.iter().map(|c| c.neg()).collect() }
    }

    pub fn scale(&self, s: &R) -> Self {
        Taylor { coeffs: self.coeffs.iter().map(|c| c.mul(s)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.coeffs.len().min(other.coeffs.len());
        let mut out = vec![R::zero(); n];
        for i in 0..n {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..n - i {
                if other.coeffs[j].is_zero() {
                    continue;
                }
                out[i + j] = out[i + j].add(&self.coeffs[i].mul(&other.coeffs[j]));
            }
        }
        Taylor { coeffs: out }
    }

    /// Inverse; the constant term must be a unit.
    pub fn inv(&self) -> Result<Self> {
        let c0 = self.coeffs[0]
            .try_inv()
            .ok_or_else(|| Error::Singular("Taylor series with non-invertible constant term".into()))?;
        let n = self.coeffs.len();
        let mut w: Vec<R> = vec![R::zero(); n];
        for k in 0..n {
            let mut acc = if k == 0 { R::one() } else { R::zero() };
            for i in 1..=k {
                acc = acc.sub(&self.coeffs[i].mul(&w[k - i]));
            }
            w[k] = acc.mul(&c0);
        }
        Ok(Taylor { coeffs: w })
    }

    /// `f(s ε)`.
    pub fn rescale(&self, s: &R) -> Self {
        let mut p = R::one();
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            coeffs.push(c.mul(&p));
            p = p.mul(s);
        }
        Taylor { coeffs }
    }

    pub fn map<S: Ring>(&self, f: impl Fn(&R) -> S) -> Taylor<S> {
        Taylor { coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn truncate(&self, order: usize) -> Self {
        let n = (order + 1).min(self.coeffs.len());
        Taylor { coeffs: self.coeffs[..n].to_vec() }
    }
}

impl<R: QAlgebra> Taylor<R> {
    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        let mut coeffs: Vec<R> = (1..n).map(|k| self.coeffs[k].mul(&R::from_int(k as i64))).collect();
        coeffs.push(R::zero());
        Taylor { coeffs }
    }

    /// `exp` of a series whose constant term is zero.
    pub(crate) fn exp_nilpotent(&self) -> Self {
        // f = exp(g), f' = g' f.
        let n = self.coeffs.len();
        let mut f = vec![R::zero(); n];
        f[0] = R::one();
        for k in 1..n {
            let mut acc = R::zero();
            for j in 1..=k {
                if self.coeffs[j].is_zero() {
                    continue;
                }
                acc = acc.add(&self.coeffs[j].mul(&f[k - j]).mul(&R::from_int(j as i64)));
            }
            f[k] = acc.mul(&R::from_ratio(1, k as i64));
        }
        Taylor { coeffs: f }
    }

    /// `log` of a series with constant term 1.
    pub(crate) fn ln_unipotent(&self) -> Self {
        // g = log f, f g' = f'.
        let n = self.coeffs.len();
        let mut g = vec![R::zero(); n];
        for k in 1..n {
            let mut acc = self.coeffs[k].mul(&R::from_int(k as i64));
            for j in 1..k {
                acc = acc.sub(&self.coeffs[k - j].mul(&g[j]).mul(&R::from_int(j as i64)));
            }
            g[k] = acc.mul(&R::from_ratio(1, k as i64));
        }
        Taylor { coeffs: g }
    }
}

impl<R: Analytic> Taylor<R> {
    pub fn exp(&self) -> Self {
        let c0 = self.coeffs[0].clone();
        let mut tail = self.clone();
        tail.coeffs[0] = R::zero();
        tail.exp_nilpotent().scale(&c0.exp())
    }

    pub fn ln(&self) -> Result<Self> {
        let c0 = self.coeffs[0].clone();
        let l0 = c0.ln().ok_or_else(|| Error::Singular("log of a series with zero constant term".into()))?;
        let inv = c0.try_inv().ok_or_else(|| Error::Singular("non-invertible constant term".into()))?;
        let mut g = self.scale(&inv).ln_unipotent();
        g.coeffs[0] = l0;
        Ok(g)
    }
}

/// Taylor expansion of `exp(a ε)` with complex `a`.
pub fn exp_linear(a: Complex64, order: usize) -> Taylor<Complex64> {
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut term = Complex64::new(1.0, 0.0);
    for k in 0..=order {
        coeffs.push(term);
        term = term * a / (k as f64 + 1.0);
    }
    Taylor { coeffs }
}

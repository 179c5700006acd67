//! Truncated Laurent series in `q^{1/2}`.
//!
//! Exponents are stored doubled ("half-units"): slot `k` carries `q^{k/2}`.
//! A series is either exact (a Laurent polynomial, `trunc == None`) or known
//! only modulo `q^{trunc/2}`.

use std::fmt;

use num_complex::Complex64;
use num_rational::BigRational;

use super::ring::{Analytic, QAlgebra, Ring};
use crate::error::{Error, Result};

/// Default truncation: terms through `q^6` (13 half-integer slots).
pub const DEFAULT_TRUNC: i64 = 13;

#[derive(Clone, Debug)]
pub struct QSeries<R> {
    low: i64,
    coeffs: Vec<R>,
    trunc: Option<i64>,
}

impl<R: Ring> QSeries<R> {
    pub fn zero_exact() -> Self {
        QSeries { low: 0, coeffs: Vec::new(), trunc: None }
    }

    /// The zero series known modulo `q^{trunc/2}`.
    pub fn zero_to(trunc: i64) -> Self {
        QSeries { low: 0, coeffs: Vec::new(), trunc: Some(trunc) }
    }

    pub fn constant(c: R) -> Self {
        QSeries { low: 0, coeffs: vec![c], trunc: None }.normalized()
    }

    /// `c * q^{half/2}`, exact.
    pub fn monomial(c: R, half: i64) -> Self {
        QSeries { low: half, coeffs: vec![c], trunc: None }.normalized()
    }

    /// Build from `(half_exponent, coefficient)` pairs.
    pub fn from_terms<I: IntoIterator<Item = (i64, R)>>(terms: I, trunc: Option<i64>) -> Self {
        let mut s = Self::zero_exact();
        s.trunc = trunc;
        for (k, c) in terms {
            s.add_term(k, c);
        }
        s.normalized()
    }

    /// Dense constructor: `coeffs[i]` is the coefficient of `q^{(low+i)/2}`.
    pub fn from_dense(low: i64, coeffs: Vec<R>, trunc: Option<i64>) -> Self {
        QSeries { low, coeffs, trunc }.normalized()
    }

    pub fn trunc(&self) -> Option<i64> {
        self.trunc
    }

    /// Lower bound on stored exponents (half-units).
    pub fn low(&self) -> i64 {
        self.low
    }

    /// Smallest half-exponent with a nonzero coefficient.
    pub fn valuation(&self) -> Option<i64> {
        self.coeffs.iter().position(|c| !c.is_zero()).map(|i| self.low + i as i64)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Coefficient of `q^{half/2}`; zero outside the stored range.
    pub fn coeff(&self, half: i64) -> R {
        if half < self.low {
            return R::zero();
        }
        self.coeffs.get((half - self.low) as usize).cloned().unwrap_or_else(R::zero)
    }

    /// Stored `(half_exponent, coefficient)` pairs with nonzero coefficient.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &R)> {
        let low = self.low;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (low + i as i64, c))
    }

    /// Highest stored half-exponent plus one (or `low` when empty).
    pub fn end(&self) -> i64 {
        self.low + self.coeffs.len() as i64
    }

    fn add_term(&mut self, half: i64, c: R) {
        if c.is_zero() {
            return;
        }
        if let Some(t) = self.trunc {
            if half >= t {
                return;
            }
        }
        if self.coeffs.is_empty() {
            self.low = half;
        }
        if half < self.low {
            let pad = (self.low - half) as usize;
            let mut v = vec![R::zero(); pad];
            v.append(&mut self.coeffs);
            self.coeffs = v;
            self.low = half;
        }
        let idx = (half - self.low) as usize;
        if idx >= self.coeffs.len() {
            self.coeffs.resize(idx + 1, R::zero());
        }
        self.coeffs[idx] = self.coeffs[idx].add(&c);
    }

    fn normalized(mut self) -> Self {
        if let Some(t) = self.trunc {
            let keep = (t - self.low).max(0) as usize;
            self.coeffs.truncate(keep);
        }
        while matches!(self.coeffs.last(), Some(c) if c.is_zero()) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.low += lead as i64;
        }
        if self.coeffs.is_empty() {
            self.low = 0;
        }
        self
    }

    /// Re-truncate to a (not larger) precision.
    pub fn truncated(&self, trunc: i64) -> Self {
        let t = match self.trunc {
            Some(old) => old.min(trunc),
            None => trunc,
        };
        QSeries { low: self.low, coeffs: self.coeffs.clone(), trunc: Some(t) }.normalized()
    }

    pub fn add(&self, other: &Self) -> Self {
        let trunc = min_trunc(self.trunc, other.trunc);
        let mut out = QSeries { low: self.low, coeffs: self.coeffs.clone(), trunc };
        for (k, c) in other.terms() {
            out.add_term(k, c.clone());
        }
        out.normalized()
    }

    pub fn neg(&self) -> Self {
        QSeries { low: self.low, coeffs: self.coeffs.iter().map(|c| c.neg()).collect(), trunc: self.trunc }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &R) -> Self {
        QSeries { low: self.low, coeffs: self.coeffs.iter().map(|c| c.mul(s)).collect(), trunc: self.trunc }
            .normalized()
    }

    /// Multiply by `q^{half/2}`.
    pub fn shift(&self, half: i64) -> Self {
        QSeries { low: self.low + half, coeffs: self.coeffs.clone(), trunc: self.trunc.map(|t| t + half) }
    }

    pub fn mul(&self, other: &Self) -> Self {
        // Known precision of a product: each truncation error is multiplied by
        // the other factor's leading term.
        let lo_a = self.valuation().unwrap_or(self.low);
        let lo_b = other.valuation().unwrap_or(other.low);
        let mut trunc = min_trunc(self.trunc, other.trunc);
        if let Some(ta) = self.trunc {
            if lo_b < 0 {
                trunc = min_trunc(trunc, Some(ta + lo_b));
            }
        }
        if let Some(tb) = other.trunc {
            if lo_a < 0 {
                trunc = min_trunc(trunc, Some(tb + lo_a));
            }
        }
        if self.is_zero() || other.is_zero() {
            return QSeries { low: 0, coeffs: Vec::new(), trunc };
        }
        let low = self.low + other.low;
        let mut len = self.coeffs.len() + other.coeffs.len() - 1;
        if let Some(t) = trunc {
            len = len.min((t - low).max(0) as usize);
        }
        let mut coeffs = vec![R::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() || i >= len {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                let k = i + j;
                if k >= len {
                    break;
                }
                if b.is_zero() {
                    continue;
                }
                coeffs[k] = coeffs[k].add(&a.mul(b));
            }
        }
        QSeries { low, coeffs, trunc }.normalized()
    }

    /// Multiplicative inverse. Exact series that do not invert to a monomial
    /// are expanded to [`DEFAULT_TRUNC`].
    pub fn inv(&self) -> Result<Self> {
        let trunc = self.trunc.unwrap_or(DEFAULT_TRUNC);
        self.inv_to(trunc)
    }

    /// Inverse known modulo `q^{trunc/2}` (or the series' own precision if
    /// that is coarser).
    pub fn inv_to(&self, trunc: i64) -> Result<Self> {
        let v = self.valuation().ok_or_else(|| Error::Singular("zero series has no inverse".into()))?;
        let lead = self.coeff(v);
        let lead_inv = lead
            .try_inv()
            .ok_or_else(|| Error::Singular(format!("leading coefficient at q^({}/2) is not invertible", v)))?;
        // Exact monomials invert exactly.
        if self.trunc.is_none() && self.terms().count() == 1 {
            return Ok(QSeries::monomial(lead_inv, -v));
        }
        // self = q^{v/2} * u with u(0) = lead; u known to precision own_t - v.
        let own = self.trunc.map(|t| t - v);
        let mut prec = trunc + v;
        if let Some(o) = own {
            prec = prec.min(o);
        }
        let prec = prec.max(0);
        let n = prec as usize;
        let u: Vec<R> = (0..n).map(|i| self.coeff(v + i as i64)).collect();
        let mut w = vec![R::zero(); n];
        for k in 0..n {
            let mut acc = if k == 0 { R::one() } else { R::zero() };
            for i in 1..=k {
                if !u[i].is_zero() && !w[k - i].is_zero() {
                    acc = acc.sub(&u[i].mul(&w[k - i]));
                }
            }
            w[k] = acc.mul(&lead_inv);
        }
        Ok(QSeries { low: -v, coeffs: w, trunc: Some(prec - v) }.normalized())
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = QSeries::constant(R::one());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Substitute `q -> q^m` (half-exponents scale by `m`).
    pub fn dilate(&self, m: i64) -> Self {
        assert!(m > 0, "dilation factor must be positive");
        let terms: Vec<(i64, R)> = self.terms().map(|(k, c)| (k * m, c.clone())).collect();
        QSeries::from_terms(terms, self.trunc.map(|t| t * m))
    }

    /// Apply a coefficient map.
    pub fn map<S: Ring, F: Fn(&R) -> S>(&self, f: F) -> QSeries<S> {
        QSeries { low: self.low, coeffs: self.coeffs.iter().map(f).collect(), trunc: self.trunc }.normalized()
    }

    /// Fallible coefficient map.
    pub fn try_map<S: Ring, F: Fn(&R) -> Result<S>>(&self, f: F) -> Result<QSeries<S>> {
        let coeffs = self.coeffs.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(QSeries { low: self.low, coeffs, trunc: self.trunc }.normalized())
    }

    /// Coefficient-wise comparison over the common known range.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let t = min_trunc(self.trunc, other.trunc);
        let lo = self.low.min(other.low);
        let hi = match t {
            Some(t) => t,
            None => self.end().max(other.end()),
        };
        (lo..hi).all(|k| self.coeff(k).approx_eq(&other.coeff(k), tol))
    }
}

impl<R: Ring> PartialEq for QSeries<R> {
    fn eq(&self, other: &Self) -> bool {
        if self.trunc != other.trunc {
            return false;
        }
        let lo = self.low.min(other.low);
        let hi = self.end().max(other.end());
        (lo..hi).all(|k| self.coeff(k) == other.coeff(k))
    }
}

fn min_trunc(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

impl<R: Ring> Ring for QSeries<R> {
    fn zero() -> Self {
        QSeries::zero_exact()
    }
    fn one() -> Self {
        QSeries::constant(R::one())
    }
    fn add(&self, other: &Self) -> Self {
        QSeries::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        QSeries::mul(self, other)
    }
    fn neg(&self) -> Self {
        QSeries::neg(self)
    }
    fn is_zero(&self) -> bool {
        QSeries::is_zero(self)
    }
    fn from_int(n: i64) -> Self {
        QSeries::constant(R::from_int(n))
    }
    fn try_inv(&self) -> Option<Self> {
        self.inv().ok()
    }
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        QSeries::approx_eq(self, other, tol)
    }
}

impl<R: QAlgebra> QAlgebra for QSeries<R> {
    fn from_rational(r: &BigRational) -> Self {
        QSeries::constant(R::from_rational(r))
    }
}

impl<R: Analytic> QSeries<R> {
    /// Split into the `q^0` coefficient and the part with positive exponents.
    /// Fails if there are negative exponents.
    fn split_constant(&self) -> Option<(R, Self)> {
        if self.valuation().map(|v| v < 0).unwrap_or(false) {
            return None;
        }
        let c = self.coeff(0);
        let rest = self.sub(&QSeries::constant(c.clone()));
        Some((c, rest))
    }

    fn nilpotent_precision(&self, rest: &Self) -> i64 {
        self.trunc.unwrap_or(DEFAULT_TRUNC).max(rest.valuation().unwrap_or(1))
    }

    /// `exp` of a series without negative exponents.
    pub fn exp_series(&self) -> Result<Self> {
        let (c, rest) = self
            .split_constant()
            .ok_or_else(|| Error::Domain("exp of a series with negative exponents".into()))?;
        let head = QSeries::constant(c.exp());
        if rest.is_zero() {
            return Ok(match self.trunc {
                Some(t) => head.truncated(t),
                None => head,
            });
        }
        let trunc = self.nilpotent_precision(&rest);
        let rest = rest.truncated(trunc);
        let v = rest.valuation().unwrap_or(trunc).max(1);
        let mut term = QSeries::constant(R::one()).truncated(trunc);
        let mut acc = term.clone();
        let mut k = 1i64;
        while k * v < trunc {
            term = term.mul(&rest).scale(&R::from_ratio(1, k));
            acc = acc.add(&term);
            k += 1;
        }
        Ok(head.mul(&acc))
    }

    /// Principal `log` of a series whose `q^0` coefficient is nonzero.
    pub fn ln_series(&self) -> Result<Self> {
        let (c, rest) = self
            .split_constant()
            .ok_or_else(|| Error::Domain("log of a series with negative exponents".into()))?;
        let lc = c.ln().ok_or_else(|| Error::Singular("log of a series with zero constant term".into()))?;
        let head = QSeries::constant(lc);
        if rest.is_zero() {
            return Ok(match self.trunc {
                Some(t) => head.truncated(t),
                None => head,
            });
        }
        let trunc = self.nilpotent_precision(&rest);
        let x = rest.truncated(trunc).scale(&c.try_inv().expect("nonzero"));
        let v = x.valuation().unwrap_or(trunc).max(1);
        let mut pw = x.clone();
        let mut acc = QSeries::zero_to(trunc);
        let mut k = 1i64;
        while k * v < trunc {
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc = acc.add(&pw.scale(&R::from_ratio(sign, k)));
            pw = pw.mul(&x);
            k += 1;
        }
        Ok(head.add(&acc))
    }
}

impl<R: Analytic> Analytic for QSeries<R> {
    fn from_complex(c: Complex64) -> Self {
        QSeries::constant(R::from_complex(c))
    }
    fn exp(&self) -> Self {
        self.exp_series().expect("exp of a series with negative exponents")
    }
    fn ln(&self) -> Option<Self> {
        self.ln_series().ok()
    }
    fn magnitude(&self) -> f64 {
        self.coeffs.iter().map(|c| c.magnitude()).fold(0.0, f64::max)
    }
}

impl QSeries<BigRational> {
    pub fn to_complex(&self) -> QSeries<Complex64> {
        self.map(<Complex64 as QAlgebra>::from_rational)
    }
}

impl QSeries<Complex64> {
    /// Evaluate at a numeric `q^{1/2}`; only the stored terms are summed.
    pub fn eval_at_sqrt_q(&self, sqrt_q: Complex64) -> Complex64 {
        self.terms().map(|(k, c)| c * sqrt_q.powi(k as i32)).sum()
    }
}

impl<R: Ring + fmt::Display> fmt::Display for QSeries<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let e = if k % 2 == 0 { format!("{}", k / 2) } else { format!("{}/2", k) };
            write!(f, "({})q^{}", c, e)?;
        }
        if first {
            write!(f, "0")?;
        }
        if let Some(t) = self.trunc {
            let e = if t % 2 == 0 { format!("{}", t / 2) } else { format!("{}/2", t) };
            write!(f, " + O(q^{})", e)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ring::rat;

    fn q(k: i64) -> QSeries<BigRational> {
        QSeries::monomial(rat(1, 1), k)
    }

    #[test]
    fn inverse_of_one_minus_q_is_geometric() {
        let one_minus_q = QSeries::constant(rat(1, 1)).sub(&q(2));
        let inv = one_minus_q.inv_to(13).unwrap();
        for k in 0..13 {
            let expect = if k % 2 == 0 { rat(1, 1) } else { rat(0, 1) };
            assert_eq!(inv.coeff(k), expect);
        }
        assert_eq!(inv.trunc(), Some(13));
    }

    #[test]
    fn inverse_of_one_is_exact() {
        let one = QSeries::constant(rat(1, 1));
        assert_eq!(one.inv().unwrap(), one);
    }

    #[test]
    fn inverse_of_zero_is_singular() {
        assert!(matches!(QSeries::<BigRational>::zero_exact().inv(), Err(Error::Singular(_))));
    }

    #[test]
    fn laurent_inverse() {
        // (q^{1/2} - q) ^{-1} = q^{-1/2} (1 + q^{1/2} + q + ...)
        let s = q(1).sub(&q(2)).truncated(8);
        let inv = s.inv().unwrap();
        assert_eq!(inv.valuation(), Some(-1));
        let prod = s.mul(&inv);
        assert_eq!(prod.coeff(0), rat(1, 1));
        for k in 1..prod.trunc().unwrap() {
            assert_eq!(prod.coeff(k), rat(0, 1));
        }
    }

    #[test]
    fn truncation_is_min() {
        let a = QSeries::constant(rat(1, 1)).add(&q(1)).truncated(6);
        let b = QSeries::constant(rat(2, 1)).truncated(9);
        assert_eq!(a.mul(&b).trunc(), Some(6));
        assert_eq!(a.add(&b).trunc(), Some(6));
        let exact = QSeries::constant(rat(3, 1));
        assert_eq!(a.mul(&exact).trunc(), Some(6));
    }

    #[test]
    fn exp_log_roundtrip() {
        let x: QSeries<Complex64> =
            QSeries::from_terms([(0, Complex64::new(0.3, 0.1)), (1, Complex64::new(1.0, 0.0)), (4, Complex64::new(-2.0, 0.5))], Some(13));
        let back = x.exp_series().unwrap().ln_series().unwrap();
        assert!(back.approx_eq(&x, 1e-13));
    }
}

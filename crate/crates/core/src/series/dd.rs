//! Double-double complex arithmetic (about 32 significant digits), for
//! rational functions that are evaluated near cancelling poles.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive};

use super::ring::{QAlgebra, Ring};

/// `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd { hi: std::f64::consts::PI, lo: 1.224_646_799_147_353_2e-16 };

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi));
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from_f64(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from_f64(q2)));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from_f64(q3))
    }

    pub fn abs(self) -> f64 {
        self.to_f64().abs()
    }

    /// Exact `BigRational -> Dd` up to double-double rounding.
    pub fn from_rational(r: &BigRational) -> Dd {
        let split = |n: &num_bigint::BigInt| -> Dd {
            let hi = n.to_f64().unwrap_or(f64::INFINITY);
            match num_bigint::BigInt::from_f64(hi) {
                Some(h) => Dd { hi, lo: (n - h).to_f64().unwrap_or(0.0) },
                None => Dd::from_f64(hi),
            }
        };
        let num = split(r.numer());
        let den = split(r.denom());
        if !num.hi.is_finite() || !den.hi.is_finite() {
            let v = super::ring::rational_to_f64(r);
            return Dd::from_f64(if r.is_negative() { -v.abs() } else { v });
        }
        num.div(den)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DdComplex {
    pub re: Dd,
    pub im: Dd,
}

impl DdComplex {
    pub fn new(re: Dd, im: Dd) -> Self {
        DdComplex { re, im }
    }

    pub fn from_c64(z: Complex64) -> Self {
        DdComplex { re: Dd::from_f64(z.re), im: Dd::from_f64(z.im) }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn norm(self) -> f64 {
        self.to_c64().norm()
    }

    /// `i π`.
    pub fn i_pi() -> Self {
        DdComplex { re: Dd::ZERO, im: Dd::PI }
    }

    pub fn scale_real(self, s: Dd) -> Self {
        DdComplex { re: self.re.mul(s), im: self.im.mul(s) }
    }

    /// `z^n` for any integer `n` (`z ≠ 0` when `n < 0`).
    pub fn powi(self, n: i64) -> Option<Self> {
        let p = Ring::pow(&self, n.unsigned_abs() as u32);
        if n < 0 {
            p.try_inv()
        } else {
            Some(p)
        }
    }
}

impl Ring for DdComplex {
    fn zero() -> Self {
        DdComplex::default()
    }
    fn one() -> Self {
        DdComplex { re: Dd::ONE, im: Dd::ZERO }
    }
    fn add(&self, o: &Self) -> Self {
        DdComplex { re: self.re.add(o.re), im: self.im.add(o.im) }
    }
    fn mul(&self, o: &Self) -> Self {
        DdComplex { re: self.re.mul(o.re).sub(self.im.mul(o.im)), im: self.re.mul(o.im).add(self.im.mul(o.re)) }
    }
    fn neg(&self) -> Self {
        DdComplex { re: self.re.neg(), im: self.im.neg() }
    }
    fn is_zero(&self) -> bool {
        self.re.hi == 0.0 && self.im.hi == 0.0
    }
    fn from_int(n: i64) -> Self {
        let hi = n as f64;
        let lo = (n - hi as i64) as f64;
        DdComplex { re: Dd { hi, lo }, im: Dd::ZERO }
    }
    fn try_inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.re.mul(self.re).add(self.im.mul(self.im));
        Some(DdComplex { re: self.re.div(n), im: self.im.neg().div(n) })
    }
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.to_c64().approx_eq(&other.to_c64(), tol)
    }
}

impl QAlgebra for DdComplex {
    fn from_rational(r: &BigRational) -> Self {
        DdComplex { re: Dd::from_rational(r), im: Dd::ZERO }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ring::rat;

    #[test]
    fn resolves_cancellation_beyond_double() {
        let a = Dd::from_f64(1.0).add(Dd::from_f64(1e-20));
        let b = a.sub(Dd::ONE);
        assert!((b.to_f64() - 1e-20).abs() < 1e-35);
    }

    #[test]
    fn division_round_trips() {
        let x = Dd::from_rational(&rat(1, 3));
        let back = x.mul(Dd::from_f64(3.0)).sub(Dd::ONE);
        assert!(back.abs() < 1e-31);
        let z = DdComplex::from_c64(Complex64::new(0.3, -1.7));
        let w = z.mul(&z.try_inv().unwrap()).sub(&DdComplex::one());
        assert!(w.norm() < 1e-31);
    }

    #[test]
    fn pi_matches_machin_series() {
        // π = 16 atan(1/5) - 4 atan(1/239), summed in double-double.
        let atan_inv = |n: i64| {
            let x = Dd::from_rational(&rat(1, n));
            let x2 = x.mul(x);
            let (mut acc, mut p) = (Dd::ZERO, x);
            for k in 0..40 {
                let term = p.div(Dd::from_f64((2 * k + 1) as f64));
                acc = if k % 2 == 0 { acc.add(term) } else { acc.sub(term) };
                p = p.mul(x2);
            }
            acc
        };
        let pi = atan_inv(5).mul(Dd::from_f64(16.0)).sub(atan_inv(239).mul(Dd::from_f64(4.0)));
        assert!(pi.sub(Dd::PI).abs() < 1e-31);
    }
}

//! Coefficient rings.
//!
//! Every container in this crate is generic over a [`Ring`]. Mixing two
//! different coefficient rings in one operation is rejected by the type
//! checker, so there is no runtime "ring mismatch" path.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A commutative ring with unit.
pub trait Ring: Clone + Debug + PartialEq + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn from_int(n: i64) -> Self;
    /// Multiplicative inverse when it exists in the ring.
    fn try_inv(&self) -> Option<Self>;
    /// Closeness test; exact rings ignore `tol`.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }
}

/// A ring containing the rationals.
pub trait QAlgebra: Ring {
    fn from_rational(r: &BigRational) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&BigRational::new(num.into(), den.into()))
    }
}

/// A Q-algebra with a complex embedding and exp/log of the "constant" part.
pub trait Analytic: QAlgebra {
    fn from_complex(c: Complex64) -> Self;
    /// `exp`, defined on the whole algebra.
    fn exp(&self) -> Self;
    /// Principal logarithm; `None` if the leading part is not invertible.
    fn ln(&self) -> Option<Self>;
    /// Largest modulus of any stored coefficient (used for tolerances).
    fn magnitude(&self) -> f64;
}

impl Ring for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn try_inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

impl QAlgebra for BigRational {
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
}

impl Ring for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn from_int(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn try_inv(&self) -> Option<Self> {
        if Ring::is_zero(self) {
            None
        } else {
            Some(self.inv())
        }
    }
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self - other).norm() <= tol * self.norm().max(other.norm()).max(1.0)
    }
}

impl QAlgebra for Complex64 {
    fn from_rational(r: &BigRational) -> Self {
        Complex64::new(rational_to_f64(r), 0.0)
    }
}

impl Analytic for Complex64 {
    fn from_complex(c: Complex64) -> Self {
        c
    }
    fn exp(&self) -> Self {
        Complex64::exp(*self)
    }
    fn ln(&self) -> Option<Self> {
        if Ring::is_zero(self) {
            None
        } else {
            Some(Complex64::ln(*self))
        }
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Lossy conversion that survives numerators and denominators beyond `f64` range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let shift = r.numer().bits() as i64 - r.denom().bits() as i64;
    let scaled = if shift > 0 {
        r / BigRational::from_integer(BigInt::one() << shift as usize)
    } else {
        r * BigRational::from_integer(BigInt::one() << (-shift) as usize)
    };
    let base = scaled.numer().to_f64().unwrap_or(0.0) / scaled.denom().to_f64().unwrap_or(1.0);
    let out = base * 2f64.powi(shift as i32);
    if r.is_negative() && out > 0.0 {
        -out
    } else {
        out
    }
}

/// `n!` as a big integer.
pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Binomial coefficient `C(n, k)` for integer `n` (possibly negative) and `k >= 0`.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 {
        return BigInt::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(-2, 3), BigInt::from(-4));
        assert_eq!(binomial(3, 5), BigInt::zero());
    }

    #[test]
    fn huge_rational_to_f64() {
        let big = BigRational::from_integer(BigInt::one() << 1100usize);
        let r = big.clone() / (big * BigInt::from(3));
        assert!((rational_to_f64(&r) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pow_by_squaring() {
        assert_eq!(rat(2, 3).pow(5), rat(32, 243));
    }
}

//! Exact complex rationals `a + b i`, for evaluations whose inputs are
//! doubles (hence dyadic rationals) and whose cancellations defeat any
//! fixed precision.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};

use super::ring::{rational_to_f64, QAlgebra, Ring};

#[derive(Clone, Debug, PartialEq)]
pub struct ExactComplex {
    pub re: BigRational,
    pub im: BigRational,
}

impl ExactComplex {
    /// The exact value of a finite double pair; `None` for NaN or infinity.
    pub fn from_c64(z: Complex64) -> Option<Self> {
        Some(ExactComplex { re: BigRational::from_f64(z.re)?, im: BigRational::from_f64(z.im)? })
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }

    pub fn i() -> Self {
        ExactComplex { re: <BigRational as Zero>::zero(), im: BigRational::from_integer(BigInt::from(1)) }
    }
}

impl Ring for ExactComplex {
    fn zero() -> Self {
        ExactComplex { re: <BigRational as Zero>::zero(), im: <BigRational as Zero>::zero() }
    }
    fn one() -> Self {
        Self::from_int(1)
    }
    fn add(&self, o: &Self) -> Self {
        ExactComplex { re: &self.re + &o.re, im: &self.im + &o.im }
    }
    fn mul(&self, o: &Self) -> Self {
        ExactComplex { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }
    fn neg(&self) -> Self {
        ExactComplex { re: -&self.re, im: -&self.im }
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.re) && Zero::is_zero(&self.im)
    }
    fn from_int(n: i64) -> Self {
        ExactComplex { re: BigRational::from_integer(BigInt::from(n)), im: <BigRational as Zero>::zero() }
    }
    fn try_inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = &self.re * &self.re + &self.im * &self.im;
        Some(ExactComplex { re: &self.re / &n, im: -&self.im / &n })
    }
    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

impl QAlgebra for ExactComplex {
    fn from_rational(r: &BigRational) -> Self {
        ExactComplex { re: r.clone(), im: <BigRational as Zero>::zero() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubles_are_represented_exactly() {
        let z = ExactComplex::from_c64(Complex64::new(1.0 + 1e-6, -0.1)).unwrap();
        assert_eq!(z.to_c64(), Complex64::new(1.0 + 1e-6, -0.1));
        let w = z.sub(&ExactComplex::one());
        assert_eq!(w.to_c64().re, (1.0 + 1e-6) - 1.0);
    }

    #[test]
    fn inverse_is_exact() {
        let z = ExactComplex::from_c64(Complex64::new(0.3, 1.7)).unwrap();
        assert_eq!(z.mul(&z.try_inv().unwrap()), ExactComplex::one());
        assert!(ExactComplex::zero().try_inv().is_none());
        assert_eq!(ExactComplex::i().mul(&ExactComplex::i()), ExactComplex::from_int(-1));
    }
}

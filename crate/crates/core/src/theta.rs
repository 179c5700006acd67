//! The Jacobi theta functions `θ, θ₁, θ₂, θ₃` as infinite products.
//!
//! ```text
//! θ(v)  = 2 q^{1/8} sin(πv) c(q) ∏ (1 - qⁿ w)(1 - qⁿ/w)
//! θ₁(v) = 2 q^{1/8} cos(πv) c(q) ∏ (1 + qⁿ w)(1 + qⁿ/w)
//! θ₂(v) =                    c(q) ∏ (1 - q^{n-1/2} w)(1 - q^{n-1/2}/w)
//! θ₃(v) =                    c(q) ∏ (1 + q^{n-1/2} w)(1 + q^{n-1/2}/w)
//! ```
//! with `w = e^{2πiv}` and `c(q) = ∏(1 - qⁿ)`.
//!
//! Expansions in the elliptic variable are generic over an [`EvalContext`]:
//! [`NumericCtx`] evaluates at a point `τ` of the upper half plane and
//! [`SeriesCtx`] produces truncated q-expansions. Every expansion is built as
//! `exp(Σ log(factor))`, with the elementary `sin`/`cos` factor multiplied in
//! separately so that zeros of numerators are handled exactly.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::ring::{Analytic, Ring};
use crate::series::taylor::{exp_linear, Taylor};
use crate::series::{QSeries, DEFAULT_TRUNC};

/// Default tail tolerance for numeric products.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Tail tolerance used internally when theta quotients feed further algebra.
pub const INTERNAL_TOL: f64 = 1e-17;
/// Hard cap on the number of product factors.
pub const MAX_FACTORS: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaKind {
    Theta,
    Theta1,
    Theta2,
    Theta3,
}

impl ThetaKind {
    pub const ALL: [ThetaKind; 4] = [ThetaKind::Theta, ThetaKind::Theta1, ThetaKind::Theta2, ThetaKind::Theta3];

    /// Index `j` of `θ_j`, with `θ` itself mapped to 0.
    pub fn index(self) -> usize {
        match self {
            ThetaKind::Theta => 0,
            ThetaKind::Theta1 => 1,
            ThetaKind::Theta2 => 2,
            ThetaKind::Theta3 => 3,
        }
    }

    pub fn from_index(j: usize) -> Result<Self> {
        match j {
            0 => Ok(ThetaKind::Theta),
            1 => Ok(ThetaKind::Theta1),
            2 => Ok(ThetaKind::Theta2),
            3 => Ok(ThetaKind::Theta3),
            _ => Err(Error::Domain(format!("theta index must be 0..=3, got {}", j))),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "theta" | "0" => Ok(ThetaKind::Theta),
            "theta1" | "1" => Ok(ThetaKind::Theta1),
            "theta2" | "2" => Ok(ThetaKind::Theta2),
            "theta3" | "3" => Ok(ThetaKind::Theta3),
            _ => Err(Error::Domain(format!("unknown theta kind {:?}", s))),
        }
    }

    /// Power of `q^{1/8}` in front of the product.
    pub fn eighth_power(self) -> i64 {
        match self {
            ThetaKind::Theta | ThetaKind::Theta1 => 1,
            ThetaKind::Theta2 | ThetaKind::Theta3 => 0,
        }
    }

    /// `(δ, s)`: the product runs over `(1 - s q^{n-δ/2} w^{±1})`.
    fn product_shape(self) -> (i64, f64) {
        match self {
            ThetaKind::Theta => (0, 1.0),
            ThetaKind::Theta1 => (0, -1.0),
            ThetaKind::Theta2 => (1, 1.0),
            ThetaKind::Theta3 => (1, -1.0),
        }
    }
}

/// A point `τ` in the upper half plane plus the q-truncation used for
/// series work.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModularPoint {
    tau: Complex64,
    q_trunc: i64,
}

impl ModularPoint {
    pub fn new(tau: Complex64) -> Result<Self> {
        Self::with_trunc(tau, DEFAULT_TRUNC)
    }

    pub fn with_trunc(tau: Complex64, q_trunc: i64) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(Error::Domain(format!("tau must lie in the upper half plane, got {}", tau)));
        }
        if q_trunc < 1 {
            return Err(Error::Domain("q truncation must be positive".into()));
        }
        Ok(ModularPoint { tau, q_trunc })
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn q_trunc(&self) -> i64 {
        self.q_trunc
    }
}

/// Where theta expansions are evaluated: at a numeric `τ`, or as q-series.
pub trait EvalContext: Sync {
    type S: Analytic;
    /// `q^{half/2}`.
    fn q_half(&self, half: i64) -> Self::S;
    fn lift(&self, c: Complex64) -> Self::S;
    /// Number of factors `n = 0, 1, ...` needed in `∏(1 - a q^{(first + n step)/2})`
    /// with `|a| <= amp`.
    fn factor_count(&self, first: i64, step: i64, amp: f64) -> Result<usize>;
    /// `τ` for numeric contexts.
    fn tau(&self) -> Option<Complex64>;
}

#[derive(Clone, Copy, Debug)]
pub struct NumericCtx {
    pub tau: Complex64,
    pub tol: f64,
}

impl NumericCtx {
    pub fn new(tau: Complex64) -> Result<Self> {
        ModularPoint::new(tau)?;
        Ok(NumericCtx { tau, tol: INTERNAL_TOL })
    }

    pub fn with_tol(tau: Complex64, tol: f64) -> Result<Self> {
        ModularPoint::new(tau)?;
        Ok(NumericCtx { tau, tol })
    }
}

impl EvalContext for NumericCtx {
    type S = Complex64;

    fn q_half(&self, half: i64) -> Complex64 {
        (Complex64::new(0.0, PI) * self.tau * half as f64).exp()
    }

    fn lift(&self, c: Complex64) -> Complex64 {
        c
    }

    fn factor_count(&self, first: i64, step: i64, amp: f64) -> Result<usize> {
        let r = (-PI * self.tau.im).exp();
        let rs = r.powi(step as i32);
        // Tail Σ_{n >= N} amp r^{first + n step} = amp r^{first + N step} / (1 - r^step).
        let target = self.tol * (1.0 - rs) / amp.max(1.0);
        let n = ((target.ln() / r.ln() - first as f64) / step as f64).ceil().max(1.0);
        if !n.is_finite() || n as usize > MAX_FACTORS {
            return Err(Error::Numerical(format!(
                "theta product needs more than {} factors at tau = {}",
                MAX_FACTORS, self.tau
            )));
        }
        Ok(n as usize)
    }

    fn tau(&self) -> Option<Complex64> {
        Some(self.tau)
    }
}

/// q-expansion context: coefficients are [`QSeries`] known modulo
/// `q^{trunc/2}`.
#[derive(Clone, Copy, Debug)]
pub struct SeriesCtx {
    pub trunc: i64,
}

impl SeriesCtx {
    pub fn new(trunc: i64) -> Self {
        SeriesCtx { trunc }
    }
}

impl Default for SeriesCtx {
    fn default() -> Self {
        SeriesCtx { trunc: DEFAULT_TRUNC }
    }
}

impl EvalContext for SeriesCtx {
    type S = QSeries<Complex64>;

    fn q_half(&self, half: i64) -> QSeries<Complex64> {
        QSeries::monomial(Complex64::new(1.0, 0.0), half).truncated(self.trunc)
    }

    fn lift(&self, c: Complex64) -> QSeries<Complex64> {
        QSeries::constant(c).truncated(self.trunc)
    }

    fn factor_count(&self, first: i64, step: i64, _amp: f64) -> Result<usize> {
        if first >= self.trunc {
            return Ok(0);
        }
        Ok(((self.trunc - first + step - 1) / step) as usize)
    }

    fn tau(&self) -> Option<Complex64> {
        None
    }
}

fn i_unit() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

/// Nearest lattice point `a + bτ` (`a, b ∈ ℤ`) to `v`; in series mode only
/// the real integers are poles of `θ^{-1}`.
fn nearest_lattice_point(v: Complex64, tau: Option<Complex64>) -> (i64, i64, f64) {
    match tau {
        Some(tau) => {
            let b = v.im / tau.im;
            let a = v.re - b * tau.re;
            let (ai, bi) = (a.round(), b.round());
            let d = (v - Complex64::new(ai, 0.0) - tau * bi).norm();
            (ai as i64, bi as i64, d)
        }
        None => {
            let ai = v.re.round();
            (ai as i64, 0, (v - Complex64::new(ai, 0.0)).norm())
        }
    }
}

/// `Σ_n log(1 - s q^{n - δ/2})` over `n >= 1`.
pub fn log_constant_product<C: EvalContext>(ctx: &C, delta: i64, s: f64) -> Result<C::S> {
    let n = ctx.factor_count(2 - delta, 2, 1.0)?;
    let mut acc = ctx.lift(Complex64::new(0.0, 0.0));
    for k in 1..=n as i64 {
        let f = ctx.lift(Complex64::new(1.0, 0.0)).sub(&ctx.q_half(2 * k - delta).mul(&ctx.lift(Complex64::new(s, 0.0))));
        acc = acc.add(&f.ln().ok_or_else(|| Error::Singular("vanishing product factor".into()))?);
    }
    Ok(acc)
}

/// Taylor expansion in `ε` of
/// `Σ_n [log(1 - s q^{n-δ/2} e^{2πi(c+ε)}) + log(1 - s q^{n-δ/2} e^{-2πi(c+ε)})]`.
pub fn log_pair_product<C: EvalContext>(
    ctx: &C,
    center: Complex64,
    delta: i64,
    s: f64,
    order: usize,
) -> Result<Taylor<C::S>> {
    let w = (2.0 * PI * i_unit() * center).exp();
    let amp = w.norm().max(1.0 / w.norm());
    let n = ctx.factor_count(2 - delta, 2, amp)?;
    let ep = exp_linear(2.0 * PI * i_unit(), order).map(|c| ctx.lift(*c));
    let em = exp_linear(-2.0 * PI * i_unit(), order).map(|c| ctx.lift(*c));
    let one = Taylor::constant(ctx.lift(Complex64::new(1.0, 0.0)), order);
    let mut acc = Taylor::zero(order);
    for k in 1..=n as i64 {
        let qk = ctx.q_half(2 * k - delta);
        for (wc, e) in [(w, &ep), (w.inv(), &em)] {
            let a = qk.mul(&ctx.lift(wc * s));
            let f = one.sub(&e.scale(&a));
            let l = f.ln().map_err(|_| {
                Error::Pole(format!("theta product factor vanishes at center {} (n = {})", center, k))
            })?;
            acc = acc.add(&l);
        }
    }
    Ok(acc)
}

/// `sin(π(c+ε))` (or `cos` when `cosine`) as a complex Taylor series.
fn trig_taylor(center: Complex64, order: usize, cosine: bool) -> Taylor<Complex64> {
    let a = PI * center;
    let (s0, c0) = (a.sin(), a.cos());
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut fact = 1.0;
    for k in 0..=order {
        if k > 0 {
            fact *= k as f64;
        }
        // d^k/dε^k sin(a + πε) = π^k sin(a + kπ/2)
        let phase = match (k + if cosine { 1 } else { 0 }) % 4 {
            0 => s0,
            1 => c0,
            2 => -s0,
            _ => -c0,
        };
        coeffs.push(phase * PI.powi(k as i32) / fact);
    }
    Taylor::from_coeffs(coeffs)
}

/// `sin(πε)/(πε)`.
fn sinc_taylor(order: usize) -> Taylor<Complex64> {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
    let mut k = 0;
    let mut term = 1.0;
    while k <= order {
        coeffs[k] = Complex64::new(term, 0.0);
        term *= -PI * PI / ((k + 2) as f64 * (k + 3) as f64);
        k += 2;
    }
    Taylor::from_coeffs(coeffs)
}

/// Normalized quotients of theta functions that are genuine q^{1/2}-series
/// (the `q^{1/8}` prefactors cancel).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quotient {
    /// `y θ'(0)/θ(y)` around `y = 0`.
    RegularizedInverse,
    /// `θ'(0)/θ(c + ε)`.
    Inverse,
    /// `θ(c + ε)/θ'(0)`.
    Normalized,
    /// `θ_j(c + ε)/θ_j(0)` for `j = 1, 2, 3`.
    Ratio(ThetaKind),
}

/// Expansion split as `elementary(ε) · exp(log_part(ε))`.
struct Split<S> {
    elementary: Taylor<Complex64>,
    log_part: Taylor<S>,
}

fn quotient_split<C: EvalContext>(ctx: &C, kind: Quotient, center: Complex64, order: usize) -> Result<Split<C::S>> {
    let zero_const = |s: C::S| Taylor::constant(s, order);
    match kind {
        Quotient::RegularizedInverse => {
            if center.norm() != 0.0 {
                return Err(Error::Domain("the regularized inverse is expanded around 0 only".into()));
            }
            let elementary = sinc_taylor(order).inv()?;
            let lc = log_constant_product(ctx, 0, 1.0)?;
            let pairs = log_pair_product(ctx, center, 0, 1.0, order)?;
            let two = ctx.lift(Complex64::new(2.0, 0.0));
            Ok(Split { elementary, log_part: zero_const(lc.mul(&two)).sub(&pairs) })
        }
        Quotient::Inverse | Quotient::Normalized => {
            let (a, b, d) = nearest_lattice_point(center, ctx.tau());
            if d < 1e-12
                && kind == Quotient::Inverse {
                    return Err(Error::Pole(format!(
                        "theta vanishes at the lattice point {} + {}·tau; cannot expand its inverse",
                        a, b
                    )));
                }
            let sin = trig_taylor(center, order, false);
            let lc = log_constant_product(ctx, 0, 1.0)?;
            let pairs = log_pair_product(ctx, center, 0, 1.0, order)?;
            let two = ctx.lift(Complex64::new(2.0, 0.0));
            let log_part = zero_const(lc.mul(&two)).sub(&pairs);
            let scaled = Taylor::constant(Complex64::new(PI, 0.0), order);
            if kind == Quotient::Inverse {
                let elementary = scaled.mul(&sin.inv().map_err(|_| {
                    Error::Pole(format!("theta vanishes at the lattice point {} + {}·tau", a, b))
                })?);
                Ok(Split { elementary, log_part })
            } else {
                let elementary = sin.scale(&Complex64::new(1.0 / PI, 0.0));
                Ok(Split { elementary, log_part: log_part.neg() })
            }
        }
        Quotient::Ratio(kind) => {
            let (delta, s) = kind.product_shape();
            let elementary = match kind {
                ThetaKind::Theta1 => trig_taylor(center, order, true),
                ThetaKind::Theta2 | ThetaKind::Theta3 => Taylor::constant(Complex64::new(1.0, 0.0), order),
                ThetaKind::Theta => {
                    return Err(Error::Domain("theta(0) = 0; use the normalized quotient instead".into()))
                }
            };
            let lc = log_constant_product(ctx, delta, s)?;
            let pairs = log_pair_product(ctx, center, delta, s, order)?;
            let two = ctx.lift(Complex64::new(2.0, 0.0));
            Ok(Split { elementary, log_part: pairs.sub(&zero_const(lc.mul(&two))) })
        }
    }
}

/// Taylor expansion in `ε` of a theta quotient around `center`.
pub fn quotient_taylor<C: EvalContext>(ctx: &C, kind: Quotient, center: Complex64, order: usize) -> Result<Taylor<C::S>> {
    let sp = quotient_split(ctx, kind, center, order)?;
    let elem = sp.elementary.map(|c| ctx.lift(*c));
    Ok(elem.mul(&sp.log_part.exp()))
}

/// Taylor expansion of `log` of a quotient (the elementary factor must not
/// vanish at the center).
pub fn quotient_log_taylor<C: EvalContext>(
    ctx: &C,
    kind: Quotient,
    center: Complex64,
    order: usize,
) -> Result<Taylor<C::S>> {
    let sp = quotient_split(ctx, kind, center, order)?;
    let el = sp.elementary.ln().map_err(|_| Error::Pole(format!("quotient vanishes at center {}", center)))?;
    Ok(el.map(|c| ctx.lift(*c)).add(&sp.log_part))
}

/// A theta function expanded around a center: `q^{eighths/8} · taylor(ε)`.
#[derive(Clone, Debug)]
pub struct ThetaJet<S> {
    pub eighths: i64,
    pub taylor: Taylor<S>,
}

impl ThetaJet<Complex64> {
    /// Fold the `q^{1/8}` prefactor into the coefficients.
    pub fn at(&self, tau: Complex64) -> Taylor<Complex64> {
        let pre = (i_unit() * PI * tau * self.eighths as f64 / 4.0).exp();
        self.taylor.scale(&pre)
    }
}

/// Taylor expansion of a theta function around `center`.
pub fn theta_taylor<C: EvalContext>(ctx: &C, kind: ThetaKind, center: Complex64, order: usize) -> Result<ThetaJet<C::S>> {
    let (delta, s) = kind.product_shape();
    let elementary = match kind {
        ThetaKind::Theta => trig_taylor(center, order, false).scale(&Complex64::new(2.0, 0.0)),
        ThetaKind::Theta1 => trig_taylor(center, order, true).scale(&Complex64::new(2.0, 0.0)),
        _ => Taylor::constant(Complex64::new(1.0, 0.0), order),
    };
    let lc = log_constant_product(ctx, 0, 1.0)?;
    let pairs = log_pair_product(ctx, center, delta, s, order)?;
    let logs = pairs.add(&Taylor::constant(lc, order));
    let taylor = elementary.map(|c| ctx.lift(*c)).mul(&logs.exp());
    Ok(ThetaJet { eighths: kind.eighth_power(), taylor })
}

/// Power series of `θ_j'/θ_j` around `v = 0`; for `θ` itself the regular
/// part `θ'/θ - 1/v`.
pub fn theta_logderiv<C: EvalContext>(ctx: &C, kind: ThetaKind, order: usize) -> Result<Taylor<C::S>> {
    let zero = Complex64::new(0.0, 0.0);
    let log = match kind {
        ThetaKind::Theta => quotient_log_taylor(ctx, Quotient::RegularizedInverse, zero, order + 1)?.neg(),
        _ => quotient_log_taylor(ctx, Quotient::Ratio(kind), zero, order + 1)?,
    };
    Ok(log.derivative().truncate(order))
}

/// Numeric value of a theta function by direct product evaluation.
pub fn theta_eval(kind: ThetaKind, v: Complex64, pt: &ModularPoint) -> Result<Complex64> {
    theta_eval_tol(kind, v, pt.tau, DEFAULT_TOL)
}

pub fn theta_eval_tol(kind: ThetaKind, v: Complex64, tau: Complex64, tol: f64) -> Result<Complex64> {
    let ctx = NumericCtx::with_tol(tau, tol)?;
    let (delta, s) = kind.product_shape();
    let w = (2.0 * PI * i_unit() * v).exp();
    let winv = w.inv();
    let amp = w.norm().max(winv.norm());
    let n = ctx.factor_count(2 - delta, 2, amp)?;
    let q = ctx.q_half(2);
    let mut prod = Complex64::new(1.0, 0.0);
    let mut qn = Complex64::new(1.0, 0.0);
    let mut qh = if delta == 1 { ctx.q_half(1) } else { Complex64::new(1.0, 0.0) };
    for _ in 0..n {
        qn *= q;
        let qk = if delta == 1 { qh } else { qn };
        prod *= (1.0 - qn) * (1.0 - s * qk * w) * (1.0 - s * qk * winv);
        qh *= q;
    }
    let q8 = (i_unit() * PI * tau / 4.0).exp();
    let pre = match kind {
        ThetaKind::Theta => 2.0 * (PI * v).sin() * q8,
        ThetaKind::Theta1 => 2.0 * (PI * v).cos() * q8,
        _ => Complex64::new(1.0, 0.0),
    };
    Ok(pre * prod)
}

/// `θ'(0, τ) = 2π q^{1/8} c(q)³`.
pub fn theta_prime0(tau: Complex64) -> Result<Complex64> {
    let ctx = NumericCtx::new(tau)?;
    let lc = log_constant_product(&ctx, 0, 1.0)?;
    Ok(2.0 * PI * (i_unit() * PI * tau / 4.0).exp() * (3.0 * lc).exp())
}

/// `θ_j(0, τ)` for `j = 1, 2, 3`.
pub fn theta_at_zero(kind: ThetaKind, tau: Complex64) -> Result<Complex64> {
    theta_eval_tol(kind, Complex64::new(0.0, 0.0), tau, INTERNAL_TOL)
}

/// Numeric value of a quotient at `v` (not a Taylor expansion).
pub fn quotient_value(kind: Quotient, v: Complex64, tau: Complex64) -> Result<Complex64> {
    let ctx = NumericCtx::new(tau)?;
    Ok(quotient_taylor(&ctx, kind, v, 0)?.coeff(0))
}

/// `θ'(0) = 2π q^{1/8} c(q)^3` as `q^{1/8}` times a q-series.
pub fn theta_prime0_series(trunc: i64) -> Result<QSeries<Complex64>> {
    let ctx = SeriesCtx::new(trunc);
    let jet = theta_taylor(&ctx, ThetaKind::Theta, Complex64::new(0.0, 0.0), 1)?;
    Ok(jet.taylor.coeff(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Sum (triple-product) forms, independent of the product code.
    fn theta_sum(kind: ThetaKind, v: Complex64, tau: Complex64) -> Complex64 {
        let mut acc = c(0.0, 0.0);
        for n in -40i64..=40 {
            let nf = n as f64;
            let term = match kind {
                ThetaKind::Theta => {
                    let e = (nf + 0.5) * (nf + 0.5);
                    let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    // 2 Σ_{n>=0} (-1)^n q^{(n+1/2)^2/2} sin((2n+1)πv) = -i Σ_{n∈ℤ} (-1)^n q^{..} e^{(2n+1)πiv}
                    -i_unit() * sign * (i_unit() * PI * tau * e).exp() * (i_unit() * PI * v * (2.0 * nf + 1.0)).exp()
                }
                ThetaKind::Theta1 => {
                    let e = (nf + 0.5) * (nf + 0.5);
                    (i_unit() * PI * tau * e).exp() * (i_unit() * PI * v * (2.0 * nf + 1.0)).exp()
                }
                ThetaKind::Theta2 => {
                    let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    sign * (i_unit() * PI * tau * nf * nf).exp() * (2.0 * i_unit() * PI * v * nf).exp()
                }
                ThetaKind::Theta3 => (i_unit() * PI * tau * nf * nf).exp() * (2.0 * i_unit() * PI * v * nf).exp(),
            };
            acc += term;
        }
        acc
    }

    #[test]
    fn products_match_sum_forms() {
        for &(v, tau) in &[(c(0.13, 0.05), c(0.1, 0.9)), (c(-0.4, 0.2), c(-0.3, 1.4)), (c(0.7, -0.1), c(0.45, 0.6))] {
            for kind in ThetaKind::ALL {
                let p = theta_eval(kind, v, &ModularPoint::new(tau).unwrap()).unwrap();
                let s = theta_sum(kind, v, tau);
                assert!((p - s).norm() < 1e-11 * s.norm().max(1.0), "{:?} {} vs {}", kind, p, s);
            }
        }
    }

    #[test]
    fn theta_vanishes_at_zero_and_is_antiperiodic() {
        let pt = ModularPoint::new(c(0.0, 1.0)).unwrap();
        assert_eq!(theta_eval(ThetaKind::Theta, c(0.0, 0.0), &pt).unwrap(), c(0.0, 0.0));
        let v = c(0.31, 0.07);
        let a = theta_eval(ThetaKind::Theta, v + 1.0, &pt).unwrap();
        let b = theta_eval(ThetaKind::Theta, v, &pt).unwrap();
        assert!((a + b).norm() < 1e-12);
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(matches!(ModularPoint::new(c(0.0, -1.0)), Err(Error::Domain(_))));
        assert!(matches!(ModularPoint::new(c(0.3, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn theta_prime0_matches_jacobi_identity() {
        // c(q)^3 = Σ_k (-1)^k (2k+1) q^{k(k+1)/2}
        let s = theta_prime0_series(17).unwrap();
        for half in 0..17 {
            let mut expect = 0.0;
            for k in 0..10i64 {
                if k * (k + 1) == half {
                    expect = 2.0 * PI * (if k % 2 == 0 { 1.0 } else { -1.0 }) * (2 * k + 1) as f64;
                }
            }
            assert!((s.coeff(half) - c(expect, 0.0)).norm() < 1e-9, "half {}: {}", half, s.coeff(half));
        }
    }

    #[test]
    fn regularized_inverse_starts_at_one() {
        let ctx = SeriesCtx::new(9);
        let t = quotient_taylor(&ctx, Quotient::RegularizedInverse, c(0.0, 0.0), 4).unwrap();
        assert!(t.coeff(0).approx_eq(&QSeries::constant(c(1.0, 0.0)).truncated(9), 1e-14));
        assert!(t.coeff(1).is_zero());
    }

    #[test]
    fn inverse_at_lattice_point_is_a_pole() {
        let ctx = NumericCtx::new(c(0.2, 1.1)).unwrap();
        let err = quotient_taylor(&ctx, Quotient::Inverse, c(1.2, 1.1), 2).unwrap_err();
        assert!(matches!(err, Error::Pole(msg) if msg.contains("1 + 1")));
    }

    #[test]
    fn series_and_numeric_contexts_agree() {
        let tau = c(0.17, 1.3);
        let center = c(0.21, 0.0);
        let sctx = SeriesCtx::new(40);
        let nctx = NumericCtx::new(tau).unwrap();
        let sqrt_q = (i_unit() * PI * tau).exp();
        for kind in [Quotient::Inverse, Quotient::Ratio(ThetaKind::Theta1), Quotient::Ratio(ThetaKind::Theta3)] {
            let s = quotient_taylor(&sctx, kind, center, 3).unwrap();
            let n = quotient_taylor(&nctx, kind, center, 3).unwrap();
            for k in 0..=3 {
                let sv = s.coeff(k).eval_at_sqrt_q(sqrt_q);
                assert!((sv - n.coeff(k)).norm() < 1e-10 * n.coeff(k).norm().max(1.0));
            }
        }
    }

    #[test]
    fn taylor_matches_finite_differences() {
        let tau = c(-0.2, 0.8);
        let ctx = NumericCtx::new(tau).unwrap();
        let v0 = c(0.23, 0.04);
        let h = 1e-3;
        for kind in ThetaKind::ALL {
            let jet = theta_taylor(&ctx, kind, v0, 4).unwrap().at(tau);
            let f = |x: Complex64| theta_eval_tol(kind, x, tau, 1e-16).unwrap();
            let (p1, m1, p2, m2) = (f(v0 + h), f(v0 - h), f(v0 + 2.0 * h), f(v0 - 2.0 * h));
            let d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
            let d2 = (-p2 + 16.0 * p1 - 30.0 * f(v0) + 16.0 * m1 - m2) / (12.0 * h * h);
            assert!((jet.coeff(0) - f(v0)).norm() < 1e-12 * f(v0).norm().max(1.0));
            assert!((jet.coeff(1) - d1).norm() < 1e-6 * d1.norm().max(1.0), "{:?} {} {}", kind, jet.coeff(1), d1);
            assert!((jet.coeff(2) * 2.0 - d2).norm() < 1e-5 * d2.norm().max(1.0));
        }
    }

    #[test]
    fn logderiv_of_theta3_against_finite_difference() {
        let tau = c(0.1, 0.7);
        let ctx = NumericCtx::new(tau).unwrap();
        let ld = theta_logderiv(&ctx, ThetaKind::Theta3, 3).unwrap();
        assert!(ld.coeff(0).norm() < 1e-14);
        let h = 1e-4;
        let f = |x: f64| theta_eval_tol(ThetaKind::Theta3, c(x, 0.0), tau, 1e-16).unwrap();
        // θ₃'/θ₃(v) ≈ b₁ v near 0, so b₁ ≈ (θ₃'/θ₃)(h)/h.
        let deriv = (f(2.0 * h) - f(0.0)) / (2.0 * h) ;
        let fd = deriv / f(h) / h;
        assert!((ld.coeff(1) - fd).norm() < 1e-6 * fd.norm().max(1.0), "{} vs {}", ld.coeff(1), fd);
    }
}

//! Odd Chern character and Chern-Simons transgression.
//!
//! For `g: M -> GL(N)` the odd classes are
//! `c_n = (1/2πi)^{(n+1)/2} tr[(g⁻¹dg)^n]` and the odd Chern character is
//! `Σ_n n!/(2n+1)! c_{2n+1}`. The transgressed Chern character of the
//! bundles `Q_j(E)_v` is a single-trace expression, so its degree-`d` part is
//! a scalar q-series `λ_{j,d}` times `c_d`; [`transgression_coeffs`] computes
//! these exactly.

pub mod quadrature;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::series::ring::{self, binomial, factorial};
use crate::series::{GeneratorTable, GradedElement, QSeries, Taylor};
use crate::theta::{quotient_log_taylor, EvalContext, Quotient, ThetaKind};
use crate::witten_bundles::{q_bundle_qexp, Atom, KElement, RankTable, E};

pub use quadrature::{degree_c3, winding_c1, DegreeResult, LoopMap, WindingResult};

/// Whether the odd Chern character starts at `c₁` (`n = 0`) or at `c₃`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OddChConvention {
    #[default]
    FromDegreeOne,
    FromDegreeThree,
}

/// `n!/(2n+1)!`, the weight of `c_{2n+1}` in the odd Chern character.
pub fn odd_ch_weight(d: u32) -> BigRational {
    assert!(d % 2 == 1, "odd Chern classes have odd degree");
    let n = (d - 1) / 2;
    BigRational::new(factorial(n), factorial(d))
}

/// `∫₀¹ (u² - u)^m du = (-1)^m m!² / (2m+1)!`.
pub fn beta_moment(m: u32) -> BigRational {
    let f = factorial(m);
    let v = BigRational::new(&f * &f, factorial(2 * m + 1));
    if m % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Odd classes `c_d` keyed by degree; values are elements of the graded
/// algebra (formal generators, or scalars after pairing).
pub type OddClassVector<R> = BTreeMap<u32, GradedElement<R>>;

/// `Σ_n n!/(2n+1)! c_{2n+1}`.
pub fn odd_ch_form<R: ring::QAlgebra>(
    c: &OddClassVector<R>,
    table: &Arc<GeneratorTable>,
    cap: u32,
    convention: OddChConvention,
) -> Result<GradedElement<R>> {
    let mut acc = GradedElement::zero(table, cap);
    for (&d, class) in c {
        if d % 2 == 0 {
            return Err(Error::Domain(format!("even-degree entry c_{} in an odd class vector", d)));
        }
        if d == 1 && convention == OddChConvention::FromDegreeThree {
            continue;
        }
        acc = acc.add(&class.scale(&R::from_rational(&odd_ch_weight(d))));
    }
    Ok(acc)
}

/// `λ_{j,d}` for odd `d <= degree_cap`: the coefficient of `c_d` in the
/// transgressed Chern character of `Q_j(E)_v`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransgressionTable {
    pub j: usize,
    pub rank_n: Option<i64>,
    pub trunc: i64,
    pub entries: BTreeMap<u32, QSeries<BigRational>>,
}

impl TransgressionTable {
    pub fn get(&self, d: u32) -> QSeries<BigRational> {
        self.entries.get(&d).cloned().unwrap_or_else(|| QSeries::zero_to(self.trunc))
    }
}

/// Exact coefficients `ℓ_k` of `log(θ_j(v)/θ_j(0)) = Σ ℓ_k X^k`, `X = 2πiv`,
/// for `k <= max_k`.
pub fn log_theta_coeffs(j: usize, max_k: usize, trunc: i64) -> Result<Vec<QSeries<BigRational>>> {
    let mut out = vec![QSeries::zero_to(trunc); max_k + 1];
    let (step_n, offset, alternating) = match j {
        1 => (2i64, 0i64, true),
        2 => (2, 1, false),
        3 => (2, 1, true),
        _ => return Err(Error::Domain(format!("theta index j must be 1, 2 or 3, got {}", j))),
    };
    // Product part: -2 Σ_{n,r} s^r q^{(n - δ/2) r} r^{k-1}/k!, where the
    // sign s is -1 for the (1 + ...) factors.
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        if k % 2 == 1 {
            continue;
        }
        let kf = BigRational::from_integer(factorial(k as u32));
        let mut terms = Vec::new();
        let mut n = 1i64;
        while step_n * n - offset < trunc {
            let base = step_n * n - offset;
            let mut r = 1i64;
            while base * r < trunc {
                let sign = if alternating && r % 2 == 1 { -1 } else { 1 };
                let val = BigRational::from_integer(BigInt::from(r).pow((k - 1) as u32)) * BigInt::from(-2 * sign) / &kf;
                terms.push((base * r, val));
                r += 1;
            }
            n += 1;
        }
        *slot = QSeries::from_terms(terms, Some(trunc));
    }
    if j == 1 {
        let lc = log_cosh_half(max_k);
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            *slot = slot.add(&QSeries::constant(lc.coeff(k)).truncated(trunc));
        }
    }
    Ok(out)
}

/// Taylor coefficients of `log cosh(x/2)` through `x^max_k`.
fn log_cosh_half(max_k: usize) -> Taylor<BigRational> {
    let mut ch = vec![BigRational::zero(); max_k + 1];
    let mut m = 0;
    while 2 * m <= max_k {
        ch[2 * m] = BigRational::new(BigInt::one(), BigInt::from(4).pow(m as u32) * factorial(2 * m as u32));
        m += 1;
    }
    Taylor::from_coeffs(ch).ln_unipotent()
}

/// `λ_{j,2k+1} = (-1)^k (k+1) ℓ_{k+1} B_k / 2`, times `2^{N/2}` for `j = 1`.
fn lambda_from_log(k: u32, ell: &QSeries<BigRational>) -> QSeries<BigRational> {
    let sign = if k % 2 == 1 { -1 } else { 1 };
    let f = beta_moment(k) * BigRational::from_integer(BigInt::from(sign * (k as i64 + 1))) / BigInt::from(2);
    ell.scale(&f)
}

fn spinor_rank(j: usize, rank_n: Option<i64>) -> Result<BigRational> {
    if j != 1 {
        return Ok(BigRational::one());
    }
    let n = rank_n.ok_or_else(|| Error::Domain("j = 1 needs the rank N of E".into()))?;
    if n < 2 || n % 2 != 0 {
        return Err(Error::Domain(format!("rank N must be even and >= 2, got {}", n)));
    }
    Ok(BigRational::from_integer(BigInt::one() << (n / 2) as usize))
}

/// Exact transgression table. Entries with `d ≡ 1 (mod 4)` come out
/// identically zero because `θ_j'/θ_j` is odd.
pub fn transgression_coeffs(j: usize, degree_cap: u32, trunc: i64, rank_n: Option<i64>) -> Result<TransgressionTable> {
    let pre = spinor_rank(j, rank_n)?;
    let max_k = ((degree_cap.max(1) - 1) / 2) as usize;
    let logs = log_theta_coeffs(j, max_k + 1, trunc)?;
    let mut entries = BTreeMap::new();
    for k in 0..=max_k as u32 {
        let lam = lambda_from_log(k, &logs[k as usize + 1]).scale(&pre);
        entries.insert(2 * k + 1, lam);
    }
    Ok(TransgressionTable { j, rank_n, trunc, entries })
}

/// `λ_{j,d}` evaluated in an arbitrary context from the log-expansion of the
/// theta quotient (independent of the closed-form divisor sums).
pub fn transgression_in_ctx<C: EvalContext>(ctx: &C, j: usize, d: u32, rank_n: Option<i64>) -> Result<C::S> {
    if d.is_multiple_of(2) {
        return Err(Error::Domain("transgression degrees are odd".into()));
    }
    let kind = ThetaKind::from_index(j)?;
    if kind == ThetaKind::Theta {
        return Err(Error::Domain("j must be 1, 2 or 3".into()));
    }
    let k = (d - 1) / 2;
    let log = quotient_log_taylor(ctx, Quotient::Ratio(kind), Complex64::new(0.0, 0.0), k as usize + 1)?;
    let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    let ell = ring::Ring::mul(&log.coeff(k as usize + 1), &ctx.lift(two_pi_i.powi(-(k as i32 + 1))));
    let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
    let f = ring::rational_to_f64(&beta_moment(k)) * sign * (k as f64 + 1.0) / 2.0;
    let pre = ring::rational_to_f64(&spinor_rank(j, rank_n)?);
    Ok(ring::Ring::mul(&ell, &ctx.lift(Complex64::new(f * pre, 0.0))))
}

/// Transgressed Chern character `Σ_d λ_{j,d} c_d` in a context, with `c_d`
/// the generators listed in `classes` (degree -> generator index).
pub fn ch_q_bundle<C: EvalContext>(
    ctx: &C,
    j: usize,
    rank_n: i64,
    classes: &BTreeMap<u32, usize>,
    table: &Arc<GeneratorTable>,
    cap: u32,
) -> Result<GradedElement<C::S>> {
    let mut acc = GradedElement::zero(table, cap);
    for (&d, &gen) in classes {
        if d > cap {
            continue;
        }
        let lam = transgression_in_ctx(ctx, j, d, Some(rank_n))?;
        acc = acc.add(&GradedElement::generator_at(table, cap, gen).scale(&lam));
    }
    Ok(acc)
}

/// Polynomial in `t` with rational coefficients, `coeffs[m]` at `t^m`.
pub type TPoly = Vec<BigRational>;

fn poly_mul(a: &TPoly, b: &TPoly) -> TPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn one_plus_t_pow(e: usize) -> TPoly {
    (0..=e).map(|m| BigRational::from_integer(binomial(e as i64, m as i64))).collect()
}

/// `𝒫(t)` with `c_d(Λ_t V) = 𝒫(t) c_d(V)` for `rank V = dim_v`.
///
/// With `d = 2k+1`, `𝒫(t) = k! (1+t)^{dim_v} [X^k] (t e^X / (1 + t e^X))`,
/// which is a polynomial exactly when `k < dim_v`.
pub fn lambda_transgression_poly(degree: u32, dim_v: i64) -> Result<TPoly> {
    if degree.is_multiple_of(2) {
        return Err(Error::Domain("degree must be odd".into()));
    }
    if dim_v < 1 {
        return Err(Error::Domain("dim V must be positive".into()));
    }
    let k = ((degree - 1) / 2) as usize;
    if k as i64 >= dim_v {
        return Err(Error::Domain(format!(
            "c_{} of Λ_t V is not polynomial in t for dim V = {} (needs dim V > {})",
            degree, dim_v, k
        )));
    }
    // f_k (1+t)^{k+1} = Σ_r (-1)^r t^{r+1} (1+t)^{k-r} [X^k] e^X (e^X - 1)^r
    let mut acc: TPoly = vec![BigRational::zero(); k + 2];
    for r in 0..=k {
        // [X^k] e^X (e^X-1)^r = Σ_i (-1)^{r-i} C(r,i) (i+1)^k / k!
        let mut c = BigRational::zero();
        for i in 0..=r {
            let sign = if (r - i) % 2 == 1 { -1 } else { 1 };
            c += BigRational::from_integer(binomial(r as i64, i as i64) * BigInt::from(sign) * BigInt::from(i + 1).pow(k as u32));
        }
        c /= BigRational::from_integer(factorial(k as u32));
        if (r % 2) == 1 {
            c = -c;
        }
        let mut term = vec![BigRational::zero(); r + 2];
        term[r + 1] = c;
        let term = poly_mul(&term, &one_plus_t_pow(k - r));
        for (i, x) in term.into_iter().enumerate() {
            acc[i] += x;
        }
    }
    let p = poly_mul(&acc, &one_plus_t_pow(dim_v as usize - k - 1));
    let kf = BigRational::from_integer(factorial(k as u32));
    let mut out: TPoly = p.into_iter().map(|x| x * &kf).collect();
    while out.len() > 1 && out.last().map(|x| x.is_zero()).unwrap_or(false) {
        out.pop();
    }
    Ok(out)
}

/// The `t^m` coefficient of [`lambda_transgression_poly`]: the multiple
/// `c_d(Λ^m V) / c_d(V)`.
pub fn lambda_power_multiple(m: i64, dim_v: i64, degree: u32) -> Result<BigRational> {
    if m < 0 || m > dim_v {
        return Err(Error::Domain(format!("m must be in 0..={}, got {}", dim_v, m)));
    }
    let p = lambda_transgression_poly(degree, dim_v)?;
    Ok(p.get(m as usize).cloned().unwrap_or_else(BigRational::zero))
}

/// `Σ_i (∏_{j != i} rank_j) ch_i`, the odd Chern character of a tensor product.
pub fn tensor_odd_ch<R: ring::Ring>(factors: &[(i64, GradedElement<R>)]) -> Result<GradedElement<R>> {
    let (_, first) = factors.first().ok_or_else(|| Error::Domain("empty tensor product".into()))?;
    let mut acc = GradedElement::zero(first.table(), first.cap());
    for (i, (_, ch)) in factors.iter().enumerate() {
        let others: i64 = factors.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, (r, _))| *r).product();
        acc = acc.add(&ch.scale(&R::from_int(others)));
    }
    Ok(acc)
}

/// Multiple `c_d(W)/c_d(E)` for a K-theory atom built from an `SO(N)` bundle
/// `E`: the linear part of the Chern character of `W` in the primitive class
/// of `E`.
fn atom_multiple(atom: &Atom, d: u32, n: i64) -> Result<BigRational> {
    match atom {
        Atom::Lambda(_, m) => lambda_power_multiple(*m as i64, n, d),
        Atom::Spinor(_) => {
            // Modulo decomposables ch(Δ) = 2^{N/2} (1 + Σ_i log cosh(z_i/2)),
            // against ch(E) = Σ_i 2 cosh z_i.
            if d % 4 != 3 {
                return Ok(BigRational::zero());
            }
            let k = d.div_ceil(2) as usize;
            let lc = log_cosh_half(k).coeff(k);
            let pre = BigRational::from_integer(BigInt::one() << (n / 2) as usize);
            Ok(pre * lc * BigRational::from_integer(factorial(k as u32)) / BigInt::from(2))
        }
        _ => Err(Error::Domain(format!("no odd Chern multiple for {}", atom))),
    }
}

/// Odd Chern character coefficient of `c_d` for a K-element built from `E`
/// (the derivation rule of the tensor formula, applied monomial by monomial).
pub fn k_element_odd_multiple(k: &KElement, d: u32, n: i64) -> Result<BigRational> {
    let ranks = RankTable::new(&[(E, n)]);
    let mut total = BigRational::zero();
    for (mono, coeff) in k.terms() {
        for (i, (atom, mult)) in mono.iter().enumerate() {
            let mut part = atom_multiple(atom, d, n)? * BigInt::from(*mult);
            let ra = KElement::atom(atom.clone()).rank(&ranks)?;
            part *= BigRational::from_integer(ra.pow(mult - 1));
            for (k2, (other, m2)) in mono.iter().enumerate() {
                if k2 != i {
                    part *= BigRational::from_integer(KElement::atom(other.clone()).rank(&ranks)?.pow(*m2));
                }
            }
            total += part * BigInt::from(*coeff);
        }
    }
    Ok(total * odd_ch_weight(d))
}

/// `λ_{j,d}` computed independently through K-theory: expand `Q_j(E)_v` and
/// apply the Λ-power and spinor multiples coefficient by coefficient.
pub fn transgression_via_k_theory(j: usize, d: u32, n: i64, trunc: i64) -> Result<QSeries<BigRational>> {
    let q = q_bundle_qexp(j, n, trunc, true)?;
    q.try_map(|k| k_element_odd_multiple(k, d, n))
}

/// Exact rational check used by tests and the CLI: `λ` entries as `f64`.
pub fn table_to_complex(t: &TransgressionTable) -> BTreeMap<u32, QSeries<Complex64>> {
    t.entries.iter().map(|(d, s)| (*d, s.to_complex())).collect()
}

/// `|x|` of a rational as `f64`, for reporting.
pub fn rational_abs_f64(x: &BigRational) -> f64 {
    x.abs().to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ring::rat;
    use crate::series::Generator;
    use crate::theta::{theta_eval_tol, NumericCtx, SeriesCtx};

    #[test]
    fn weights_and_moments() {
        assert_eq!(odd_ch_weight(3), rat(1, 6));
        assert_eq!(odd_ch_weight(7), rat(6, 5040));
        assert_eq!(beta_moment(1), rat(-1, 6));
        assert_eq!(beta_moment(2), rat(1, 30));
    }

    #[test]
    fn odd_ch_form_examples() {
        let t = GeneratorTable::new(vec![Generator::new("c3", 3), Generator::new("c7", 7)]).unwrap();
        let mut c = OddClassVector::<BigRational>::new();
        c.insert(3, GradedElement::generator(&t, 7, "c3").unwrap());
        c.insert(7, GradedElement::generator(&t, 7, "c7").unwrap());
        let f = odd_ch_form(&c, &t, 7, OddChConvention::FromDegreeOne).unwrap();
        assert_eq!(f.coeff(&t.parse_monomial("c3").unwrap()), rat(1, 6));
        assert_eq!(f.coeff(&t.parse_monomial("c7").unwrap()), rat(6, 5040));
        c.insert(4, GradedElement::zero(&t, 7));
        assert!(odd_ch_form(&c, &t, 7, OddChConvention::FromDegreeOne).is_err());
    }

    #[test]
    fn degree_one_mod_four_entries_vanish() {
        for j in 1..=3 {
            let t = transgression_coeffs(j, 11, 9, Some(8)).unwrap();
            for d in [1, 5, 9] {
                assert!(t.get(d).is_zero(), "j={} d={}", j, d);
            }
            assert!(!t.get(3).is_zero());
            assert!(!t.get(7).is_zero());
        }
    }

    #[test]
    fn exact_table_matches_k_theory_route() {
        for j in 1..=3 {
            for &n in &[8i64, 10] {
                let t = transgression_coeffs(j, 7, 7, Some(n)).unwrap();
                for d in [3u32, 7] {
                    let k = transgression_via_k_theory(j, d, n, 7).unwrap();
                    assert_eq!(t.get(d), k, "j={} N={} d={}", j, n, d);
                }
            }
        }
    }

    #[test]
    fn exact_table_matches_log_expansion() {
        let ctx = SeriesCtx::new(9);
        for j in 1..=3 {
            let t = transgression_coeffs(j, 11, 9, Some(8)).unwrap();
            for d in [3u32, 7, 11] {
                let s = transgression_in_ctx(&ctx, j, d, Some(8)).unwrap();
                assert!(s.approx_eq(&t.get(d).to_complex(), 1e-10), "j={} d={}", j, d);
            }
        }
    }

    /// Gauss-Legendre nodes on [0, 1].
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            out.push(((x + 1.0) / 2.0, w / 2.0));
        }
        out
    }

    #[test]
    fn degree_three_entry_against_u_quadrature() {
        // λ₃ = (1/2)∫₀¹ β₁(u) du, β₁(u) the s-coefficient of θ₂'/θ₂((u²-u)s/4π²),
        // read off numerically from theta_eval.
        let tau = Complex64::new(0.05, 1.1);
        let pi = std::f64::consts::PI;
        let logderiv = |v: f64| {
            let h = 1e-3;
            let f = |x: f64| theta_eval_tol(ThetaKind::Theta2, Complex64::new(x, 0.0), tau, 1e-18).unwrap();
            let d = (-f(v + 2.0 * h) + 8.0 * f(v + h) - 8.0 * f(v - h) + f(v - 2.0 * h)) / (12.0 * h);
            d / f(v)
        };
        let mut integral = Complex64::new(0.0, 0.0);
        for (u, w) in gauss_legendre(64) {
            let scale = (u * u - u) / (4.0 * pi * pi);
            // coefficient of s: f(s)/s for small s (f is odd in s)
            let s = 1e-3;
            let beta = (logderiv(scale * s) - logderiv(-scale * s)) / (2.0 * s);
            integral += beta * w;
        }
        let oracle = integral * 0.5;
        let exact = transgression_coeffs(2, 3, 13, None).unwrap().get(3).to_complex();
        let sqrt_q = (Complex64::new(0.0, pi) * tau).exp();
        let val = exact.eval_at_sqrt_q(sqrt_q);
        assert!((val - oracle).norm() < 1e-6 * val.norm(), "{} vs {}", val, oracle);
        let ctx = NumericCtx::new(tau).unwrap();
        let num = transgression_in_ctx(&ctx, 2, 3, None).unwrap();
        assert!((num - val).norm() < 1e-12 * val.norm().max(1.0));
    }

    #[test]
    fn lambda_poly_examples() {
        // degree 1: t(1+t)^{N-1}
        for n in 1..6 {
            let p = lambda_transgression_poly(1, n).unwrap();
            assert_eq!(p[0], rat(0, 1));
            assert_eq!(lambda_power_multiple(n, n, 1).unwrap(), rat(1, 1));
            assert_eq!(lambda_power_multiple(1, n, 1).unwrap(), rat(1, 1));
        }
        // degree 3: t(1+t)^{N-2}
        assert_eq!(lambda_transgression_poly(3, 3).unwrap(), vec![rat(0, 1), rat(1, 1), rat(1, 1)]);
        assert_eq!(lambda_power_multiple(1, 6, 7).unwrap(), rat(1, 1));
        assert!(lambda_transgression_poly(7, 3).is_err());
        assert!(lambda_power_multiple(5, 4, 1).is_err());
    }

    #[test]
    fn tensor_formula_examples() {
        let t = GeneratorTable::new(vec![Generator::new("a", 3), Generator::new("b", 3)]).unwrap();
        let a = GradedElement::<BigRational>::generator(&t, 3, "a").unwrap();
        let b = GradedElement::<BigRational>::generator(&t, 3, "b").unwrap();
        let out = tensor_odd_ch(&[(2, a.clone()), (3, b.clone())]).unwrap();
        assert_eq!(out.coeff(&t.parse_monomial("a").unwrap()), rat(3, 1));
        assert_eq!(out.coeff(&t.parse_monomial("b").unwrap()), rat(2, 1));
        assert!(tensor_odd_ch(&[(4, a.clone())]).unwrap().approx_eq(&a, 0.0));
        let z = GradedElement::zero(&t, 3);
        assert!(tensor_odd_ch(&[(5, z), (2, a.clone())]).unwrap().approx_eq(&a.scale(&rat(5, 1)), 0.0));
        assert!(tensor_odd_ch::<BigRational>(&[]).is_err());
    }

    #[test]
    fn spinor_multiple_rank_four() {
        // Weights (±z₁ ± z₂)/2: Σ w⁴ = (p₄ + 3(p₂² - p₄))/4 ≡ -p₄/2 against 2p₄.
        let m = atom_multiple(&Atom::Spinor(E.into()), 7, 4).unwrap();
        assert_eq!(m, rat(-1, 4));
        // Σ w² = p₂ against 2p₂.
        assert_eq!(atom_multiple(&Atom::Spinor(E.into()), 3, 4).unwrap(), rat(1, 2));
    }
}

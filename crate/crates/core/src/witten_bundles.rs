//! Formal K-theory q-series: `Λ_t`, `S_t`, the Witten bundles `Θ_j(TM|V)`
//! and the bundles `Q_j(E)`, symbolically and through Chern roots.
//!
//! Symbols are kept in a fixed normal form: integer combinations of tensor
//! monomials in `Λ^i B`, `S^i B`, `Δ(B)` and `Δ₊(B) - Δ₋(B)` for named base
//! bundles `B`. Equality of [`KElement`]s is exact and canonical; the
//! splitting principle enters only through [`KElement::character`].

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::series::ring::{binomial, Ring};
use crate::series::taylor::exp_linear;
use crate::series::{GeneratorTable, GradedElement, QSeries};
use crate::theta::{quotient_taylor, EvalContext, Quotient, ThetaKind};

/// Tangent bundle `T_ℂM`.
pub const TM: &str = "T";
/// Auxiliary real bundle `V_ℂ`.
pub const V: &str = "V";
/// Trivial real bundle `E_ℂ` carrying the action of `g`.
pub const E: &str = "E";

/// Largest supported q-truncation (half-units) for symbolic expansions.
pub const MAX_SYMBOLIC_TRUNC: i64 = 13;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// `Λ^i B` for `i >= 1` (`Λ^1 B = B`).
    Lambda(String, u32),
    /// `S^i B` for `i >= 2`.
    Sym(String, u32),
    /// Spinor bundle `Δ(B)`.
    Spinor(String),
    /// `Δ₊(B) - Δ₋(B)` as a single symbol.
    SpinorDiff(String),
}

impl Atom {
    pub fn base(name: &str) -> Atom {
        Atom::Lambda(name.to_string(), 1)
    }

    fn bundle(&self) -> &str {
        match self {
            Atom::Lambda(b, _) | Atom::Sym(b, _) | Atom::Spinor(b) | Atom::SpinorDiff(b) => b,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Lambda(b, 1) => write!(f, "{}", b),
            Atom::Lambda(b, i) => write!(f, "Λ^{}{}", i, b),
            Atom::Sym(b, i) => write!(f, "S^{}{}", i, b),
            Atom::Spinor(b) => write!(f, "Δ{}", b),
            Atom::SpinorDiff(b) => write!(f, "(Δ+{}-Δ-{})", b, b),
        }
    }
}

/// Tensor monomial: atoms with multiplicities, sorted.
pub type KMonomial = Vec<(Atom, u32)>;

fn mono_mul(a: &KMonomial, b: &KMonomial) -> KMonomial {
    let mut m: BTreeMap<Atom, u32> = a.iter().cloned().collect();
    for (atom, k) in b {
        *m.entry(atom.clone()).or_insert(0) += k;
    }
    m.into_iter().collect()
}

/// Integer combination of tensor monomials; the empty monomial is `ℂ`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct KElement {
    terms: BTreeMap<KMonomial, i64>,
}

impl KElement {
    pub fn trivial(k: i64) -> Self {
        let mut e = KElement::default();
        e.push(Vec::new(), k);
        e
    }

    pub fn atom(a: Atom) -> Self {
        let mut e = KElement::default();
        e.push(vec![(a, 1)], 1);
        e
    }

    pub fn base(name: &str) -> Self {
        Self::atom(Atom::base(name))
    }

    /// `Λ^i B` with `Λ^0 = ℂ`.
    pub fn lambda(name: &str, i: u32) -> Self {
        if i == 0 {
            Self::trivial(1)
        } else {
            Self::atom(Atom::Lambda(name.to_string(), i))
        }
    }

    /// `S^i B` with `S^0 = ℂ`, `S^1 = B`.
    pub fn sym(name: &str, i: u32) -> Self {
        match i {
            0 => Self::trivial(1),
            1 => Self::base(name),
            _ => Self::atom(Atom::Sym(name.to_string(), i)),
        }
    }

    fn push(&mut self, m: KMonomial, k: i64) {
        if k == 0 {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert(0);
        *e += k;
        if *e == 0 {
            self.terms.remove(&m);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&KMonomial, &i64)> {
        self.terms.iter()
    }

    /// Virtual rank given base-bundle ranks.
    pub fn rank(&self, ranks: &RankTable) -> Result<BigInt> {
        let mut total = BigInt::zero();
        for (m, k) in &self.terms {
            let mut r = BigInt::from(*k);
            for (atom, mult) in m {
                let ra = ranks.atom_rank(atom)?;
                for _ in 0..*mult {
                    r *= &ra;
                }
            }
            total += r;
        }
        Ok(total)
    }

    /// Trace of a torus element acting with eigenvalues `roots[B]` on each base
    /// bundle `B` (splitting principle): `Λ^i ↦ e_i`, `S^i ↦ h_i`.
    pub fn character(&self, roots: &BTreeMap<String, Vec<BigInt>>) -> Result<BigInt> {
        let mut total = BigInt::zero();
        for (m, k) in &self.terms {
            let mut v = BigInt::from(*k);
            for (atom, mult) in m {
                let z = roots
                    .get(atom.bundle())
                    .ok_or_else(|| Error::Domain(format!("no eigenvalues for bundle {}", atom.bundle())))?;
                let a = match atom {
                    Atom::Lambda(_, i) => symmetric_poly(z, *i as usize, false),
                    Atom::Sym(_, i) => symmetric_poly(z, *i as usize, true),
                    _ => return Err(Error::Domain(format!("no integral character for {}", atom))),
                };
                for _ in 0..*mult {
                    v *= &a;
                }
            }
            total += v;
        }
        Ok(total)
    }

    /// `W̃ = W - ℂ^{rank W}`.
    pub fn reduced(&self, ranks: &RankTable) -> Result<Self> {
        let r = self.rank(ranks)?;
        let r = r.to_i64().ok_or_else(|| Error::Domain("rank too large".into()))?;
        Ok(self.sub(&KElement::trivial(r)))
    }

    /// Coefficients `(base bundle, multiplicity)` plus the trivial part, if the
    /// element is linear in base bundles.
    fn linear_parts(&self) -> Option<(i64, Vec<(String, i64)>)> {
        let mut trivial = 0;
        let mut out = Vec::new();
        for (m, k) in &self.terms {
            match m.as_slice() {
                [] => trivial += k,
                [(Atom::Lambda(b, 1), 1)] => out.push((b.clone(), *k)),
                _ => return None,
            }
        }
        Some((trivial, out))
    }
}

impl Ring for KElement {
    fn zero() -> Self {
        KElement::default()
    }
    fn one() -> Self {
        KElement::trivial(1)
    }
    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, k) in &other.terms {
            out.push(m.clone(), *k);
        }
        out
    }
    fn mul(&self, other: &Self) -> Self {
        let mut out = KElement::default();
        for (m1, k1) in &self.terms {
            for (m2, k2) in &other.terms {
                out.push(mono_mul(m1, m2), k1 * k2);
            }
        }
        out
    }
    fn neg(&self) -> Self {
        KElement { terms: self.terms.iter().map(|(m, k)| (m.clone(), -k)).collect() }
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn from_int(n: i64) -> Self {
        KElement::trivial(n)
    }
    fn try_inv(&self) -> Option<Self> {
        match self.terms.iter().next() {
            Some((m, &k)) if self.terms.len() == 1 && m.is_empty() && (k == 1 || k == -1) => Some(self.clone()),
            _ => None,
        }
    }
    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

impl fmt::Display for KElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, k) in &self.terms {
            let body = if m.is_empty() {
                "C".to_string()
            } else {
                m.iter()
                    .map(|(a, e)| if *e == 1 { a.to_string() } else { format!("({})^{}", a, e) })
                    .collect::<Vec<_>>()
                    .join("⊗")
            };
            let sign = if *k < 0 { "-" } else if first { "" } else { "+" };
            let mag = k.abs();
            if mag == 1 {
                write!(f, "{}{}", sign, body)?;
            } else {
                write!(f, "{}{}{}", sign, mag, body)?;
            }
            first = false;
        }
        Ok(())
    }
}

/// Ranks of base bundles.
#[derive(Clone, Debug, Default)]
pub struct RankTable {
    ranks: HashMap<String, i64>,
}

impl RankTable {
    pub fn new(entries: &[(&str, i64)]) -> Self {
        RankTable { ranks: entries.iter().map(|(n, r)| (n.to_string(), *r)).collect() }
    }

    pub fn get(&self, name: &str) -> Result<i64> {
        self.ranks.get(name).copied().ok_or_else(|| Error::Data(format!("no rank for bundle {}", name)))
    }

    fn atom_rank(&self, atom: &Atom) -> Result<BigInt> {
        let r = self.get(atom.bundle())?;
        Ok(match atom {
            Atom::Lambda(_, i) => binomial(r, *i as i64),
            Atom::Sym(_, i) => binomial(r + *i as i64 - 1, *i as i64),
            Atom::Spinor(_) => BigInt::one() << (r / 2) as usize,
            Atom::SpinorDiff(_) => BigInt::zero(),
        })
    }
}

/// Elementary (`complete = false`) or complete homogeneous symmetric
/// polynomial of degree `i` in `z`, by the one-variable-at-a-time recursion.
fn symmetric_poly(z: &[BigInt], i: usize, complete: bool) -> BigInt {
    let mut e = vec![BigInt::zero(); i + 1];
    e[0] = BigInt::one();
    for x in z {
        if complete {
            for k in 1..=i {
                let prev = e[k - 1].clone();
                e[k] += prev * x;
            }
        } else {
            for k in (1..=i).rev() {
                let prev = e[k - 1].clone();
                e[k] += prev * x;
            }
        }
    }
    e[i].clone()
}

/// A power series in `t` with ring coefficients, `coeffs[i]` at `t^i`.
pub type TSeries<R> = Vec<R>;

fn tseries_mul<R: Ring>(a: &TSeries<R>, b: &TSeries<R>) -> TSeries<R> {
    let n = a.len().min(b.len());
    let mut out = vec![R::zero(); n];
    for i in 0..n {
        for j in 0..n - i {
            out[i + j] = out[i + j].add(&a[i].mul(&b[j]));
        }
    }
    out
}

fn graded_tseries_mul(
    a: &TSeries<GradedElement<Complex64>>,
    b: &TSeries<GradedElement<Complex64>>,
) -> TSeries<GradedElement<Complex64>> {
    let n = a.len().min(b.len());
    let mut out: Vec<GradedElement<Complex64>> = (0..n).map(|_| a[0].scale(&Complex64::new(0.0, 0.0))).collect();
    for i in 0..n {
        for j in 0..n - i {
            out[i + j] = out[i + j].add(&a[i].mul(&b[j]));
        }
    }
    out
}

fn tseries_inv<R: Ring>(a: &TSeries<R>) -> Result<TSeries<R>> {
    let c0 = a[0].try_inv().ok_or_else(|| Error::Singular("t-series constant term is not a unit".into()))?;
    let n = a.len();
    let mut w = vec![R::zero(); n];
    for k in 0..n {
        let mut acc = if k == 0 { R::one() } else { R::zero() };
        for i in 1..=k {
            acc = acc.sub(&a[i].mul(&w[k - i]));
        }
        w[k] = acc.mul(&c0);
    }
    Ok(w)
}

fn tseries_pow<R: Ring>(a: &TSeries<R>, e: i64) -> Result<TSeries<R>> {
    let n = a.len();
    let mut one = vec![R::zero(); n];
    one[0] = R::one();
    let base = if e < 0 { tseries_inv(a)? } else { a.clone() };
    let mut acc = one;
    for _ in 0..e.unsigned_abs() {
        acc = tseries_mul(&acc, &base);
    }
    Ok(acc)
}

#[derive(Clone, Copy)]
enum Generating {
    Lambda,
    Sym,
}

fn generating_series(w: &KElement, t_trunc: usize, kind: Generating) -> Result<TSeries<KElement>> {
    let (trivial, parts) = w
        .linear_parts()
        .ok_or_else(|| Error::Domain(format!("Λ_t/S_t of {} has no normal form (composite symbols)", w)))?;
    let n = t_trunc + 1;
    // Λ_t(ℂ) = 1 + t, S_t(ℂ) = 1/(1 - t).
    let mut unit = vec![KElement::zero(); n];
    unit[0] = KElement::one();
    if n > 1 {
        unit[1] = KElement::trivial(match kind {
            Generating::Lambda => 1,
            Generating::Sym => -1,
        });
    }
    let trivial_part = match kind {
        Generating::Lambda => tseries_pow(&unit, trivial)?,
        Generating::Sym => tseries_pow(&unit, -trivial)?,
    };
    let mut acc = trivial_part;
    for (b, k) in parts {
        let s: TSeries<KElement> = (0..n as u32)
            .map(|i| match kind {
                Generating::Lambda => KElement::lambda(&b, i),
                Generating::Sym => KElement::sym(&b, i),
            })
            .collect();
        acc = tseries_mul(&acc, &tseries_pow(&s, k)?);
    }
    Ok(acc)
}

/// `Λ_t(W) = Σ t^i Λ^i W` through `t^{t_trunc}`, multiplicative over sums.
pub fn lambda_series(w: &KElement, t_trunc: i64) -> Result<TSeries<KElement>> {
    if t_trunc < 0 {
        return Err(Error::Domain("negative t truncation".into()));
    }
    generating_series(w, t_trunc as usize, Generating::Lambda)
}

/// `S_t(W) = Σ t^i S^i W`.
pub fn sym_series(w: &KElement, t_trunc: i64) -> Result<TSeries<KElement>> {
    if t_trunc < 0 {
        return Err(Error::Domain("negative t truncation".into()));
    }
    generating_series(w, t_trunc as usize, Generating::Sym)
}

/// `Λ_{s q^{a/2}}(W)` or `S_{s q^{a/2}}(W)` as a q-series of K-elements.
fn substituted(w: &KElement, sign: i64, half: i64, trunc: i64, kind: Generating) -> Result<QSeries<KElement>> {
    let t_trunc = ((trunc - 1) / half).max(0) as usize;
    let ts = generating_series(w, t_trunc, kind)?;
    let terms = ts.into_iter().enumerate().map(|(i, c)| {
        let s = if sign < 0 && i % 2 == 1 { c.neg() } else { c };
        (half * i as i64, s)
    });
    Ok(QSeries::from_terms(terms, Some(trunc)))
}

fn check_trunc(trunc: i64) -> Result<()> {
    if !(1..=MAX_SYMBOLIC_TRUNC).contains(&trunc) {
        return Err(Error::Domain(format!(
            "symbolic q truncation must be in 1..={} half-units",
            MAX_SYMBOLIC_TRUNC
        )));
    }
    Ok(())
}

/// Which Witten bundle to expand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaBundle {
    /// `Θ₁`: `Λ_{qⁿ}(V)`.
    One,
    /// `Θ₂`: `Λ_{-q^{n-1/2}}(V)`.
    Two,
    /// `Θ₃`: `Λ_{q^{n-1/2}}(V)`.
    Three,
    /// `Θ`: `Λ_{-qⁿ}(V)`.
    Flat,
}

impl ThetaBundle {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(ThetaBundle::One),
            "2" => Ok(ThetaBundle::Two),
            "3" => Ok(ThetaBundle::Three),
            "flat" | "0" => Ok(ThetaBundle::Flat),
            _ => Err(Error::Domain(format!("unknown theta bundle {:?}", s))),
        }
    }

    /// `(sign, δ)` of `Λ_{sign q^{n - δ/2}}`.
    fn lambda_shape(self) -> (i64, i64) {
        match self {
            ThetaBundle::One => (1, 0),
            ThetaBundle::Two => (-1, 1),
            ThetaBundle::Three => (1, 1),
            ThetaBundle::Flat => (-1, 0),
        }
    }
}

/// `⊗_n Λ_{s q^{n-δ/2}}(W)`.
fn lambda_tower(w: &KElement, sign: i64, delta: i64, trunc: i64) -> Result<QSeries<KElement>> {
    let mut acc = QSeries::constant(KElement::one()).truncated(trunc);
    let mut n = 1;
    while 2 * n - delta < trunc {
        acc = acc.mul(&substituted(w, sign, 2 * n - delta, trunc, Generating::Lambda)?);
        n += 1;
    }
    Ok(acc)
}

/// `⊗_n S_{qⁿ}(W)`.
fn sym_tower(w: &KElement, trunc: i64) -> Result<QSeries<KElement>> {
    let mut acc = QSeries::constant(KElement::one()).truncated(trunc);
    let mut n = 1;
    while 2 * n < trunc {
        acc = acc.mul(&substituted(w, 1, 2 * n, trunc, Generating::Sym)?);
        n += 1;
    }
    Ok(acc)
}

/// q-expansion of `Θ_j(tm|v)` (or the virtual `Θ_j(tm|v)_v` built from
/// reduced bundles) through `q^{(trunc-1)/2}`.
pub fn theta_bundle_qexp(
    which: ThetaBundle,
    tm: &str,
    v: &str,
    ranks: &RankTable,
    trunc: i64,
    virtual_bundles: bool,
) -> Result<QSeries<KElement>> {
    check_trunc(trunc)?;
    let (t, vv) = (KElement::base(tm), KElement::base(v));
    let (t, vv) = if virtual_bundles { (t.reduced(ranks)?, vv.reduced(ranks)?) } else { (t, vv) };
    let (sign, delta) = which.lambda_shape();
    Ok(sym_tower(&t, trunc)?.mul(&lambda_tower(&vv, sign, delta, trunc)?))
}

/// q-expansion of `Q_j(E)` (or `Q_j(E)_v`) for a rank-`n` real bundle `E`.
pub fn q_bundle_qexp(j: usize, n: i64, trunc: i64, virtual_bundles: bool) -> Result<QSeries<KElement>> {
    check_trunc(trunc)?;
    if n < 2 || n % 2 != 0 {
        return Err(Error::Domain(format!("Q_j(E) needs an even rank N >= 2, got {}", n)));
    }
    let ranks = RankTable::new(&[(E, n)]);
    let e = KElement::base(E);
    let e = if virtual_bundles { e.reduced(&ranks)? } else { e };
    match j {
        1 => {
            let spin = QSeries::constant(KElement::atom(Atom::Spinor(E.to_string())));
            Ok(spin.mul(&lambda_tower(&e, 1, 0, trunc)?))
        }
        2 => lambda_tower(&e, -1, 1, trunc),
        3 => lambda_tower(&e, 1, 1, trunc),
        _ => Err(Error::Domain(format!("Q_j(E) is defined for j = 1, 2, 3; got {}", j))),
    }
}

/// Rank generating function of a q-series of K-elements.
pub fn rank_series(s: &QSeries<KElement>, ranks: &RankTable) -> Result<QSeries<num_rational::BigRational>> {
    s.try_map(|k| Ok(num_rational::BigRational::from_integer(k.rank(ranks)?)))
}

/// A Chern root `2πi·(center + class)`: `center` is a numeric phase (for
/// equivariant data, `γt`) and `class` indexes a degree-2 generator.
#[derive(Clone, Debug, PartialEq)]
pub struct Root {
    pub center: Complex64,
    pub class: Option<usize>,
}

/// Root data of a complexified real bundle: pairs `±z` plus zero roots.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleRootData {
    pub name: String,
    pub pairs: Vec<Root>,
    pub zero_roots: usize,
}

impl BundleRootData {
    pub fn rank(&self) -> usize {
        2 * self.pairs.len() + self.zero_roots
    }
}

/// `e^{2πi s (center + class)}` in the graded algebra.
fn root_exponential(
    table: &Arc<GeneratorTable>,
    cap: u32,
    root: &Root,
    s: f64,
) -> Result<GradedElement<Complex64>> {
    let phase = (2.0 * PI * Complex64::new(0.0, s) * root.center).exp();
    let mut out = GradedElement::scalar(table, cap, phase);
    if let Some(i) = root.class {
        let x = GradedElement::<Complex64>::generator_at(table, cap, i);
        let order = (cap / table.generator(i).degree.max(1)) as usize;
        let ex = GradedElement::compose(&exp_linear(Complex64::new(0.0, 2.0 * PI * s), order), &x)?;
        out = out.mul(&ex);
    }
    Ok(out)
}

/// Chern character map from [`KElement`]s to graded forms, given root data
/// for each base bundle.
pub struct ChernMap {
    table: Arc<GeneratorTable>,
    cap: u32,
    bundles: HashMap<String, BundleRootData>,
    cache: std::sync::Mutex<HashMap<Atom, GradedElement<Complex64>>>,
}

impl ChernMap {
    pub fn new(table: &Arc<GeneratorTable>, cap: u32, bundles: Vec<BundleRootData>) -> Self {
        ChernMap {
            table: table.clone(),
            cap,
            bundles: bundles.into_iter().map(|b| (b.name.clone(), b)).collect(),
            cache: std::sync::Mutex::new(HashMap::new()),
        }
    }

    fn exponentials(&self, b: &BundleRootData) -> Result<Vec<GradedElement<Complex64>>> {
        let mut out = Vec::new();
        for r in &b.pairs {
            out.push(root_exponential(&self.table, self.cap, r, 1.0)?);
            out.push(root_exponential(&self.table, self.cap, r, -1.0)?);
        }
        for _ in 0..b.zero_roots {
            out.push(GradedElement::one(&self.table, self.cap));
        }
        Ok(out)
    }

    fn atom_ch(&self, atom: &Atom) -> Result<GradedElement<Complex64>> {
        if let Some(c) = self.cache.lock().expect("cache poisoned").get(atom) {
            return Ok(c.clone());
        }
        let b = self
            .bundles
            .get(atom.bundle())
            .ok_or_else(|| Error::Data(format!("no root data for bundle {}", atom.bundle())))?;
        let one = GradedElement::one(&self.table, self.cap);
        let out = match atom {
            Atom::Lambda(_, i) | Atom::Sym(_, i) => {
                let exps = self.exponentials(b)?;
                let n = *i as usize + 1;
                let mut acc: TSeries<GradedElement<Complex64>> = vec![GradedElement::zero(&self.table, self.cap); n];
                acc[0] = one.clone();
                let is_lambda = matches!(atom, Atom::Lambda(..));
                for e in exps {
                    let factor: TSeries<GradedElement<Complex64>> = if is_lambda {
                        let mut f = vec![GradedElement::zero(&self.table, self.cap); n];
                        f[0] = one.clone();
                        if n > 1 {
                            f[1] = e.clone();
                        }
                        f
                    } else {
                        let mut f = Vec::with_capacity(n);
                        let mut p = one.clone();
                        for _ in 0..n {
                            f.push(p.clone());
                            p = p.mul(&e);
                        }
                        f
                    };
                    acc = graded_tseries_mul(&acc, &factor);
                }
                acc[*i as usize].clone()
            }
            Atom::Spinor(_) | Atom::SpinorDiff(_) => {
                let diff = matches!(atom, Atom::SpinorDiff(_));
                let mut acc = one.clone();
                for r in &b.pairs {
                    let plus = root_exponential(&self.table, self.cap, r, 0.5)?;
                    let minus = root_exponential(&self.table, self.cap, r, -0.5)?;
                    acc = acc.mul(&if diff { minus.sub(&plus) } else { plus.add(&minus) });
                }
                if diff && b.zero_roots > 0 {
                    return Err(Error::Domain("Δ₊ - Δ₋ needs an even-rank bundle".into()));
                }
                acc
            }
        };
        self.cache.lock().expect("cache poisoned").insert(atom.clone(), out.clone());
        Ok(out)
    }

    pub fn ch(&self, k: &KElement) -> Result<GradedElement<Complex64>> {
        let mut acc = GradedElement::zero(&self.table, self.cap);
        for (m, c) in k.terms() {
            let mut p = GradedElement::scalar(&self.table, self.cap, Complex64::new(*c as f64, 0.0));
            for (atom, e) in m {
                let a = self.atom_ch(atom)?;
                for _ in 0..*e {
                    p = p.mul(&a);
                }
            }
            acc = acc.add(&p);
        }
        Ok(acc)
    }

    /// Chern character of a q-series, collected as a graded element with
    /// q-series coefficients.
    pub fn ch_series(&self, s: &QSeries<KElement>) -> Result<GradedElement<QSeries<Complex64>>> {
        let trunc = s.trunc();
        let mut acc = GradedElement::zero(&self.table, self.cap);
        for (half, k) in s.terms() {
            let c = self.ch(k)?;
            let lifted = c.map(|z| {
                let m = QSeries::monomial(*z, half);
                match trunc {
                    Some(t) => m.truncated(t),
                    None => m,
                }
            });
            acc = acc.add(&lifted);
        }
        if let Some(t) = trunc {
            acc = acc.add(&GradedElement::scalar(&self.table, self.cap, QSeries::zero_to(t)));
        }
        Ok(acc)
    }
}

/// `det^{1/2}(θ_j(R/4π²)/θ_j(0))` through Chern roots (with the factor 2 per
/// pair for `j = 1`), expanded in the given context.
pub fn q_char_form<C: EvalContext>(
    ctx: &C,
    j: usize,
    vb: &BundleRootData,
    table: &Arc<GeneratorTable>,
    cap: u32,
) -> Result<GradedElement<C::S>> {
    let kind = ThetaKind::from_index(j)?;
    if kind == ThetaKind::Theta {
        return Err(Error::Domain("q_char_form is defined for j = 1, 2, 3".into()));
    }
    let mut acc = GradedElement::scalar(table, cap, ctx.lift(Complex64::new(1.0, 0.0)));
    for r in &vb.pairs {
        let order = (cap / 2) as usize;
        let t = quotient_taylor(ctx, Quotient::Ratio(kind), r.center, order)?;
        let t = if j == 1 { t.scale(&ctx.lift(Complex64::new(2.0, 0.0))) } else { t };
        let x = match r.class {
            Some(i) => GradedElement::generator_at(table, cap, i),
            None => GradedElement::zero(table, cap),
        };
        acc = acc.mul(&GradedElement::compose(&t, &x)?);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ring::rat;
    use crate::series::Generator;
    use crate::theta::SeriesCtx;

    fn ranks() -> RankTable {
        RankTable::new(&[(TM, 9), (V, 9), (E, 8)])
    }

    #[test]
    fn eq33_coefficients() {
        let s = theta_bundle_qexp(ThetaBundle::Two, TM, V, &ranks(), 5, false).unwrap();
        assert_eq!(s.coeff(0), KElement::one());
        assert_eq!(s.coeff(1), KElement::base(V).neg());
        assert_eq!(s.coeff(2), KElement::base(TM).add(&KElement::lambda(V, 2)));
        let b = q_bundle_qexp(2, 8, 5, false).unwrap();
        assert_eq!(b.coeff(0), KElement::one());
        assert_eq!(b.coeff(1), KElement::base(E).neg());
        assert_eq!(b.coeff(2), KElement::lambda(E, 2));
        let b3 = q_bundle_qexp(3, 8, 3, false).unwrap();
        assert_eq!(b3.coeff(1), KElement::base(E));
    }

    #[test]
    fn odd_rank_rejected() {
        assert!(matches!(q_bundle_qexp(2, 7, 5, false), Err(Error::Domain(_))));
    }

    #[test]
    fn lambda_of_trivial_bundle_is_binomial() {
        let s = lambda_series(&KElement::trivial(4), 6).unwrap();
        for (i, c) in s.iter().enumerate() {
            assert_eq!(*c, KElement::trivial(binomial(4, i as i64).to_i64().unwrap()));
        }
    }

    #[test]
    fn lambda_of_difference_is_quotient() {
        let w = KElement::base("A").mul(&KElement::trivial(1)).sub(&KElement::base("B"));
        let lw = lambda_series(&w, 4).unwrap();
        let la = lambda_series(&KElement::base("A"), 4).unwrap();
        let lb = lambda_series(&KElement::base("B"), 4).unwrap();
        assert_eq!(tseries_mul(&lw, &lb), la);
    }

    #[test]
    fn flat_bundle_with_v_zero() {
        let r = RankTable::new(&[(TM, 5), ("Z", 0)]);
        let s = theta_bundle_qexp(ThetaBundle::Flat, TM, "Z", &r, 3, false).unwrap();
        assert_eq!(s.coeff(2), KElement::base(TM).sub(&KElement::base("Z")));
    }

    #[test]
    fn ranks_match_generating_function() {
        // rank Θ₂(TM|V) = ∏(1-qⁿ)^{-dim M} ∏(1-q^{n-1/2})^{dim V}
        let r = ranks();
        let s = theta_bundle_qexp(ThetaBundle::Two, TM, V, &r, 9, false).unwrap();
        let got = rank_series(&s, &r).unwrap();
        let mut expect = QSeries::constant(rat(1, 1)).truncated(9);
        for n in 1..5 {
            let one = QSeries::constant(rat(1, 1));
            let a = one.sub(&QSeries::monomial(rat(1, 1), 2 * n)).truncated(9);
            let b = one.sub(&QSeries::monomial(rat(1, 1), 2 * n - 1)).truncated(9);
            expect = expect.mul(&a.inv().unwrap().pow(9)).mul(&b.pow(9));
        }
        assert_eq!(got, expect);
    }

    #[test]
    fn chern_character_matches_theta_quotients() {
        let table = GeneratorTable::new(vec![Generator::new("x1", 2), Generator::new("x2", 2)]).unwrap();
        let cap = 6;
        let vb = BundleRootData {
            name: E.into(),
            pairs: vec![Root { center: Complex64::new(0.0, 0.0), class: Some(0) }, Root { center: Complex64::new(0.0, 0.0), class: Some(1) }],
            zero_roots: 0,
        };
        let trunc = 7;
        let cm = ChernMap::new(&table, cap, vec![vb.clone()]);
        let ctx = SeriesCtx::new(trunc);
        for j in 1..=3 {
            let k = q_bundle_qexp(j, 4, trunc, true).unwrap();
            let via_k = cm.ch_series(&k).unwrap();
            let via_theta = q_char_form(&ctx, j, &vb, &table, cap).unwrap();
            assert!(via_k.approx_eq(&via_theta, 1e-10), "j = {}", j);
        }
    }
}

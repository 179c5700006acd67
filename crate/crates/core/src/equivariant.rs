//! S¹-equivariant fixed-point formulas.
//!
//! A dataset lists the connected components of the fixed set with their
//! normal exponents `γ`, the exponents `ν` of `V`, Chern-root generators and
//! a table of characteristic numbers. From it we evaluate the Lefschetz
//! index of twisted Toeplitz operators, the signature function `f(z)`, the
//! theta-function expressions `F_L`, `F_W`, `F′_W`, `F_dR,j`, the anomaly `n`
//! and rigidity scans over `t`.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modularity::Group;
use crate::odd_chern::{ch_q_bundle, k_element_odd_multiple, odd_ch_form, OddChConvention, OddClassVector};
use crate::series::dd::DdComplex;
use crate::series::exact::ExactComplex;
use crate::series::ring::{rational_to_f64, Analytic, QAlgebra, Ring};
use crate::series::{CharacteristicNumbers, Generator, GeneratorTable, GradedElement, QSeries, Taylor};
use crate::theta::{quotient_log_taylor, quotient_taylor, EvalContext, NumericCtx, Quotient, SeriesCtx, ThetaKind};
use crate::witten_bundles::{
    q_bundle_qexp, theta_bundle_qexp, Atom, BundleRootData, ChernMap, KElement, RankTable, Root, ThetaBundle, TM, V,
};

/// Largest denominator treated as a pole of the sine factors.
pub const GENERATOR_MAX_DEN: i64 = 12;
/// Distance to such a rational below which `t` is rejected.
pub const GENERATOR_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalSummand {
    pub gamma: i64,
    /// Chern-root generators (`"0"` for a vanishing root); rank = length.
    pub roots: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VSummand {
    pub nu: i64,
    pub roots: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedComponent {
    pub name: String,
    pub dim: u32,
    /// One root per `±y` pair of `TM^{S¹}`.
    #[serde(default)]
    pub tangent_roots: Vec<String>,
    #[serde(default)]
    pub normal: Vec<NormalSummand>,
    /// Summands `V_ν` with `ν ≠ 0`.
    #[serde(default)]
    pub v_summands: Vec<VSummand>,
    /// One root per `±u₀` pair of `V₀`.
    #[serde(default)]
    pub v0_roots: Vec<String>,
    /// Trivial real lines in `V₀` beyond the pairs.
    #[serde(default)]
    pub v0_trivial: u32,
    /// Characteristic numbers: monomial (e.g. `"c7"`, `"c3*x1^2"`) to value.
    #[serde(default)]
    pub integrals: BTreeMap<String, f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureGroup {
    /// `g: M -> SO(N)`; `c_d` vanish for `d ≡ 1 (mod 4)`.
    #[default]
    So,
    /// `g: M -> GL(N, ℂ)`; only the plain Toeplitz index applies.
    Gl,
}

/// Declared hypotheses on `g` and `M`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypotheses {
    #[serde(default)]
    pub g_pi1_trivial: bool,
    #[serde(default)]
    pub c3_zero: bool,
    #[serde(default)]
    pub p1_zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivariantData {
    pub ambient_dim: u32,
    pub rank_n: i64,
    /// Real rank of `V`.
    pub v_dim: u32,
    #[serde(default)]
    pub group: StructureGroup,
    pub components: Vec<FixedComponent>,
    #[serde(default)]
    pub hypotheses: Hypotheses,
    /// Declared anomaly; checked against the exponents when present.
    #[serde(default)]
    pub anomaly_n: Option<i64>,
}

/// Characteristic-class algebra of one fixed component.
#[derive(Clone, Debug)]
pub struct PreparedComponent {
    pub table: Arc<GeneratorTable>,
    pub cap: u32,
    pub numbers: CharacteristicNumbers,
    /// Odd degree to generator index.
    pub classes: BTreeMap<u32, usize>,
}

fn is_zero_root(r: &str) -> bool {
    r.trim() == "0"
}

impl FixedComponent {
    pub fn normal_rank(&self) -> usize {
        self.normal.iter().map(|s| s.roots.len()).sum()
    }

    pub fn v_real_rank(&self) -> u32 {
        let nu: usize = self.v_summands.iter().map(|s| s.roots.len()).sum();
        2 * (nu + self.v0_roots.len()) as u32 + self.v0_trivial
    }

    fn all_roots(&self) -> impl Iterator<Item = &String> {
        self.tangent_roots
            .iter()
            .chain(self.normal.iter().flat_map(|s| s.roots.iter()))
            .chain(self.v_summands.iter().flat_map(|s| s.roots.iter()))
            .chain(self.v0_roots.iter())
    }

    pub fn prepare(&self) -> Result<PreparedComponent> {
        let mut gens = Vec::new();
        let mut classes = BTreeMap::new();
        let mut d = 1;
        while d <= self.dim {
            classes.insert(d, gens.len());
            gens.push(Generator::new(format!("c{}", d), d));
            d += 2;
        }
        let roots: BTreeSet<&String> = self.all_roots().filter(|r| !is_zero_root(r)).collect();
        for r in roots {
            if r.starts_with('c') && r[1..].parse::<u32>().is_ok() {
                return Err(Error::Data(format!("root name {:?} clashes with an odd class", r)));
            }
            gens.push(Generator::new(r.clone(), 2));
        }
        let table = GeneratorTable::new(gens)?;
        let mut numbers = CharacteristicNumbers::new();
        for (mono, v) in &self.integrals {
            let m = table.parse_monomial(mono)?;
            if table.degree(&m) != self.dim {
                return Err(Error::Data(format!(
                    "component {}: characteristic number {:?} has degree {} but the component has dimension {}",
                    self.name,
                    mono,
                    table.degree(&m),
                    self.dim
                )));
            }
            if !v.is_finite() {
                return Err(Error::Data(format!("component {}: non-finite value for {:?}", self.name, mono)));
            }
            numbers.insert(m, Complex64::new(*v, 0.0));
        }
        Ok(PreparedComponent { table, cap: self.dim, numbers, classes })
    }
}

impl PreparedComponent {
    fn root<S: Ring>(&self, name: &str) -> Result<GradedElement<S>> {
        if is_zero_root(name) {
            return Ok(GradedElement::zero(&self.table, self.cap));
        }
        GradedElement::generator(&self.table, self.cap, name)
    }

    fn root_data(&self, name: &str, center: Complex64) -> Root {
        Root { center, class: if is_zero_root(name) { None } else { self.table.position(name) } }
    }

    fn order(&self) -> usize {
        (self.cap / 2) as usize
    }

    /// `f(root)` for a Taylor series `f` around the root's center.
    fn compose<S: Ring>(&self, f: &Taylor<S>, name: &str) -> Result<GradedElement<S>> {
        GradedElement::compose(f, &self.root(name)?)
    }

    /// Odd Chern character `Σ n!/(2n+1)! c_{2n+1}` of `(ℂ^N, g, d)`.
    pub fn odd_ch<R: QAlgebra>(&self, convention: OddChConvention) -> Result<GradedElement<R>> {
        let c: OddClassVector<R> =
            self.classes.iter().map(|(&d, &i)| (d, GradedElement::generator_at(&self.table, self.cap, i))).collect();
        odd_ch_form(&c, &self.table, self.cap, convention)
    }
}

impl EquivariantData {
    /// Structural checks; the first violated invariant is reported.
    pub fn validate(&self) -> Result<()> {
        if self.ambient_dim.is_multiple_of(2) {
            return Err(Error::Data(format!("ambient dimension must be odd, got {}", self.ambient_dim)));
        }
        if self.rank_n < 2 || self.rank_n % 2 != 0 {
            return Err(Error::Data(format!("rank N of E must be even and >= 2, got {}", self.rank_n)));
        }
        for c in &self.components {
            if c.dim % 2 == 0 {
                return Err(Error::Data(format!("component {}: dimension must be odd, got {}", c.name, c.dim)));
            }
            if c.tangent_roots.len() as u32 != (c.dim - 1) / 2 {
                return Err(Error::Data(format!(
                    "component {}: expected {} tangent root pairs, got {}",
                    c.name,
                    (c.dim - 1) / 2,
                    c.tangent_roots.len()
                )));
            }
            for s in &c.normal {
                if s.gamma == 0 {
                    return Err(Error::Data(format!(
                        "component {}: normal exponent must satisfy γ ∈ ℤ∖{{0}}, got γ = 0",
                        c.name
                    )));
                }
                if s.roots.is_empty() {
                    return Err(Error::Data(format!("component {}: empty normal summand γ = {}", c.name, s.gamma)));
                }
            }
            for s in &c.v_summands {
                if s.nu == 0 {
                    return Err(Error::Data(format!(
                        "component {}: ν = 0 belongs in v0_roots, not in v_summands",
                        c.name
                    )));
                }
            }
            let total = c.dim + 2 * c.normal_rank() as u32;
            if total != self.ambient_dim {
                return Err(Error::Data(format!(
                    "component {}: dim + 2·rank N = {} differs from the ambient dimension {}",
                    c.name, total, self.ambient_dim
                )));
            }
            if c.v_real_rank() != self.v_dim {
                return Err(Error::Data(format!(
                    "component {}: V restricts to real rank {} but v_dim = {}",
                    c.name,
                    c.v_real_rank(),
                    self.v_dim
                )));
            }
            let p = c.prepare()?;
            if self.group == StructureGroup::So {
                for (m, v) in p.numbers.iter() {
                    for (&d, &i) in &p.classes {
                        if d % 4 == 1 && m[i] > 0 && v.norm() != 0.0 {
                            return Err(Error::Data(format!(
                                "component {}: g takes values in SO(N), so c{} vanishes, but {} = {}",
                                c.name,
                                d,
                                p.table.format_monomial(m),
                                v.re
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

// Anomaly relations.

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnomalyReport {
    /// Common `n` when all components agree and the root relations hold.
    pub n: Option<i64>,
    pub per_component: Vec<(String, i64)>,
    pub violations: Vec<String>,
}

impl AnomalyReport {
    pub fn consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The three relations `Σu² - Σy² - Σx² = 0`, `Σνu - Σγx = 0`,
/// `Σν² - Σγ² = n` on each component.
pub fn anomaly_check(data: &EquivariantData) -> Result<AnomalyReport> {
    let mut per_component = Vec::new();
    let mut violations = Vec::new();
    for c in &data.components {
        let p = c.prepare()?;
        let nu2: i64 = c.v_summands.iter().map(|s| s.nu * s.nu * s.roots.len() as i64).sum();
        let ga2: i64 = c.normal.iter().map(|s| s.gamma * s.gamma * s.roots.len() as i64).sum();
        let n = nu2 - ga2;
        per_component.push((c.name.clone(), n));

        let mut lin = GradedElement::<Complex64>::zero(&p.table, p.cap);
        for s in &c.v_summands {
            for r in &s.roots {
                lin = lin.add(&p.root::<Complex64>(r)?.scale(&Complex64::new(s.nu as f64, 0.0)));
            }
        }
        for s in &c.normal {
            for r in &s.roots {
                lin = lin.sub(&p.root::<Complex64>(r)?.scale(&Complex64::new(s.gamma as f64, 0.0)));
            }
        }
        let sq = |r: &str| -> Result<GradedElement<Complex64>> {
            let x = p.root::<Complex64>(r)?;
            Ok(x.mul(&x))
        };
        let mut quad = GradedElement::<Complex64>::zero(&p.table, p.cap);
        for r in c.v_summands.iter().flat_map(|s| s.roots.iter()).chain(c.v0_roots.iter()) {
            quad = quad.add(&sq(r)?);
        }
        for r in c.tangent_roots.iter().chain(c.normal.iter().flat_map(|s| s.roots.iter())) {
            quad = quad.sub(&sq(r)?);
        }
        let tol = 1e-12;
        if !(quad.is_zero() || quad.vanishes_against(&p.numbers, p.cap, tol)) {
            violations.push(format!("component {}: Σu² - Σy² - Σx² ≠ 0", c.name));
        }
        if !(lin.is_zero() || lin.vanishes_against(&p.numbers, p.cap, tol)) {
            violations.push(format!("component {}: Σνu - Σγx ≠ 0", c.name));
        }
    }
    let distinct: BTreeSet<i64> = per_component.iter().map(|(_, n)| *n).collect();
    if distinct.len() > 1 {
        violations.push(format!("components give different anomalies {:?}", per_component));
    }
    let mut n = if violations.is_empty() { distinct.into_iter().next().or(Some(0)) } else { None };
    if let (Some(declared), Some(found)) = (data.anomaly_n, n) {
        if declared != found {
            violations.push(format!("declared anomaly n = {} but the exponents give n = {}", declared, found));
            n = None;
        }
    }
    Ok(AnomalyReport { n, per_component, violations })
}

// F-functions.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FKind {
    L,
    W,
    WPrime,
    DR(u8),
}

impl FKind {
    pub const ALL: [FKind; 6] = [FKind::L, FKind::W, FKind::WPrime, FKind::DR(1), FKind::DR(2), FKind::DR(3)];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().trim_start_matches('f').trim_start_matches('F') {
            "L" => Ok(FKind::L),
            "W" => Ok(FKind::W),
            "W'" | "Wp" | "Wprime" | "WPrime" => Ok(FKind::WPrime),
            "dR1" => Ok(FKind::DR(1)),
            "dR2" => Ok(FKind::DR(2)),
            "dR3" => Ok(FKind::DR(3)),
            _ => Err(Error::Domain(format!("unknown F-function {:?} (L, W, Wp, dR1, dR2, dR3)", s))),
        }
    }

    pub fn name(self) -> String {
        match self {
            FKind::L => "L".into(),
            FKind::W => "W".into(),
            FKind::WPrime => "Wp".into(),
            FKind::DR(j) => format!("dR{}", j),
        }
    }

    /// Index `j` of the `Q_j(E)` factor.
    /// Modular group of the Jacobi law.
    pub fn group(self) -> Group {
        match self {
            FKind::L | FKind::DR(1) => Group::Gamma0Lower2,
            FKind::W | FKind::DR(2) => Group::Gamma0Upper2,
            _ => Group::GammaTheta,
        }
    }

    pub fn q_index(self) -> usize {
        match self {
            FKind::L => 1,
            FKind::W => 2,
            FKind::WPrime => 3,
            FKind::DR(j) => j as usize,
        }
    }

    /// Weight of the Jacobi form.
    pub fn weight(self, data: &EquivariantData) -> i64 {
        match self {
            FKind::DR(_) => (data.ambient_dim as i64 - data.v_dim as i64 + 1) / 2,
            _ => (data.ambient_dim as i64 + 1) / 2,
        }
    }
}

fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn prefactor(kind: FKind, dim_n: i64, v_dim: i64) -> Result<Complex64> {
    let minus_i = |k: i64| i_pow(-k);
    Ok(match kind {
        FKind::L => -(2f64.powi((v_dim / 2) as i32)) * minus_i(dim_n) / (2.0 * PI).powi(dim_n as i32),
        FKind::W | FKind::WPrime => -minus_i(dim_n) / (2.0 * PI).powi(dim_n as i32),
        FKind::DR(_) => {
            if v_dim % 2 != 0 {
                return Err(Error::Domain(format!("the dR family needs an even-dimensional V, got dim V = {}", v_dim)));
            }
            -minus_i(dim_n + v_dim / 2) / (2.0 * PI).powi((dim_n - v_dim / 2) as i32)
        }
    })
}

fn pole_context(e: Error, what: &str, gamma: i64, t: Complex64) -> Error {
    match e {
        Error::Pole(msg) => Error::Pole(format!("{} with exponent {} at t = {}: {}", what, gamma, t, msg)),
        other => other,
    }
}

/// One component's contribution to `F_kind(t)` in a context.
fn f_component<C: EvalContext>(
    ctx: &C,
    kind: FKind,
    data: &EquivariantData,
    c: &FixedComponent,
    t: Complex64,
) -> Result<C::S> {
    let p = c.prepare()?;
    let order = p.order();
    let zero = Complex64::new(0.0, 0.0);
    let mut form = ch_q_bundle(ctx, kind.q_index(), data.rank_n, &p.classes, &p.table, p.cap)?;
    if form.is_zero() {
        return Ok(ctx.lift(zero));
    }
    // Constants of the theta factors are summed as logarithms: at lattice
    // shifts the individual factors over- and underflow by e^{±100} or more.
    let mut log_const = ctx.lift(zero);
    let reg = quotient_taylor(ctx, Quotient::RegularizedInverse, zero, order)?;
    for y in &c.tangent_roots {
        form = form.mul(&p.compose(&reg, y)?);
    }
    for s in &c.normal {
        let center = t * s.gamma as f64;
        apply_factor(ctx, &p, &mut form, &mut log_const, Quotient::Inverse, center, &s.roots)
            .map_err(|e| pole_context(e, "θ'(0)/θ(x + γt)", s.gamma, t))?;
    }
    let v_quotient = match kind {
        FKind::L => Quotient::Ratio(ThetaKind::Theta1),
        FKind::W => Quotient::Ratio(ThetaKind::Theta2),
        FKind::WPrime => Quotient::Ratio(ThetaKind::Theta3),
        FKind::DR(_) => Quotient::Normalized,
    };
    for s in &c.v_summands {
        apply_factor(ctx, &p, &mut form, &mut log_const, v_quotient, t * s.nu as f64, &s.roots)?;
    }
    apply_factor(ctx, &p, &mut form, &mut log_const, v_quotient, zero, &c.v0_roots)?;
    let pre = prefactor(kind, c.normal_rank() as i64, data.v_dim as i64)?;
    Ok(form.integrate(&p.numbers, p.cap).mul(&log_const.exp()).mul(&ctx.lift(pre)))
}

/// Multiplies `form` by `∏_roots f(center + root)`, moving `log f(center)`
/// into `log_const`. Factors vanishing at the center are multiplied directly.
fn apply_factor<C: EvalContext>(
    ctx: &C,
    p: &PreparedComponent,
    form: &mut GradedElement<C::S>,
    log_const: &mut C::S,
    kind: Quotient,
    center: Complex64,
    roots: &[String],
) -> Result<()> {
    if roots.is_empty() {
        return Ok(());
    }
    let order = p.order();
    let jet = match quotient_log_taylor(ctx, kind, center, order) {
        Ok(l) => {
            let l0 = l.coeff(0);
            *log_const = log_const.add(&l0.mul(&ctx.lift(Complex64::new(roots.len() as f64, 0.0))));
            l.sub(&Taylor::constant(l0, order)).exp()
        }
        Err(Error::Pole(_)) if kind != Quotient::Inverse => quotient_taylor(ctx, kind, center, order)?,
        Err(e) => return Err(e),
    };
    for r in roots {
        *form = form.mul(&p.compose(&jet, r)?);
    }
    Ok(())
}

fn check_family(kind: FKind, data: &EquivariantData) -> Result<()> {
    if data.group != StructureGroup::So {
        return Err(Error::Domain("F-functions need g with values in SO(N)".into()));
    }
    if let FKind::DR(j) = kind {
        if !(1..=3).contains(&j) {
            return Err(Error::Domain(format!("dR index must be 1, 2 or 3, got {}", j)));
        }
        if !data.v_dim.is_multiple_of(2) {
            return Err(Error::Domain(format!("the dR family needs an even-dimensional V, got dim V = {}", data.v_dim)));
        }
    }
    Ok(())
}

/// `F_kind(t, ·)` in an evaluation context: a number at fixed `τ`, or a
/// q-series.
pub fn f_function_ctx<C: EvalContext>(ctx: &C, kind: FKind, data: &EquivariantData, t: Complex64) -> Result<C::S> {
    check_family(kind, data)?;
    let mut acc = ctx.lift(Complex64::new(0.0, 0.0));
    for c in &data.components {
        acc = acc.add(&f_component(ctx, kind, data, c, t)?);
    }
    Ok(acc)
}

/// q-expansion of `F_kind(t, τ)` through `q^{(trunc-1)/2}`.
pub fn f_function(kind: FKind, data: &EquivariantData, t: f64, trunc: i64) -> Result<QSeries<Complex64>> {
    f_function_ctx(&SeriesCtx::new(trunc), kind, data, Complex64::new(t, 0.0))
}

/// `F_kind(t, τ)` at a point of `ℂ × H`.
pub fn f_value(kind: FKind, data: &EquivariantData, t: Complex64, tau: Complex64) -> Result<Complex64> {
    f_function_ctx(&NumericCtx::new(tau)?, kind, data, t)
}

// Lefschetz index.

/// Rejects `t` within [`GENERATOR_TOL`] of a rational with denominator at
/// most [`GENERATOR_MAX_DEN`].
pub fn check_generator(t: f64) -> Result<()> {
    for den in 1..=GENERATOR_MAX_DEN {
        let x = t * den as f64;
        if (x - x.round()).abs() / (den as f64) < GENERATOR_TOL {
            return Err(Error::Pole(format!(
                "t = {} is within {:e} of the rational {}/{}; h = e^{{2πit}} is not a topological generator",
                t,
                GENERATOR_TOL,
                x.round(),
                den
            )));
        }
    }
    Ok(())
}

/// The odd K-theory symbol paired in the index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OddSymbol {
    /// `(ℂ^N, g)`.
    Plain(OddChConvention),
    /// `(Q_j(E)_v, g^{Q_j(E)_v})`, expanded in K-theory.
    Q(usize),
}

/// `πy/sin(πy)`.
fn pi_y_over_sin<S: QAlgebra>(order: usize, i_pi: &S) -> Result<Taylor<S>> {
    sinc(order, i_pi).inv()
}

/// `πy/tan(πy)`.
fn pi_y_over_tan<S: QAlgebra>(order: usize, i_pi: &S) -> Result<Taylor<S>> {
    Ok(cos_pi(order, i_pi).mul(&sinc(order, i_pi).inv()?))
}

/// `Σ_k (iπ)^{2k} ε^{2k} / (2k + shift)!·shift!`: `sin(πε)/(πε)` for shift 1,
/// `cos(πε)` for shift 0.
fn even_trig<S: QAlgebra>(order: usize, i_pi: &S, shift: usize) -> Taylor<S> {
    let mut c = vec![S::zero(); order + 1];
    let minus_pi2 = i_pi.mul(i_pi);
    let mut term = S::one();
    let mut k = 0;
    while k <= order {
        c[k] = term.clone();
        term = term.mul(&minus_pi2).mul(&S::from_ratio(1, ((k + 1 + shift) * (k + 2 + shift)) as i64));
        k += 2;
    }
    Taylor::from_coeffs(c)
}

fn sinc<S: QAlgebra>(order: usize, i_pi: &S) -> Taylor<S> {
    even_trig(order, i_pi, 1)
}

fn cos_pi<S: QAlgebra>(order: usize, i_pi: &S) -> Taylor<S> {
    even_trig(order, i_pi, 0)
}

/// `e^{a ε}` in any Q-algebra.
fn exp_lin_in<S: QAlgebra>(a: &S, order: usize) -> Taylor<S> {
    let mut c = Vec::with_capacity(order + 1);
    let mut term = S::one();
    for k in 0..=order {
        c.push(term.clone());
        term = term.mul(a).mul(&S::from_ratio(1, k as i64 + 1));
    }
    Taylor::from_coeffs(c)
}

/// `e^{a ε}` as a Taylor series.
fn exp_lin(a: Complex64, order: usize) -> Taylor<Complex64> {
    crate::series::taylor::exp_linear(a, order)
}

/// `1/(2i sin π(c + ε))`.
fn inverse_sine(center: Complex64, order: usize) -> Result<Taylor<Complex64>> {
    let i = Complex64::new(0.0, 1.0);
    let plus = exp_lin(i * PI, order).scale(&(i * PI * center).exp());
    let minus = exp_lin(-i * PI, order).scale(&(-i * PI * center).exp());
    // 2i sin(πw) = e^{iπw} - e^{-iπw}
    plus.sub(&minus).inv()
}

impl PreparedComponent {
    fn equivariant_bundles(&self, c: &FixedComponent, t: Complex64) -> Vec<BundleRootData> {
        let zero = Complex64::new(0.0, 0.0);
        let mut t_pairs: Vec<Root> = c.tangent_roots.iter().map(|y| self.root_data(y, zero)).collect();
        for s in &c.normal {
            for x in &s.roots {
                t_pairs.push(self.root_data(x, t * s.gamma as f64));
            }
        }
        let mut v_pairs = Vec::new();
        for s in &c.v_summands {
            for u in &s.roots {
                v_pairs.push(self.root_data(u, t * s.nu as f64));
            }
        }
        for u in &c.v0_roots {
            v_pairs.push(self.root_data(u, zero));
        }
        vec![
            BundleRootData { name: TM.into(), pairs: t_pairs, zero_roots: 1 },
            BundleRootData { name: V.into(), pairs: v_pairs, zero_roots: c.v0_trivial as usize },
        ]
    }
}

fn lift_series(g: &GradedElement<Complex64>, trunc: Option<i64>) -> GradedElement<QSeries<Complex64>> {
    g.map(|z| {
        let s = QSeries::constant(*z);
        match trunc {
            Some(t) => s.truncated(t),
            None => s,
        }
    })
}

/// `ind(h, 𝒯 ⊗ ℰ ⊗ odd)` with `h = e^{2πit}` by the fixed-point formula, for
/// a q-series of K-elements `ℰ` in the bundles `T` and `V`.
pub fn lefschetz_index(
    data: &EquivariantData,
    twist: &QSeries<KElement>,
    odd: OddSymbol,
    t: f64,
) -> Result<QSeries<Complex64>> {
    check_generator(t)?;
    let tc = Complex64::new(t, 0.0);
    let trunc = twist.trunc();
    let odd_series = match odd {
        OddSymbol::Q(j) => {
            if data.group != StructureGroup::So {
                return Err(Error::Domain("Q_j(E) twists need g with values in SO(N)".into()));
            }
            let tr = trunc.ok_or_else(|| Error::Domain("Q_j(E) twists need a truncated twist series".into()))?;
            Some(q_bundle_qexp(j, data.rank_n, tr, true)?)
        }
        OddSymbol::Plain(_) => None,
    };
    let mut total = QSeries::zero_exact();
    if let Some(tr) = trunc {
        total = total.truncated(tr);
    }
    for c in &data.components {
        let p = c.prepare()?;
        let order = p.order();
        let one = GradedElement::<Complex64>::one(&p.table, p.cap);
        let mut geo = one.clone();
        let a = pi_y_over_sin(order, &Complex64::new(0.0, PI))?;
        for y in &c.tangent_roots {
            geo = geo.mul(&p.compose(&a, y)?);
        }
        for s in &c.normal {
            let f = inverse_sine(tc * s.gamma as f64, order).map_err(|_| {
                Error::Pole(format!("sin π(x + γt) vanishes for γ = {} at t = {}", s.gamma, t))
            })?;
            for x in &s.roots {
                geo = geo.mul(&p.compose(&f, x)?);
            }
        }
        let oddf: GradedElement<QSeries<Complex64>> = match (&odd, &odd_series) {
            (OddSymbol::Plain(conv), _) => lift_series(&p.odd_ch::<Complex64>(*conv)?, trunc),
            (OddSymbol::Q(_), Some(qs)) => {
                let mut acc = GradedElement::zero(&p.table, p.cap);
                for (&d, &gi) in &p.classes {
                    let coeffs = qs.try_map(|k| k_element_odd_multiple(k, d, data.rank_n))?;
                    let series = coeffs.map(|r| Complex64::new(rational_to_f64(r), 0.0));
                    acc = acc.add(&GradedElement::generator_at(&p.table, p.cap, gi).scale(&series));
                }
                acc
            }
            _ => unreachable!("odd series prepared above"),
        };
        let chern = ChernMap::new(&p.table, p.cap, p.equivariant_bundles(c, tc));
        let twist_ch = chern.ch_series(twist)?;
        let form = oddf.mul(&lift_series(&geo, trunc)).mul(&twist_ch);
        total = total.sub(&form.integrate(&p.numbers, p.cap));
    }
    Ok(total)
}

/// The twist `ℰ` and odd symbol whose index is `F_kind`.
pub fn index_twist(kind: FKind, data: &EquivariantData, trunc: i64) -> Result<(QSeries<KElement>, OddSymbol)> {
    check_family(kind, data)?;
    let ranks = RankTable::new(&[(TM, data.ambient_dim as i64), (V, data.v_dim as i64)]);
    let (bundle, extra) = match kind {
        FKind::L => (ThetaBundle::One, Some(Atom::Spinor(V.into()))),
        FKind::W => (ThetaBundle::Two, None),
        FKind::WPrime => (ThetaBundle::Three, None),
        FKind::DR(_) => (ThetaBundle::Flat, Some(Atom::SpinorDiff(V.into()))),
    };
    let mut twist = theta_bundle_qexp(bundle, TM, V, &ranks, trunc, true)?;
    if let Some(a) = extra {
        twist = twist.scale(&KElement::atom(a));
    }
    Ok((twist, OddSymbol::Q(kind.q_index())))
}

// Signature function.

/// Arithmetic used by [`signature_rational`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    Double,
    /// About 32 digits.
    DoubleDouble,
    /// Exact rational arithmetic on the (dyadic) input, with `iπ` kept
    /// formal until the final sum; immune to near-pole cancellation.
    #[default]
    Exact,
}

impl Precision {
    pub const ENV: &'static str = "TOEPLITZ_PRECISION";

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "double" => Ok(Precision::Double),
            "double-double" | "dd" => Ok(Precision::DoubleDouble),
            "exact" => Ok(Precision::Exact),
            _ => Err(Error::Domain(format!("unknown precision {:?} (double, double-double, exact)", s))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Precision::Double => "double",
            Precision::DoubleDouble => "double-double",
            Precision::Exact => "exact",
        }
    }

    /// From `TOEPLITZ_PRECISION`, defaulting to exact.
    pub fn from_env() -> Result<Self> {
        match std::env::var(Self::ENV) {
            Ok(v) => Self::parse(&v),
            Err(_) => Ok(Precision::default()),
        }
    }
}

trait SignatureScalar: QAlgebra {
    /// Whether `i_pi()` is a formal unit standing for `iπ`.
    const FORMAL_PI: bool = false;
    fn from_c64(z: Complex64) -> Result<Self>;
    fn to_c64(&self) -> Complex64;
    fn i_pi() -> Self;
    /// Treat as zero when testing for poles.
    fn negligible(&self, scale: f64) -> bool {
        self.to_c64().norm() < 1e-14 * scale
    }
}

impl SignatureScalar for Complex64 {
    fn from_c64(z: Complex64) -> Result<Self> {
        Ok(z)
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn i_pi() -> Self {
        Complex64::new(0.0, PI)
    }
}

impl SignatureScalar for DdComplex {
    fn from_c64(z: Complex64) -> Result<Self> {
        Ok(DdComplex::from_c64(z))
    }
    fn to_c64(&self) -> Complex64 {
        DdComplex::to_c64(*self)
    }
    fn i_pi() -> Self {
        DdComplex::i_pi()
    }
}

impl SignatureScalar for ExactComplex {
    const FORMAL_PI: bool = true;
    fn from_c64(z: Complex64) -> Result<Self> {
        ExactComplex::from_c64(z).ok_or_else(|| Error::Domain(format!("z = {} is not finite", z)))
    }
    fn to_c64(&self) -> Complex64 {
        ExactComplex::to_c64(self)
    }
    fn i_pi() -> Self {
        ExactComplex::one()
    }
    fn negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }
}

fn signature_in<S: SignatureScalar>(data: &EquivariantData, z: Complex64, convention: OddChConvention) -> Result<Complex64> {
    // Top-degree contributions grouped by the power of iπ they carry (all in
    // group 0 unless iπ is formal).
    let mut groups: BTreeMap<u32, S> = BTreeMap::new();
    let ipi = S::i_pi();
    let zs = S::from_c64(z)?;
    for c in &data.components {
        let p = c.prepare()?;
        let order = p.order();
        let mut form = p.odd_ch::<S>(convention)?;
        let a = pi_y_over_tan(order, &ipi)?;
        for y in &c.tangent_roots {
            form = form.mul(&p.compose(&a, y)?);
        }
        let (plus, minus) = (exp_lin_in(&ipi, order), exp_lin_in(&ipi.neg(), order));
        for s in &c.normal {
            let zg = zs.pow(s.gamma.unsigned_abs() as u32);
            let zg = if s.gamma < 0 {
                zg.try_inv().ok_or_else(|| Error::Pole(format!("z = 0 with γ = {}", s.gamma)))?
            } else {
                zg
            };
            let num = plus.scale(&zg).add(&minus);
            let den = plus.scale(&zg).sub(&minus);
            if den.coeff(0).negligible(zg.to_c64().norm().max(1.0)) {
                return Err(Error::Pole(format!("z^γ = 1 for γ = {} at z = {}", s.gamma, z)));
            }
            let f = num.mul(&den.inv()?);
            for x in &s.roots {
                form = form.mul(&p.compose(&f, x)?);
            }
        }
        let pre = S::from_int(-(1i64 << ((c.dim - 1) / 2)));
        for (m, coeff) in form.terms() {
            if p.table.degree(m) != p.cap {
                continue;
            }
            if let Some(v) = p.numbers.get(m) {
                let key = if S::FORMAL_PI {
                    m.iter().enumerate().filter(|(g, _)| p.table.generator(*g).degree == 2).map(|(_, &e)| e as u32).sum()
                } else {
                    0
                };
                let term = coeff.mul(&S::from_c64(v)?).mul(&pre);
                let slot = groups.entry(key).or_insert_with(S::zero);
                *slot = slot.add(&term);
            }
        }
    }
    let i_pi = Complex64::new(0.0, PI);
    Ok(groups.into_iter().map(|(k, v)| v.to_c64() * if S::FORMAL_PI { i_pi.powi(k as i32) } else { Complex64::new(1.0, 0.0) }).sum())
}

/// `f(z)` of the signature rigidity argument, evaluated exactly.
pub fn signature_rational(data: &EquivariantData, z: Complex64, convention: OddChConvention) -> Result<Complex64> {
    signature_rational_with(data, z, convention, Precision::Exact)
}

pub fn signature_rational_with(
    data: &EquivariantData,
    z: Complex64,
    convention: OddChConvention,
    precision: Precision,
) -> Result<Complex64> {
    match precision {
        Precision::Double => signature_in::<Complex64>(data, z, convention),
        Precision::DoubleDouble => signature_in::<DdComplex>(data, z, convention),
        Precision::Exact => signature_in::<ExactComplex>(data, z, convention),
    }
}

/// `n`-th point of an additive golden-ratio sequence in `[lo, hi]`,
/// skipping points within `margin` of rationals with denominator <= 12.
pub fn t_samples(count: usize, lo: f64, hi: f64, margin: f64) -> Vec<f64> {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut out = Vec::with_capacity(count);
    let mut k = 1u64;
    while out.len() < count {
        let t = lo + (hi - lo) * ((k as f64 * phi).fract());
        k += 1;
        let near = (1..=GENERATOR_MAX_DEN).any(|den| {
            let x = t * den as f64;
            (x - x.round()).abs() / (den as f64) < margin
        });
        if !near {
            out.push(t);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct RigidityReport {
    pub kind: String,
    pub trunc: i64,
    pub t_samples: Vec<f64>,
    /// `coefficients[i][k]`: coefficient of `q^{k/2}` at `t_samples[i]`.
    pub coefficients: Vec<Vec<Complex64>>,
    /// Max over samples of `|coeff(t) - coeff(t₀)|` per half-integer order.
    pub variation: Vec<f64>,
    pub max_variation: f64,
    pub tolerance: f64,
    pub rigid: bool,
    pub notes: Vec<String>,
}

pub fn rigidity_scan(kind: FKind, data: &EquivariantData, ts: &[f64], trunc: i64, tol: f64) -> Result<RigidityReport> {
    let results: Vec<(f64, Result<QSeries<Complex64>>)> =
        ts.par_iter().map(|&t| (t, check_generator(t).and_then(|_| f_function(kind, data, t, trunc)))).collect();
    let mut used = Vec::new();
    let mut coefficients = Vec::new();
    let mut notes = Vec::new();
    for (t, r) in results {
        match r {
            Ok(s) => {
                used.push(t);
                coefficients.push((0..trunc).map(|k| s.coeff(k)).collect::<Vec<_>>());
            }
            Err(Error::Pole(msg)) => notes.push(format!("skipped t = {}: {}", t, msg)),
            Err(e) => return Err(e),
        }
    }
    if coefficients.is_empty() {
        return Err(Error::Domain("no admissible t samples".into()));
    }
    let variation: Vec<f64> = (0..trunc as usize)
        .map(|k| coefficients.iter().map(|c| (c[k] - coefficients[0][k]).norm()).fold(0.0, f64::max))
        .collect();
    let max_variation = variation.iter().cloned().fold(0.0, f64::max);
    Ok(RigidityReport {
        kind: kind.name(),
        trunc,
        t_samples: used,
        coefficients,
        variation,
        max_variation,
        tolerance: tol,
        rigid: max_variation < tol,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_gl(gamma: i64) -> EquivariantData {
        EquivariantData {
            ambient_dim: 3,
            rank_n: 2,
            v_dim: 0,
            group: StructureGroup::Gl,
            components: vec![FixedComponent {
                name: "circle".into(),
                dim: 1,
                tangent_roots: vec![],
                normal: vec![NormalSummand { gamma, roots: vec!["0".into()] }],
                v_summands: vec![],
                v0_roots: vec![],
                v0_trivial: 0,
                integrals: [("c1".to_string(), 1.0)].into_iter().collect(),
            }],
            hypotheses: Hypotheses::default(),
            anomaly_n: None,
        }
    }

    /// 11-dimensional data: two 7-dimensional components with normal
    /// exponents `{1, 2}` and a nontrivial normal root `x`.
    fn rich(v_equals_t: bool) -> EquivariantData {
        let comp = |name: &str, sign: i64, c7: f64, c3x2: f64| FixedComponent {
            name: name.into(),
            dim: 7,
            tangent_roots: vec!["y1".into(), "0".into(), "0".into()],
            normal: vec![
                NormalSummand { gamma: sign, roots: vec!["x".into()] },
                NormalSummand { gamma: 2 * sign, roots: vec!["0".into()] },
            ],
            v_summands: if v_equals_t {
                vec![
                    VSummand { nu: sign, roots: vec!["x".into()] },
                    VSummand { nu: 2 * sign, roots: vec!["0".into()] },
                ]
            } else {
                vec![]
            },
            v0_roots: if v_equals_t { vec!["y1".into(), "0".into(), "0".into()] } else { vec![] },
            v0_trivial: if v_equals_t { 1 } else { 0 },
            integrals: [
                ("c7".to_string(), c7),
                ("c3*x^2".to_string(), c3x2),
                ("c3*x*y1".to_string(), 0.5),
                ("c3*y1^2".to_string(), -0.25),
            ]
            .into_iter()
            .collect(),
        };
        EquivariantData {
            ambient_dim: 11,
            rank_n: 8,
            v_dim: if v_equals_t { 11 } else { 0 },
            group: StructureGroup::So,
            components: vec![comp("north", 1, 1.0, 0.3), comp("south", -1, -1.0, 0.7)],
            hypotheses: Hypotheses::default(),
            anomaly_n: None,
        }
    }

    #[test]
    fn anomaly_examples() {
        let d = rich(true);
        d.validate().unwrap();
        assert_eq!(anomaly_check(&d).unwrap().n, Some(0));
        let d0 = rich(false);
        d0.validate().unwrap();
        let r = anomaly_check(&d0).unwrap();
        // V = 0: n = -Σγ², but Σγx ≠ 0 is flagged.
        assert_eq!(r.per_component[0].1, -5);
        assert!(!r.consistent());
        let mut mixed = circle_gl(1);
        mixed.components[0].normal = vec![NormalSummand { gamma: 1, roots: vec!["0".into(), "0".into()] }];
        mixed.components[0].v_summands = vec![VSummand { nu: 2, roots: vec!["0".into()] }];
        mixed.ambient_dim = 5;
        mixed.v_dim = 2;
        mixed.validate().unwrap();
        assert_eq!(anomaly_check(&mixed).unwrap().n, Some(2));
    }

    #[test]
    fn zero_gamma_rejected() {
        let mut d = circle_gl(1);
        d.components[0].normal[0].gamma = 0;
        let e = d.validate().unwrap_err().to_string();
        assert!(e.contains("γ ∈ ℤ∖{0}"), "{}", e);
    }

    #[test]
    fn lefschetz_on_a_circle() {
        let d = circle_gl(1);
        d.validate().unwrap();
        let t = 0.2137;
        let one = QSeries::constant(KElement::one());
        let v = lefschetz_index(&d, &one, OddSymbol::Plain(OddChConvention::FromDegreeOne), t).unwrap().coeff(0);
        let oracle = -1.0 / (Complex64::new(0.0, 2.0) * (PI * t).sin());
        assert!((v - oracle).norm() < 1e-14);
        // Real data: conjugate symmetry in t -> -t for the plain index.
        let w = lefschetz_index(&d, &one, OddSymbol::Plain(OddChConvention::FromDegreeOne), -t).unwrap().coeff(0);
        assert!((w - v.conj()).norm() < 1e-14);
        assert!(matches!(
            lefschetz_index(&d, &one, OddSymbol::Plain(OddChConvention::FromDegreeOne), 0.25),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn empty_fixed_set_gives_zero() {
        let mut d = rich(true);
        d.components.clear();
        let s = f_function(FKind::W, &d, 0.31, 5).unwrap();
        assert!((0..5).all(|k| s.coeff(k).norm() == 0.0));
    }

    #[test]
    fn f_w_equals_index_series() {
        let d = rich(true);
        for t in [0.1234, 0.377] {
            let f = f_function(FKind::W, &d, t, 5).unwrap();
            let (tw, odd) = index_twist(FKind::W, &d, 5).unwrap();
            let ind = lefschetz_index(&d, &tw, odd, t).unwrap();
            for k in 0..5 {
                assert!((f.coeff(k) - ind.coeff(k)).norm() < 1e-9, "t={} k={} {} vs {}", t, k, f.coeff(k), ind.coeff(k));
            }
        }
    }

    #[test]
    fn every_family_equals_its_index_series() {
        let d = rich(true);
        let mut even = d.clone();
        // dR needs even dim V: drop the trivial line.
        even.v_dim = 10;
        for c in &mut even.components {
            c.v0_trivial = 0;
        }
        for (kind, data) in [
            (FKind::L, &d),
            (FKind::WPrime, &d),
            (FKind::DR(1), &even),
            (FKind::DR(2), &even),
            (FKind::DR(3), &even),
        ] {
            let t = 0.2718;
            let f = f_function(kind, data, t, 4).unwrap();
            let (tw, odd) = index_twist(kind, data, 4).unwrap();
            let ind = lefschetz_index(data, &tw, odd, t).unwrap();
            for k in 0..4 {
                let scale = f.coeff(k).norm().max(1.0);
                assert!((f.coeff(k) - ind.coeff(k)).norm() < 1e-9 * scale, "{:?} k={}", kind, k);
            }
        }
    }

    #[test]
    fn dr_needs_even_v() {
        let d = rich(true);
        assert!(matches!(f_function(FKind::DR(1), &d, 0.3, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn q0_oracle_for_f_w_on_circles() {
        // Zero roots: F_W q⁰ = -(-i/2π)^{dim N} ⟨ch(Q₂)⟩ Π θ'(0)/θ(γt) Π θ₂(νt)/θ₂(0) at q⁰,
        // with θ'(0)/θ(w) -> π/sin(πw) and θ₂ ratio -> 1.
        let d = rich(true);
        let t = 0.1711;
        let f = f_function(FKind::W, &d, t, 3).unwrap();
        let lam7 = crate::odd_chern::transgression_coeffs(2, 7, 3, Some(8)).unwrap().get(7).to_complex().coeff(0);
        let mut oracle = Complex64::new(0.0, 0.0);
        for (sign, c7) in [(1.0, 1.0), (-1.0, -1.0)] {
            let prod = PI / (PI * sign * t).sin() * PI / (PI * 2.0 * sign * t).sin();
            oracle += -(Complex64::new(0.0, -1.0) / (2.0 * PI)).powi(2) * lam7 * c7 * prod;
        }
        // The c3 numbers contribute only through λ_{2,3}, which starts at q^{1/2}.
        assert!((f.coeff(0) - oracle).norm() < 1e-12, "{} vs {}", f.coeff(0), oracle);
    }

    #[test]
    fn signature_limits_and_symmetry() {
        let d = rich(true);
        let a = signature_rational(&d, Complex64::new(1e9, 0.0), OddChConvention::FromDegreeOne).unwrap();
        let b = signature_rational(&d, Complex64::new(1e10, 0.0), OddChConvention::FromDegreeOne).unwrap();
        assert!((a - b).norm() < 1e-5 * a.norm().max(1.0), "{} vs {}", a, b);
        let z = Complex64::new(0.3, 0.4);
        let f1 = signature_rational(&d, z, OddChConvention::FromDegreeOne).unwrap();
        let f2 = signature_rational(&d, 1.0 / z.conj(), OddChConvention::FromDegreeOne).unwrap();
        assert!((f1 - f2.conj()).norm() < 1e-9 * f1.norm().max(1.0));
        assert!(matches!(
            signature_rational(&d, Complex64::new(1.0, 0.0), OddChConvention::FromDegreeOne),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn samples_avoid_low_denominators() {
        let ts = t_samples(20, 0.05, 0.45, 1e-3);
        assert_eq!(ts.len(), 20);
        for t in ts {
            check_generator(t).unwrap();
        }
    }
}

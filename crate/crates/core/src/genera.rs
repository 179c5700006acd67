//! Landweber–Stong and Witten type forms of a pair `(M, [g])` and their
//! genera, paired against a model manifold given by characteristic numbers.
//!
//! Root convention: a tangent root `y` enters theta functions as `θ(y, τ)`
//! and the `Â`, `L̂` factors as `πy`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equivariant::{EquivariantData, FKind, FixedComponent, Hypotheses, PreparedComponent, StructureGroup};
use crate::error::{Error, Result};
use crate::modularity::{modular_form_check, Group, ModularReport};
use crate::odd_chern::ch_q_bundle;
use crate::series::{GradedElement, QSeries};
use crate::theta::{quotient_taylor, EvalContext, NumericCtx, Quotient, SeriesCtx, ThetaKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GenusKind {
    L,
    W,
    WPrime,
    /// `ψ_{W,j}`.
    Psi(u8),
}

impl GenusKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "L" | "phiL" => Ok(GenusKind::L),
            "W" | "phiW" => Ok(GenusKind::W),
            "Wp" | "W'" | "phiWp" => Ok(GenusKind::WPrime),
            "psi1" => Ok(GenusKind::Psi(1)),
            "psi2" => Ok(GenusKind::Psi(2)),
            "psi3" => Ok(GenusKind::Psi(3)),
            _ => Err(Error::Domain(format!("unknown genus {:?} (L, W, Wp, psi1, psi2, psi3)", s))),
        }
    }

    pub fn name(self) -> String {
        match self {
            GenusKind::L => "L".into(),
            GenusKind::W => "W".into(),
            GenusKind::WPrime => "Wp".into(),
            GenusKind::Psi(j) => format!("psi{}", j),
        }
    }

    pub fn q_index(self) -> usize {
        match self {
            GenusKind::L => 1,
            GenusKind::W => 2,
            GenusKind::WPrime => 3,
            GenusKind::Psi(j) => j as usize,
        }
    }

    pub fn group(self) -> Group {
        match self.q_index() {
            1 => Group::Gamma0Lower2,
            2 => Group::Gamma0Upper2,
            _ => Group::GammaTheta,
        }
    }

    /// The F-function whose trivial-action specialization is minus this
    /// genus.
    pub fn f_kind(self) -> FKind {
        match self {
            GenusKind::L => FKind::L,
            GenusKind::W => FKind::W,
            GenusKind::WPrime => FKind::WPrime,
            GenusKind::Psi(j) => FKind::DR(j),
        }
    }

    fn check(self) -> Result<()> {
        match self {
            GenusKind::Psi(j) if !(1..=3).contains(&j) => Err(Error::Domain(format!("ψ index must be 1, 2 or 3, got {}", j))),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelHypotheses {
    #[serde(default)]
    pub c3_zero: bool,
    #[serde(default)]
    pub p1_zero: bool,
}

/// A closed odd-dimensional manifold with a map `g: M -> SO(N)`, given by its
/// characteristic numbers in tangent roots `y_j` and odd classes `c_d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelManifold {
    pub dim: u32,
    pub rank_n: i64,
    /// One root per `±y` pair; `(dim - 1)/2` entries, `"0"` for flat pairs.
    #[serde(default)]
    pub tangent_roots: Vec<String>,
    #[serde(default)]
    pub integrals: BTreeMap<String, f64>,
    #[serde(default)]
    pub hypotheses: ModelHypotheses,
}

#[derive(Clone, Debug, Serialize)]
pub struct GenusValue {
    pub which: String,
    pub trunc: i64,
    #[serde(skip)]
    pub series: QSeries<Complex64>,
    /// Coefficient of `q^{k/2}` at index `k`.
    pub coefficients: Vec<Complex64>,
}

impl ModelManifold {
    fn as_component(&self) -> FixedComponent {
        FixedComponent {
            name: "M".into(),
            dim: self.dim,
            tangent_roots: self.tangent_roots.clone(),
            normal: vec![],
            v_summands: vec![],
            v0_roots: vec![],
            v0_trivial: 0,
            integrals: self.integrals.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.trivial_action(false).validate()
    }

    pub fn prepare(&self) -> Result<PreparedComponent> {
        self.as_component().prepare()
    }

    /// The model with the trivial circle action, as fixed-point data. With
    /// `v_equals_tm` the auxiliary bundle is `TM`, otherwise `0`.
    pub fn trivial_action(&self, v_equals_tm: bool) -> EquivariantData {
        let mut c = self.as_component();
        if v_equals_tm {
            c.v0_roots = self.tangent_roots.clone();
            c.v0_trivial = 1;
        }
        EquivariantData {
            ambient_dim: self.dim,
            rank_n: self.rank_n,
            v_dim: if v_equals_tm { self.dim } else { 0 },
            group: StructureGroup::So,
            components: vec![c],
            hypotheses: Hypotheses { g_pi1_trivial: false, c3_zero: self.hypotheses.c3_zero, p1_zero: self.hypotheses.p1_zero },
            anomaly_n: None,
        }
    }

    /// Whether `c₃` pairs nontrivially with some characteristic number.
    pub fn c3_pairs_nontrivially(&self) -> Result<bool> {
        let p = self.prepare()?;
        let Some(&i) = p.classes.get(&3) else { return Ok(false) };
        let pairs = p.numbers.iter().any(|(m, v)| m[i] > 0 && v.norm() != 0.0);
        Ok(pairs)
    }

    /// Whether `p₁ = Σ y_j²` vanishes against the characteristic numbers.
    pub fn p1_vanishes(&self) -> Result<bool> {
        let p = self.prepare()?;
        let mut p1 = GradedElement::<Complex64>::zero(&p.table, p.cap);
        for y in &self.tangent_roots {
            if y.trim() == "0" {
                continue;
            }
            let g = GradedElement::<Complex64>::generator(&p.table, p.cap, y)?;
            p1 = p1.add(&g.mul(&g));
        }
        Ok(p1.vanishes_against(&p.numbers, p.cap, 1e-12))
    }
}

/// The even factor: `Â` or `2^{(dim-1)/2} L̂` times `ch(Θ_•(TM)_v)`.
pub fn even_form<C: EvalContext>(ctx: &C, which: GenusKind, m: &ModelManifold) -> Result<GradedElement<C::S>> {
    which.check()?;
    if m.dim.is_multiple_of(2) {
        return Err(Error::Domain(format!("model dimension must be odd, got {}", m.dim)));
    }
    let p = m.prepare()?;
    let order = (p.cap / 2) as usize;
    let zero = Complex64::new(0.0, 0.0);
    let reg = quotient_taylor(ctx, Quotient::RegularizedInverse, zero, order)?;
    let pair = match which {
        GenusKind::L => reg
            .mul(&quotient_taylor(ctx, Quotient::Ratio(ThetaKind::Theta1), zero, order)?)
            .scale(&ctx.lift(Complex64::new(2.0, 0.0))),
        GenusKind::W => reg.mul(&quotient_taylor(ctx, Quotient::Ratio(ThetaKind::Theta2), zero, order)?),
        GenusKind::WPrime => reg.mul(&quotient_taylor(ctx, Quotient::Ratio(ThetaKind::Theta3), zero, order)?),
        GenusKind::Psi(_) => reg,
    };
    let mut form = GradedElement::scalar(&p.table, p.cap, ctx.lift(Complex64::new(1.0, 0.0)));
    for y in &m.tangent_roots {
        let root = if y.trim() == "0" {
            GradedElement::zero(&p.table, p.cap)
        } else {
            GradedElement::generator(&p.table, p.cap, y)?
        };
        form = form.mul(&GradedElement::compose(&pair, &root)?);
    }
    Ok(form)
}

/// The form `Φ_L`, `Φ_W`, `Φ′_W` or `Ψ_{W,j}`: the even factor times
/// `ch(Q_j(E)_v, g, d, τ)`.
pub fn ls_witten_form<C: EvalContext>(ctx: &C, which: GenusKind, m: &ModelManifold) -> Result<GradedElement<C::S>> {
    let even = even_form(ctx, which, m)?;
    let p = m.prepare()?;
    Ok(ch_q_bundle(ctx, which.q_index(), m.rank_n, &p.classes, &p.table, p.cap)?.mul(&even))
}

fn genus_ctx<C: EvalContext>(ctx: &C, which: GenusKind, m: &ModelManifold) -> Result<C::S> {
    if m.dim % 4 != 3 {
        return Err(Error::Domain(format!("genera are defined for dim ≡ 3 (mod 4), got dim = {}", m.dim)));
    }
    let p = m.prepare()?;
    Ok(ls_witten_form(ctx, which, m)?.integrate(&p.numbers, p.cap))
}

/// q-expansion of the genus through `q^{(trunc-1)/2}`.
pub fn genus_pair(which: GenusKind, m: &ModelManifold, trunc: i64) -> Result<GenusValue> {
    m.validate()?;
    let series = genus_ctx(&SeriesCtx::new(trunc), which, m)?;
    let coefficients = (0..trunc).map(|k| series.coeff(k)).collect();
    Ok(GenusValue { which: which.name(), trunc, series, coefficients })
}

/// The genus at a point of the upper half plane.
pub fn genus_value(which: GenusKind, m: &ModelManifold, tau: Complex64) -> Result<Complex64> {
    genus_ctx(&NumericCtx::new(tau)?, which, m)
}

#[derive(Clone, Debug, Serialize)]
pub struct GenusModularityReport {
    pub which: String,
    pub weight: i64,
    pub c3_zero: bool,
    pub p1_zero: bool,
    /// Hypotheses of the modularity statement that fail on this model.
    pub violated: Vec<String>,
    pub report: ModularReport,
}

impl GenusModularityReport {
    /// Whether the law is expected, i.e. no hypothesis is violated.
    pub fn law_expected(&self) -> bool {
        self.violated.is_empty()
    }
}

/// Weight `(dim+1)/2` law under the genus's group. Violated hypotheses are
/// listed, not asserted.
pub fn genus_modularity_report(which: GenusKind, m: &ModelManifold, taus: &[Complex64]) -> Result<GenusModularityReport> {
    m.validate()?;
    which.check()?;
    let weight = (m.dim as i64 + 1) / 2;
    let c3_zero = !m.c3_pairs_nontrivially()?;
    let p1_zero = m.p1_vanishes()?;
    let mut violated = Vec::new();
    if !c3_zero {
        violated.push("c3(M,[g]) = 0".to_string());
    }
    if matches!(which, GenusKind::Psi(_)) && !p1_zero {
        violated.push("p1(M) = 0".to_string());
    }
    if m.hypotheses.c3_zero && !c3_zero {
        violated.push("declared c3_zero contradicts the characteristic numbers".into());
    }
    if m.hypotheses.p1_zero && !p1_zero {
        violated.push("declared p1_zero contradicts the characteristic numbers".into());
    }
    let report = modular_form_check(|tau| genus_value(which, m, tau), weight, which.group(), taus);
    Ok(GenusModularityReport { which: which.name(), weight, c3_zero, p1_zero, violated, report })
}

/// Genus minus the negated index series of the trivial-action data, per
/// q-order; the index identity predicts zero.
pub fn index_identity_residual(which: GenusKind, m: &ModelManifold, trunc: i64) -> Result<f64> {
    let g = genus_pair(which, m, trunc)?;
    let data = m.trivial_action(!matches!(which, GenusKind::Psi(_)));
    let (twist, odd) = crate::equivariant::index_twist(which.f_kind(), &data, trunc)?;
    let ind = crate::equivariant::lefschetz_index(&data, &twist, odd, 0.381_966_011_250_105_1)?;
    Ok((0..trunc).map(|k| (g.series.coeff(k) + ind.coeff(k)).norm()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modularity::tau_samples;
    use crate::odd_chern::transgression_coeffs;

    fn model(dim: u32, roots: &[&str], ints: &[(&str, f64)]) -> ModelManifold {
        ModelManifold {
            dim,
            rank_n: 8,
            tangent_roots: roots.iter().map(|s| s.to_string()).collect(),
            integrals: ints.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            hypotheses: ModelHypotheses::default(),
        }
    }

    fn seven() -> ModelManifold {
        model(7, &["y1", "y2", "y3"], &[("c7", 2.0), ("c1*y1^3", 0.0)])
    }

    fn eleven(p1_zero: bool) -> ModelManifold {
        let b = if p1_zero { -0.75 } else { 0.4 };
        model(
            11,
            &["y1", "y2", "y3", "y4", "y5"],
            &[("c11", 1.5), ("c7*y1^2", 0.75), ("c7*y2^2", b), ("c7*y1*y2", -0.3)],
        )
    }

    #[test]
    fn flat_model_form_is_constant() {
        let m = model(7, &["0", "0", "0"], &[]);
        let ctx = SeriesCtx::new(5);
        let w = even_form(&ctx, GenusKind::W, &m).unwrap();
        assert_eq!(w.terms().count(), 1);
        assert!(w.constant_term().approx_eq(&QSeries::constant(Complex64::new(1.0, 0.0)).truncated(5), 1e-15));
        let l = even_form(&ctx, GenusKind::L, &m).unwrap();
        assert!(l.constant_term().approx_eq(&QSeries::constant(Complex64::new(8.0, 0.0)).truncated(5), 1e-15));
        // The odd character has no rank term, so the full form has no degree-0 part.
        let f = ls_witten_form(&ctx, GenusKind::W, &m).unwrap();
        assert!(f.component(0).is_zero());
        assert_eq!(genus_pair(GenusKind::W, &m, 5).unwrap().series.coeff(0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn three_dimensional_oracle() {
        let m = model(3, &["y"], &[("c3", 0.7)]);
        let g = genus_pair(GenusKind::W, &m, 7).unwrap();
        let lam = transgression_coeffs(2, 3, 7, Some(8)).unwrap().get(3).to_complex();
        for k in 0..7 {
            assert!((g.series.coeff(k) - lam.coeff(k) * 0.7).norm() < 1e-12, "k={}", k);
        }
    }

    #[test]
    fn psi_on_seven_dimensional_model() {
        let g = genus_pair(GenusKind::Psi(2), &seven(), 7).unwrap();
        let lam = transgression_coeffs(2, 7, 7, Some(8)).unwrap().get(7).to_complex();
        for k in 0..7 {
            assert!((g.series.coeff(k) - lam.coeff(k) * 2.0).norm() < 1e-12);
        }
    }

    #[test]
    fn wrong_dimension_rejected() {
        let m = model(5, &["y1", "y2"], &[]);
        assert!(matches!(genus_pair(GenusKind::W, &m, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn genus_is_linear_in_the_numbers() {
        let a = eleven(false);
        let mut b = eleven(true);
        b.integrals.insert("c7*y3^2".into(), 1.25);
        let mut sum = a.clone();
        for (k, v) in &b.integrals {
            *sum.integrals.entry(k.clone()).or_insert(0.0) += 2.0 * v;
        }
        let (ga, gb, gs) = (
            genus_pair(GenusKind::L, &a, 5).unwrap().series,
            genus_pair(GenusKind::L, &b, 5).unwrap().series,
            genus_pair(GenusKind::L, &sum, 5).unwrap().series,
        );
        for k in 0..5 {
            let scale = gs.coeff(k).norm().max(1.0);
            assert!((ga.coeff(k) + gb.coeff(k) * 2.0 - gs.coeff(k)).norm() < 1e-10 * scale);
        }
    }

    #[test]
    fn modular_phi_genera() {
        let taus = tau_samples(12);
        for m in [seven(), eleven(false)] {
            for which in [GenusKind::L, GenusKind::W, GenusKind::WPrime] {
                let r = genus_modularity_report(which, &m, &taus).unwrap();
                assert!(r.law_expected());
                assert!(r.report.passes(1e-8), "{:?} dim {}: {:?}", which, m.dim, r.report);
            }
        }
    }

    #[test]
    fn psi_needs_p1_zero() {
        let taus = tau_samples(8);
        let good = genus_modularity_report(GenusKind::Psi(2), &eleven(true), &taus).unwrap();
        assert!(good.p1_zero && good.report.passes(1e-8), "{:?}", good.report);
        let bad = genus_modularity_report(GenusKind::Psi(2), &eleven(false), &taus).unwrap();
        assert!(!bad.law_expected());
        assert!(!bad.report.passes(1e-4));
    }

    #[test]
    fn c3_violation_is_flagged() {
        let mut m = seven();
        m.integrals.insert("c3*y1^2".into(), 1.0);
        let r = genus_modularity_report(GenusKind::W, &m, &tau_samples(4)).unwrap();
        assert!(!r.c3_zero && !r.law_expected());
    }

    #[test]
    fn genus_is_minus_trivial_action_index() {
        for which in [GenusKind::L, GenusKind::W, GenusKind::WPrime, GenusKind::Psi(1), GenusKind::Psi(2), GenusKind::Psi(3)] {
            let m = eleven(false);
            let r = index_identity_residual(which, &m, 4).unwrap();
            assert!(r < 1e-9, "{:?}: {}", which, r);
        }
    }
}

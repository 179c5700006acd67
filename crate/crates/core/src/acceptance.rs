//! The acceptance suite: twelve property checks with fixed tolerances, shared
//! by the `acceptance` test target and the `selftest` subcommand.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::builtin;
use crate::equivariant::{
    f_function, index_twist, lefschetz_index, rigidity_scan, signature_rational, t_samples, EquivariantData, FKind,
};
use crate::error::{Error, Result};
use crate::genera::{genus_modularity_report, GenusKind, ModelManifold};
use crate::modularity::{jacobi_law_check, jacobi_samples, modular_form_check, tau_samples, Group, JacobiSpec};
use crate::odd_chern::quadrature::{diagonal_loop, kron, su2_identity};
use crate::odd_chern::{degree_c3, tensor_odd_ch, transgression_in_ctx, winding_c1, LoopMap, OddChConvention};
use crate::series::ring::Ring;
use crate::series::{Generator, GeneratorTable, GradedElement};
use crate::theta::{theta_eval_tol, theta_prime0, NumericCtx, ThetaKind};
use crate::witten_bundles::{lambda_series, q_bundle_qexp, sym_series, theta_bundle_qexp, KElement, RankTable, ThetaBundle, E, TM, V};

/// Product tolerance used for every numeric theta evaluation in the suite.
pub const PRODUCT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// Worst residual found (0 for exact checks that hold).
    pub residual: f64,
    pub tolerance: f64,
    pub elapsed_s: f64,
    /// Runtime budget in seconds, if the criterion has one.
    pub budget_s: Option<f64>,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{:>2}] {}: residual {:.3e} (tol {:.0e}), {:.2} s",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.residual,
            self.tolerance,
            self.elapsed_s
        )?;
        if let Some(b) = self.budget_s {
            write!(f, " (budget {} s)", b)?;
        }
        if !self.detail.is_empty() {
            write!(f, "; {}", self.detail)?;
        }
        Ok(())
    }
}

struct Outcome {
    residual: f64,
    ok: bool,
    detail: String,
}

struct Criterion {
    id: u8,
    name: &'static str,
    tolerance: f64,
    budget_s: Option<f64>,
    run: fn(f64) -> Result<Outcome>,
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "theta quotient S-laws", tolerance: 1e-9, budget_s: Some(10.0), run: theta_quotient_laws },
    Criterion { id: 2, name: "theta lattice shifts", tolerance: 1e-9, budget_s: None, run: theta_shift_laws },
    Criterion { id: 3, name: "exact K-theory coefficients", tolerance: 0.0, budget_s: Some(1.0), run: k_theory_coefficients },
    Criterion { id: 4, name: "lambda-ring identities", tolerance: 0.0, budget_s: None, run: lambda_ring_identities },
    Criterion { id: 5, name: "transgression modularity", tolerance: 1e-8, budget_s: None, run: transgression_modularity },
    Criterion { id: 6, name: "degree-3 S-mixing defect", tolerance: 1e-8, budget_s: None, run: s_mixing_defect },
    Criterion { id: 7, name: "rigidity on the S3 rotation", tolerance: 1e-8, budget_s: Some(60.0), run: s3_rigidity },
    Criterion { id: 8, name: "signature rigidity", tolerance: 1e-7, budget_s: None, run: signature_constancy },
    Criterion { id: 9, name: "Jacobi-form laws", tolerance: 1e-7, budget_s: None, run: jacobi_laws },
    Criterion { id: 10, name: "genus modularity", tolerance: 1e-8, budget_s: None, run: genus_modularity },
    Criterion { id: 11, name: "quadrature oracles", tolerance: 1e-6, budget_s: None, run: quadrature_oracles },
    Criterion { id: 12, name: "index consistency", tolerance: 1e-9, budget_s: None, run: index_consistency },
];

/// `(id, name)` of every criterion, in order.
pub fn criteria() -> Vec<(u8, &'static str)> {
    CRITERIA.iter().map(|c| (c.id, c.name)).collect()
}

pub fn run(id: u8) -> Result<CriterionResult> {
    let c = CRITERIA
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| Error::Domain(format!("no acceptance criterion {} (known: 1..={})", id, CRITERIA.len())))?;
    let start = Instant::now();
    let out = (c.run)(c.tolerance);
    let elapsed_s = start.elapsed().as_secs_f64();
    let in_budget = c.budget_s.is_none_or(|b| elapsed_s < b);
    let (passed, residual, mut detail) = match out {
        Ok(o) => (o.ok && in_budget, o.residual, o.detail),
        Err(e) => (false, f64::INFINITY, format!("error: {}", e)),
    };
    if !in_budget {
        detail = format!("over the runtime budget; {}", detail);
    }
    Ok(CriterionResult { id: c.id, name: c.name, passed, residual, tolerance: c.tolerance, elapsed_s, budget_s: c.budget_s, detail })
}

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA.iter().map(|c| run(c.id).expect("criterion ids are listed")).collect()
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

fn i_unit() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

fn data(name: &str) -> Result<EquivariantData> {
    Ok(builtin(name)?.equivariant()?.clone())
}

fn model(name: &str) -> Result<ModelManifold> {
    Ok(builtin(name)?.model()?.clone())
}

/// Points in the disc `|y| < radius` on a golden-angle spiral.
fn disc_samples(count: usize, radius: f64) -> Vec<Complex64> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (1..=count).map(|k| Complex64::from_polar(radius * (k as f64 / count as f64).sqrt(), golden * k as f64)).collect()
}

fn theta(kind: ThetaKind, v: Complex64, tau: Complex64) -> Result<Complex64> {
    theta_eval_tol(kind, v, tau, PRODUCT_TOL)
}

fn theta_quotient_laws(tol: f64) -> Result<Outcome> {
    let i = i_unit();
    let mut worst: f64 = 0.0;
    let taus = tau_samples(25);
    let ys = disc_samples(25, 0.45);
    let ts = t_samples(25, 0.05, 0.45, 1e-3);
    for (k, (&tau, &y)) in taus.iter().zip(&ys).enumerate() {
        let s = -1.0 / tau;
        let (p_s, p) = (theta_prime0(s)?, theta_prime0(tau)?);
        // y θ'(0,-1/τ)/θ(y,-1/τ) = e^{-πiτy²} τy θ'(0,τ)/θ(τy,τ)
        let lhs = y * p_s / theta(ThetaKind::Theta, y, s)?;
        let rhs = (-i * PI * tau * y * y).exp() * tau * y * p / theta(ThetaKind::Theta, tau * y, tau)?;
        worst = worst.max(rel(lhs, rhs));
        // the same law at x + γt/τ
        let gamma = (k % 3 + 1) as f64;
        let (x, t) = (y * 0.3, ts[k]);
        let arg = x + gamma * t / tau;
        let lhs = p_s / theta(ThetaKind::Theta, arg, s)?;
        let rhs = (-i * PI * tau * arg * arg).exp() * tau * p / theta(ThetaKind::Theta, tau * x + gamma * t, tau)?;
        worst = worst.max(rel(lhs, rhs));
        // θ₁(u + νt/τ, -1/τ)/θ₁(0, -1/τ) = e^{πiτ(u + νt/τ)²} θ₂(τu + νt, τ)/θ₂(0, τ)
        let lhs = theta(ThetaKind::Theta1, arg, s)? / theta(ThetaKind::Theta1, Complex64::new(0.0, 0.0), s)?;
        let rhs = (i * PI * tau * arg * arg).exp() * theta(ThetaKind::Theta2, tau * x + gamma * t, tau)?
            / theta(ThetaKind::Theta2, Complex64::new(0.0, 0.0), tau)?;
        worst = worst.max(rel(lhs, rhs));
    }
    Ok(Outcome { residual: worst, ok: worst < tol, detail: "25 (y, τ) samples, three quotient laws".into() })
}

fn theta_shift_laws(tol: f64) -> Result<Outcome> {
    let i = i_unit();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let shifts = [-4i64, -2, 2, 4];
    let xs = disc_samples(4, 0.2);
    let ts = t_samples(4, 0.05, 0.45, 1e-3);
    // Im τ stays below 1.1 so that e^{π γ²λ² Im τ} fits in a double.
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let taus: Vec<Complex64> =
        (1..=4).map(|k| Complex64::new(-0.4 + 0.8 * (k as f64 * phi).fract(), 0.6 + 0.45 * (k as f64 * 0.7548776662).fract())).collect();
    for (s, &tau) in taus.iter().enumerate() {
        let (x, t) = (xs[s], ts[s]);
        for gamma in 1..=3i64 {
            let g = gamma as f64;
            for &lam in &shifts {
                for &mu in &shifts {
                    let l = lam as f64;
                    let factor = (-i * PI * (g * g * (l * l * tau + 2.0 * l * t) + 2.0 * g * l * x)).exp();
                    let shifted = x + g * (t + l * tau + mu as f64);
                    for kind in [ThetaKind::Theta, ThetaKind::Theta1, ThetaKind::Theta2, ThetaKind::Theta3] {
                        let lhs = theta(kind, shifted, tau)?;
                        let rhs = factor * theta(kind, x + g * t, tau)?;
                        worst = worst.max(rel(lhs, rhs));
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(Outcome { residual: worst, ok: worst < tol, detail: format!("{} shifted evaluations, all four thetas", count) })
}

fn k_theory_coefficients(_: f64) -> Result<Outcome> {
    let ranks = RankTable::new(&[(TM, 11), (V, 6), (E, 8)]);
    let a = theta_bundle_qexp(ThetaBundle::Two, TM, V, &ranks, 5, false)?;
    let b = q_bundle_qexp(2, 8, 5, false)?;
    let expected_a = [KElement::one(), KElement::base(V).neg(), KElement::base(TM).add(&KElement::lambda(V, 2))];
    let expected_b = [KElement::one(), KElement::base(E).neg(), KElement::lambda(E, 2)];
    let mut bad = Vec::new();
    for k in 0..3 {
        if a.coeff(k) != expected_a[k as usize] {
            bad.push(format!("A{} = {}", k, a.coeff(k)));
        }
        if b.coeff(k) != expected_b[k as usize] {
            bad.push(format!("B{} = {}", k, b.coeff(k)));
        }
    }
    let ok = bad.is_empty();
    let detail = if ok { "A0..A2 and B0..B2 equal as canonical K-elements".into() } else { bad.join(", ") };
    Ok(Outcome { residual: if ok { 0.0 } else { 1.0 }, ok, detail })
}

fn t_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let n = a.len().min(b.len());
    let mut out = vec![BigInt::zero(); n];
    for i in 0..n {
        for j in 0..n - i {
            out[i + j] += &a[i] * &b[j];
        }
    }
    out
}

fn random_element(rng: &mut ChaCha8Rng, names: &[&str]) -> KElement {
    let mut w = KElement::trivial(rng.gen_range(-2..=2));
    for n in names {
        let k = rng.gen_range(-2..=2);
        w = w.add(&KElement::base(n).mul(&KElement::trivial(k)));
    }
    w
}

/// `S_t · Λ_{-t} = 1` and `Λ_t(W - W') Λ_t(W') = Λ_t(W)`, compared through
/// the splitting-principle character at random integer eigenvalues.
fn lambda_ring_identities(_: f64) -> Result<Outcome> {
    const T: i64 = 6;
    let names = ["A", "B", "C"];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut failures = Vec::new();
    for inst in 0..20 {
        let mut roots = BTreeMap::new();
        for n in names {
            let r = rng.gen_range(1..=4);
            roots.insert(n.to_string(), (0..r).map(|_| BigInt::from(rng.gen_range(-3i64..=3))).collect::<Vec<_>>());
        }
        let w = random_element(&mut rng, &names);
        let w2 = random_element(&mut rng, &names);
        let ch = |s: Vec<KElement>| -> Result<Vec<BigInt>> { s.iter().map(|c| c.character(&roots)).collect() };
        let lam_neg: Vec<BigInt> =
            ch(lambda_series(&w, T)?)?.into_iter().enumerate().map(|(i, c)| if i % 2 == 1 { -c } else { c }).collect();
        let prod = t_mul(&ch(sym_series(&w, T)?)?, &lam_neg);
        let unit: Vec<BigInt> = (0..=T).map(|i| if i == 0 { BigInt::one() } else { BigInt::zero() }).collect();
        if prod != unit {
            failures.push(format!("instance {}: S_t Λ_-t = {:?}", inst, prod));
        }
        let lhs = t_mul(&ch(lambda_series(&w.sub(&w2), T)?)?, &ch(lambda_series(&w2, T)?)?);
        if lhs != ch(lambda_series(&w, T)?)? {
            failures.push(format!("instance {}: Λ_t(W - W') Λ_t(W') ≠ Λ_t(W)", inst));
        }
    }
    let ok = failures.is_empty();
    let detail = if ok { "20 random instances, exact through t^6".into() } else { failures.join("; ") };
    Ok(Outcome { residual: if ok { 0.0 } else { 1.0 }, ok, detail })
}

fn transgression_group(j: usize) -> Group {
    match j {
        1 => Group::Gamma0Lower2,
        2 => Group::Gamma0Upper2,
        _ => Group::GammaTheta,
    }
}

fn transgression_modularity(tol: f64) -> Result<Outcome> {
    let taus = tau_samples(12);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut notes = Vec::new();
    for j in 1..=3 {
        let f = |tau: Complex64| transgression_in_ctx(&NumericCtx::new(tau)?, j, 7, Some(8));
        let r = modular_form_check(f, 4, transgression_group(j), &taus);
        worst = worst.max(r.residual).max(r.character_spread);
        ok &= r.passes(tol) && !r.identically_zero;
        let chis: Vec<String> =
            r.generators.iter().map(|g| format!("{}: {}", g.word, g.character.map_or("-".into(), |c| format!("{:.6}", c)))).collect();
        notes.push(format!("j={} {} [{}]", j, r.group, chis.join(", ")));
    }
    Ok(Outcome { residual: worst, ok, detail: notes.join("; ") })
}

fn s_mixing_defect(tol: f64) -> Result<Outcome> {
    let i = i_unit();
    let n = 8i64;
    let lam = |j: usize, tau: Complex64| -> Result<Complex64> {
        transgression_in_ctx(&NumericCtx::new(tau)?, j, 3, if j == 1 { Some(n) } else { None })
    };
    let mut worst: f64 = 0.0;
    for tau in tau_samples(12) {
        let defect = tau * i / (24.0 * PI);
        let lhs = lam(1, -1.0 / tau)?;
        let rhs = (tau * tau * lam(2, tau)? - defect) * 2f64.powi((n / 2) as i32);
        worst = worst.max(rel(lhs, rhs));
        let lhs = lam(3, -1.0 / tau)?;
        let rhs = tau * tau * lam(3, tau)? - defect;
        worst = worst.max(rel(lhs, rhs));
    }
    Ok(Outcome { residual: worst, ok: worst < tol, detail: format!("12 τ samples, N = {}, j = 1 and j = 3 laws", n) })
}

/// The prescribed S³ dataset is structurally zero (see the notes in its
/// file), so the same scan also runs on HP² × S⁷ where the values are not.
fn s3_rigidity(tol: f64) -> Result<Outcome> {
    let ts = t_samples(20, 0.02, 0.48, 1e-3);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut notes = Vec::new();
    for name in ["s3", "hp2_s7"] {
        let d = data(name)?;
        for kind in [FKind::W, FKind::WPrime] {
            let r = rigidity_scan(kind, &d, &ts, 7, tol)?;
            ok &= r.rigid && r.t_samples.len() == 20;
            let size = r.coefficients.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
            worst = worst.max(r.max_variation / size.max(1.0));
            notes.push(format!("{} {} through q^3 over {} t, max |coeff| {:.3e}", name, r.kind, r.t_samples.len(), size));
        }
    }
    Ok(Outcome { residual: worst, ok, detail: notes.join("; ") })
}

fn signature_constancy(tol: f64) -> Result<Outcome> {
    let eps = 1e-6;
    let mut zs: Vec<Complex64> =
        [0.5, 1.0 + eps, 1.0 - eps, 10.0, 1e6].iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut k = 1;
    while zs.len() < 50 {
        let r = 0.2 * 50f64.powf((k as f64 * 0.618_033_988_749_895).fract());
        zs.push(Complex64::from_polar(r, golden * k as f64));
        k += 1;
    }
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for name in ["s3", "hp2_s7", "cp2_s7"] {
        let d = data(name)?;
        let values = zs
            .par_iter()
            .map(|&z| signature_rational(&d, z, OddChConvention::FromDegreeOne))
            .collect::<Result<Vec<_>>>()?;
        let f0 = values[0];
        let scale = f0.norm().max(1.0);
        worst = worst.max(values.iter().map(|v| (v - f0).norm() / scale).fold(0.0, f64::max));
        notes.push(format!("{}: f = {:.12}", name, f0.re));
    }
    Ok(Outcome { residual: worst, ok: worst < tol, detail: format!("50 z samples; {}", notes.join(", ")) })
}

fn jacobi_laws(tol: f64) -> Result<Outcome> {
    let samples = jacobi_samples(8);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut notes = Vec::new();
    for name in ["s3", "hp2_s7", "hp2_s7_n1"] {
        let d = data(name)?;
        let n = d.anomaly_n.ok_or_else(|| Error::Data(format!("{} declares no anomaly n", name)))?;
        let spec = JacobiSpec {
            index: n as f64 / 2.0,
            weight: (d.ambient_dim as i64 + 1) / 2,
            group: Group::Gamma0Upper2,
            lattice: JacobiSpec::even_lattice(),
        };
        let f = |t, tau| crate::equivariant::f_value(FKind::W, &d, t, tau);
        let r = jacobi_law_check(f, &spec, &samples);
        worst = worst.max(r.residual());
        ok &= r.passes(tol);
        let mut note = format!("{} (m = {}, l = {}): {:.2e}", name, spec.index, spec.weight, r.residual());
        if r.modular.identically_zero {
            note.push_str(" (vanishes)");
        } else {
            let wrong = JacobiSpec { weight: spec.weight + 1, ..spec.clone() };
            let control = jacobi_law_check(f, &wrong, &samples).residual();
            ok &= control > 1e-2;
            note.push_str(&format!(", wrong weight {:.2e}", control));
        }
        notes.push(note);
    }
    Ok(Outcome { residual: worst, ok, detail: notes.join("; ") })
}

fn genus_modularity(tol: f64) -> Result<Outcome> {
    let m = model("model7")?;
    let taus = tau_samples(12);
    let mut worst: f64 = 0.0;
    let mut ok = m.hypotheses.c3_zero;
    let mut notes = Vec::new();
    for which in [GenusKind::L, GenusKind::W, GenusKind::WPrime] {
        let r = genus_modularity_report(which, &m, &taus)?;
        worst = worst.max(r.report.residual).max(r.report.character_spread);
        ok &= r.report.passes(tol) && !r.report.identically_zero;
        notes.push(format!("{} weight {} over {}", r.which, r.weight, r.report.group));
    }
    Ok(Outcome { residual: worst, ok, detail: notes.join("; ") })
}

fn quadrature_oracles(tol: f64) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut notes = Vec::new();
    for ks in [vec![0], vec![1], vec![-3, 0], vec![2, 1, -1], vec![5, 0, 0, 0]] {
        let w = winding_c1(&LoopMap::circle(256, diagonal_loop(&ks))?)?;
        worst = worst.max(w.residual);
        ok &= w.nearest == ks.iter().sum::<i64>();
    }
    let constant = winding_c1(&LoopMap::circle(256, |_| crate::odd_chern::quadrature::CMatrix::identity(3, 3))?)?;
    ok &= constant.nearest == 0;
    worst = worst.max(constant.residual);
    notes.push("windings integral at grid 256".to_string());

    let d24 = degree_c3(&LoopMap::sphere3(24, su2_identity)?)?;
    let d48 = degree_c3(&LoopMap::sphere3(48, su2_identity)?)?;
    let drift = (d48.degree - d24.degree).abs().max((d48.degree - 1.0).abs());
    ok &= drift < 1e-3;
    notes.push(format!("SU(2) degree {:.12} (24^3) -> {:.12} (48^3)", d24.degree, d48.degree));

    // g₁ ⊗ g₂ with ranks (2, 3) and windings (1, 2): 3·1 + 2·2 = 7.
    let g1 = diagonal_loop(&[1, 0]);
    let g2 = diagonal_loop(&[2, 0, 0]);
    let w1 = winding_c1(&LoopMap::circle(256, &g1)?)?;
    let w2 = winding_c1(&LoopMap::circle(256, &g2)?)?;
    let w12 = winding_c1(&LoopMap::circle(256, |phi| kron(&g1(phi), &g2(phi)))?)?;
    let table = GeneratorTable::new(vec![Generator::new("c1", 1)])?;
    let c1 = GradedElement::<BigRational>::generator(&table, 1, "c1")?;
    let int = |k: i64| BigRational::from_integer(BigInt::from(k));
    let formula = tensor_odd_ch(&[(2, c1.scale(&int(w1.nearest))), (3, c1.scale(&int(w2.nearest)))])?;
    let predicted = formula.coeff(&[1]);
    ok &= predicted == int(w12.nearest) && w12.nearest == 7;
    worst = worst.max(w12.residual);
    notes.push(format!("tensor winding {} vs formula {}", w12.nearest, predicted));
    Ok(Outcome { residual: worst, ok: ok && worst < tol, detail: notes.join("; ") })
}

fn index_consistency(tol: f64) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut notes = Vec::new();
    let trunc = 5;
    for name in ["s3", "hp2_s7", "empty"] {
        let d = data(name)?;
        let mut size: f64 = 0.0;
        for kind in [FKind::L, FKind::W, FKind::WPrime] {
            for t in t_samples(3, 0.05, 0.45, 1e-3) {
                let f = f_function(kind, &d, t, trunc)?;
                let (tw, odd) = index_twist(kind, &d, trunc)?;
                let ind = lefschetz_index(&d, &tw, odd, t)?;
                for k in 0..trunc {
                    let (a, b) = (f.coeff(k), ind.coeff(k));
                    size = size.max(a.norm());
                    worst = worst.max((a - b).norm() / a.norm().max(1.0));
                }
            }
        }
        if name == "empty" {
            ok &= size == 0.0;
        }
        notes.push(format!("{}: max |coeff| {:.3e}", name, size));
    }
    Ok(Outcome { residual: worst, ok: ok && worst < tol, detail: notes.join("; ") })
}

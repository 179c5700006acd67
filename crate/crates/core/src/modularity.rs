//! Congruence subgroups of SL₂(ℤ) and numerical verification of modular and
//! Jacobi transformation laws.
//!
//! Characters are estimated from the data as ratios and reported, never
//! assumed trivial. Residuals are relative to the size of the transformed
//! value.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Values below this modulus are treated as zero when estimating characters.
pub const ZERO_FLOOR: f64 = 1e-280;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ModularMatrix {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl ModularMatrix {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        if a * d - b * c != 1 {
            return Err(Error::Domain(format!("[[{}, {}], [{}, {}]] has determinant {} ≠ 1", a, b, c, d, a * d - b * c)));
        }
        Ok(ModularMatrix { a, b, c, d })
    }

    pub const IDENTITY: ModularMatrix = ModularMatrix { a: 1, b: 0, c: 0, d: 1 };
    pub const S: ModularMatrix = ModularMatrix { a: 0, b: -1, c: 1, d: 0 };
    pub const T: ModularMatrix = ModularMatrix { a: 1, b: 1, c: 0, d: 1 };

    pub fn mul(&self, o: &Self) -> Self {
        ModularMatrix {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Self {
        ModularMatrix { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Product of a word in `S` and `T`, e.g. `"ST2ST"` or `"T^2STS"`.
    pub fn word(w: &str) -> Result<Self> {
        let mut out = Self::IDENTITY;
        let chars: Vec<char> = w.chars().filter(|c| !c.is_whitespace() && *c != '^').collect();
        let mut i = 0;
        while i < chars.len() {
            let g = match chars[i] {
                'S' => Self::S,
                'T' => Self::T,
                c => return Err(Error::Domain(format!("unknown letter {:?} in word {:?}", c, w))),
            };
            i += 1;
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let e: u32 = if start == i { 1 } else { chars[start..i].iter().collect::<String>().parse().unwrap_or(1) };
            for _ in 0..e {
                out = out.mul(&g);
            }
        }
        Ok(out)
    }

    /// `(aτ + b)/(cτ + d)`.
    pub fn act(&self, tau: Complex64) -> Complex64 {
        (tau * self.a as f64 + self.b as f64) / self.automorphy(tau)
    }

    /// `cτ + d`.
    pub fn automorphy(&self, tau: Complex64) -> Complex64 {
        tau * self.c as f64 + self.d as f64
    }
}

impl fmt::Display for ModularMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Group {
    /// `c ≡ 0 (mod 2)`.
    Gamma0Lower2,
    /// `b ≡ 0 (mod 2)`.
    Gamma0Upper2,
    /// Congruent to `I` or `[[0,1],[1,0]]` mod 2.
    GammaTheta,
    Sl2z,
}

impl Group {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gamma-lower-0-2" | "gamma_0(2)" | "gamma0-2" | "g0" => Ok(Group::Gamma0Lower2),
            "gamma-upper-0-2" | "gamma^0(2)" | "g0u" => Ok(Group::Gamma0Upper2),
            "gamma-theta" | "theta" => Ok(Group::GammaTheta),
            "sl2z" | "sl2" => Ok(Group::Sl2z),
            _ => Err(Error::Domain(format!(
                "unknown group {:?} (gamma-lower-0-2, gamma-upper-0-2, gamma-theta, sl2z)",
                s
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Group::Gamma0Lower2 => "gamma-lower-0-2",
            Group::Gamma0Upper2 => "gamma-upper-0-2",
            Group::GammaTheta => "gamma-theta",
            Group::Sl2z => "sl2z",
        }
    }

    pub fn contains(self, m: &ModularMatrix) -> bool {
        if m.a * m.d - m.b * m.c != 1 {
            return false;
        }
        let even = |x: i64| x.rem_euclid(2) == 0;
        match self {
            Group::Gamma0Lower2 => even(m.c),
            Group::Gamma0Upper2 => even(m.b),
            Group::GammaTheta => {
                (even(m.b) && even(m.c) && !even(m.a) && !even(m.d))
                    || (even(m.a) && even(m.d) && !even(m.b) && !even(m.c))
            }
            Group::Sl2z => true,
        }
    }

    /// Generator words and their matrices.
    pub fn generators(self) -> Vec<(&'static str, ModularMatrix)> {
        let words: &[&'static str] = match self {
            Group::Gamma0Lower2 => &["T", "ST2ST"],
            Group::Gamma0Upper2 => &["STS", "T2STS"],
            Group::GammaTheta => &["S", "T2"],
            Group::Sl2z => &["S", "T"],
        };
        words.iter().map(|w| (*w, ModularMatrix::word(w).expect("generator words are well formed"))).collect()
    }
}

/// Deterministic `τ` samples with `|τ| ∈ [0.9, 2]`, `|Re τ| <= 0.45`.
pub fn tau_samples(count: usize) -> Vec<Complex64> {
    let (p1, p2) = (0.618_033_988_749_894_9, 0.754_877_666_246_692_7);
    (1..=count)
        .map(|k| {
            let r = 0.9 + 1.1 * (k as f64 * p1).fract();
            let x = -0.45 + 0.9 * (k as f64 * p2).fract();
            Complex64::new(x, (r * r - x * x).sqrt())
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct GeneratorReport {
    pub word: String,
    pub matrix: ModularMatrix,
    /// Mean of the sampled ratios; `None` if the function vanished.
    pub character: Option<Complex64>,
    /// Largest deviation of a sampled ratio from `character`.
    pub character_spread: f64,
    pub residual: f64,
    pub samples: usize,
    pub skipped: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModularReport {
    pub weight: i64,
    pub group: String,
    pub generators: Vec<GeneratorReport>,
    pub residual: f64,
    pub character_spread: f64,
    /// Set when the function vanished at every sample.
    pub identically_zero: bool,
    pub notes: Vec<String>,
}

impl ModularReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.residual < tol && self.character_spread < tol
    }
}

/// Fits `lhs_i ≈ χ base_i` and reports `χ`, its spread and the relative
/// residual `max |lhs - χ base| / |lhs|`.
fn fit_character(pairs: &[(Complex64, Complex64)]) -> (Option<Complex64>, f64, f64) {
    let ratios: Vec<Complex64> =
        pairs.iter().filter(|(l, b)| l.norm() > ZERO_FLOOR && b.norm() > ZERO_FLOOR).map(|(l, b)| l / b).collect();
    if ratios.is_empty() {
        let zero = pairs.iter().all(|(l, b)| l.norm() <= ZERO_FLOOR && b.norm() <= ZERO_FLOOR);
        return (None, 0.0, if zero { 0.0 } else { f64::INFINITY });
    }
    let chi = ratios.iter().sum::<Complex64>() / ratios.len() as f64;
    let spread = ratios.iter().map(|r| (r - chi).norm()).fold(0.0, f64::max);
    let residual = pairs
        .iter()
        .map(|(l, b)| {
            let scale = l.norm().max((chi * b).norm());
            if scale <= ZERO_FLOOR {
                0.0
            } else {
                (l - chi * b).norm() / scale
            }
        })
        .fold(0.0, f64::max);
    (Some(chi), spread, residual)
}

/// Checks `f(𝒢τ) = χ(𝒢)(cτ+d)^k f(τ)` for the group's generators.
pub fn modular_form_check<F>(f: F, weight: i64, group: Group, taus: &[Complex64]) -> ModularReport
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let mut generators = Vec::new();
    for (word, g) in group.generators() {
        let evals: Vec<std::result::Result<(Complex64, Complex64), String>> = taus
            .par_iter()
            .map(|&tau| {
                let lhs = f(g.act(tau)).map_err(|e| format!("τ = {}: {}", tau, e))?;
                let base = f(tau).map_err(|e| format!("τ = {}: {}", tau, e))? * g.automorphy(tau).powi(weight as i32);
                Ok((lhs, base))
            })
            .collect();
        let (pairs, skipped): (Vec<_>, Vec<_>) = evals.into_iter().partition(|r| r.is_ok());
        let pairs: Vec<(Complex64, Complex64)> = pairs.into_iter().map(|r| r.unwrap()).collect();
        let skipped: Vec<String> = skipped.into_iter().map(|r| r.unwrap_err()).collect();
        let (character, character_spread, residual) =
            if pairs.is_empty() { (None, f64::INFINITY, f64::INFINITY) } else { fit_character(&pairs) };
        generators.push(GeneratorReport {
            word: word.to_string(),
            matrix: g,
            character,
            character_spread,
            residual,
            samples: pairs.len(),
            skipped,
        });
    }
    summarize(weight, group, generators)
}

fn summarize(weight: i64, group: Group, generators: Vec<GeneratorReport>) -> ModularReport {
    let residual = generators.iter().map(|g| g.residual).fold(0.0, f64::max);
    let character_spread = generators.iter().map(|g| g.character_spread).fold(0.0, f64::max);
    let identically_zero = generators.iter().all(|g| g.character.is_none() && g.residual == 0.0);
    let mut notes = Vec::new();
    if identically_zero {
        notes.push("function vanishes at every sample; character indeterminate".into());
    }
    ModularReport { weight, group: group.name().into(), generators, residual, character_spread, identically_zero, notes }
}

/// Index, weight and group of a Jacobi form, with lattice shifts `(λ, μ)`.
#[derive(Clone, Debug, Serialize)]
pub struct JacobiSpec {
    /// Index `m`; half-integers allowed.
    pub index: f64,
    pub weight: i64,
    pub group: Group,
    pub lattice: Vec<(i64, i64)>,
}

impl JacobiSpec {
    /// Shifts in `(2ℤ)²` used by default.
    pub fn even_lattice() -> Vec<(i64, i64)> {
        vec![(2, 0), (0, 2), (-2, 0), (2, 2), (-2, 4), (4, -2)]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeReport {
    pub lambda: i64,
    pub mu: i64,
    pub residual: f64,
    pub samples: usize,
    pub skipped: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JacobiReport {
    pub modular: ModularReport,
    pub lattice: Vec<LatticeReport>,
    pub lattice_residual: f64,
}

impl JacobiReport {
    pub fn residual(&self) -> f64 {
        self.modular.residual.max(self.modular.character_spread).max(self.lattice_residual)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.residual() < tol
    }
}

/// Checks both lines of the Jacobi law:
/// `F(t/(cτ+d), 𝒢τ) = χ(cτ+d)^l e^{2πi m c t²/(cτ+d)} F(t, τ)` and
/// `F(t + λτ + μ, τ) = e^{-2πi m(λ²τ + 2λt)} F(t, τ)`.
pub fn jacobi_law_check<F>(f: F, spec: &JacobiSpec, samples: &[(Complex64, Complex64)]) -> JacobiReport
where
    F: Fn(Complex64, Complex64) -> Result<Complex64> + Sync,
{
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let m = spec.index;
    let mut generators = Vec::new();
    for (word, g) in spec.group.generators() {
        let evals: Vec<std::result::Result<(Complex64, Complex64), String>> = samples
            .par_iter()
            .map(|&(t, tau)| {
                let j = g.automorphy(tau);
                let lhs = f(t / j, g.act(tau)).map_err(|e| format!("(t, τ) = ({}, {}): {}", t, tau, e))?;
                let phase = (two_pi_i * m * g.c as f64 * t * t / j).exp();
                let base = f(t, tau).map_err(|e| format!("(t, τ) = ({}, {}): {}", t, tau, e))?
                    * j.powi(spec.weight as i32)
                    * phase;
                Ok((lhs, base))
            })
            .collect();
        let (pairs, skipped): (Vec<_>, Vec<_>) = evals.into_iter().partition(|r| r.is_ok());
        let pairs: Vec<(Complex64, Complex64)> = pairs.into_iter().map(|r| r.unwrap()).collect();
        let skipped: Vec<String> = skipped.into_iter().map(|r| r.unwrap_err()).collect();
        let (character, character_spread, residual) =
            if pairs.is_empty() { (None, f64::INFINITY, f64::INFINITY) } else { fit_character(&pairs) };
        generators.push(GeneratorReport {
            word: word.to_string(),
            matrix: g,
            character,
            character_spread,
            residual,
            samples: pairs.len(),
            skipped,
        });
    }
    let modular = summarize(spec.weight, spec.group, generators);

    let mut lattice = Vec::new();
    for &(lambda, mu) in &spec.lattice {
        let evals: Vec<std::result::Result<f64, String>> = samples
            .par_iter()
            .map(|&(t, tau)| {
                let lhs = f(t + tau * lambda as f64 + mu as f64, tau).map_err(|e| e.to_string())?;
                let rhs = f(t, tau).map_err(|e| e.to_string())?
                    * (-two_pi_i * m * (tau * (lambda * lambda) as f64 + t * (2 * lambda) as f64)).exp();
                let scale = lhs.norm().max(rhs.norm());
                Ok(if scale <= ZERO_FLOOR { 0.0 } else { (lhs - rhs).norm() / scale })
            })
            .collect();
        let residual = evals.iter().filter_map(|r| r.as_ref().ok()).cloned().fold(0.0, f64::max);
        let samples_ok = evals.iter().filter(|r| r.is_ok()).count();
        let skipped = evals.into_iter().filter_map(|r| r.err()).collect();
        lattice.push(LatticeReport {
            lambda,
            mu,
            residual: if samples_ok == 0 { f64::INFINITY } else { residual },
            samples: samples_ok,
            skipped,
        });
    }
    let lattice_residual = lattice.iter().map(|l| l.residual).fold(0.0, f64::max);
    JacobiReport { modular, lattice, lattice_residual }
}

/// Paired `(t, τ)` samples: `t` from the equivariant sampler, `τ` from
/// [`tau_samples`].
pub fn jacobi_samples(count: usize) -> Vec<(Complex64, Complex64)> {
    let ts = crate::equivariant::t_samples(count, 0.05, 0.45, 1e-3);
    ts.into_iter().zip(tau_samples(count)).map(|(t, tau)| (Complex64::new(t, 0.0), tau)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::{theta_eval_tol, ThetaKind};
    use proptest::prelude::*;

    #[test]
    fn generator_matrices() {
        assert_eq!(Group::GammaTheta.generators()[0].1, ModularMatrix::S);
        assert_eq!(Group::GammaTheta.generators()[1].1, ModularMatrix::new(1, 2, 0, 1).unwrap());
        assert_eq!(Group::Gamma0Lower2.generators()[1].1, ModularMatrix::new(-1, -1, 2, 1).unwrap());
        assert_eq!(Group::Gamma0Upper2.generators()[0].1, ModularMatrix::new(-1, 0, 1, -1).unwrap());
        assert_eq!(Group::Gamma0Upper2.generators()[1].1, ModularMatrix::new(1, -2, 1, -1).unwrap());
        for g in [Group::Gamma0Lower2, Group::Gamma0Upper2, Group::GammaTheta, Group::Sl2z] {
            for (_, m) in g.generators() {
                assert!(g.contains(&m));
            }
        }
        assert!(ModularMatrix::new(1, 1, 1, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn random_words_stay_in_group(word in proptest::collection::vec((0usize..2, any::<bool>()), 1..12), which in 0usize..3) {
            let group = [Group::Gamma0Lower2, Group::Gamma0Upper2, Group::GammaTheta][which];
            let gens = group.generators();
            let mut m = ModularMatrix::IDENTITY;
            for (i, inv) in word {
                let g = gens[i].1;
                m = m.mul(&if inv { g.inverse() } else { g });
            }
            prop_assert!(group.contains(&m));
            let even = |x: i64| x.rem_euclid(2) == 0;
            match group {
                Group::Gamma0Lower2 => prop_assert!(even(m.c)),
                Group::Gamma0Upper2 => prop_assert!(even(m.b)),
                _ => prop_assert!((even(m.a + m.b + m.c + m.d)) && even(m.a * m.b) && even(m.c * m.d)),
            }
        }

        #[test]
        fn membership_matches_reduction_mod_two(word in proptest::collection::vec(0usize..2, 1..14)) {
            let mut m = ModularMatrix::IDENTITY;
            for i in word {
                m = m.mul(&[ModularMatrix::S, ModularMatrix::T][i]);
            }
            let r = |x: i64| x.rem_euclid(2);
            prop_assert_eq!(Group::Gamma0Lower2.contains(&m), r(m.c) == 0);
            prop_assert_eq!(Group::Gamma0Upper2.contains(&m), r(m.b) == 0);
            let mod2 = (r(m.a), r(m.b), r(m.c), r(m.d));
            prop_assert_eq!(Group::GammaTheta.contains(&m), mod2 == (1, 0, 0, 1) || mod2 == (0, 1, 1, 0));
        }
    }

    #[test]
    fn constant_has_trivial_character() {
        let r = modular_form_check(|_| Ok(Complex64::new(3.0, 0.0)), 0, Group::Sl2z, &tau_samples(6));
        assert!(r.residual == 0.0);
        for g in &r.generators {
            assert!((g.character.unwrap() - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_function_reports_zero() {
        let r = modular_form_check(|_| Ok(Complex64::new(0.0, 0.0)), 4, Group::Gamma0Upper2, &tau_samples(4));
        assert!(r.identically_zero && r.residual == 0.0);
        let spec = JacobiSpec { index: 1.0, weight: 3, group: Group::GammaTheta, lattice: JacobiSpec::even_lattice() };
        let j = jacobi_law_check(|_, _| Ok(Complex64::new(0.0, 0.0)), &spec, &jacobi_samples(4));
        assert_eq!(j.residual(), 0.0);
    }

    fn theta_squared(t: Complex64, tau: Complex64) -> Result<Complex64> {
        Ok(theta_eval_tol(ThetaKind::Theta, t, tau, 1e-17)?.powi(2))
    }

    #[test]
    fn theta_squared_lattice_law() {
        let spec = JacobiSpec { index: 1.0, weight: 1, group: Group::Sl2z, lattice: JacobiSpec::even_lattice() };
        let r = jacobi_law_check(theta_squared, &spec, &jacobi_samples(8));
        assert!(r.lattice_residual < 1e-9, "{:?}", r.lattice);
        // θ² has index 1 and weight 1 for SL₂(ℤ) with a character.
        assert!(r.modular.residual < 1e-9 && r.modular.character_spread < 1e-9, "{:?}", r.modular);
        let wrong = JacobiSpec { weight: 2, ..spec };
        assert!(jacobi_law_check(theta_squared, &wrong, &jacobi_samples(8)).residual() > 1e-2);
    }

    #[test]
    fn characters_compose() {
        // η-free example: θ₂⁴ has weight 2 on Γ⁰(2); χ(g₂g₁) = χ(g₂)χ(g₁).
        let f = |tau: Complex64| Ok(theta_eval_tol(ThetaKind::Theta2, Complex64::new(0.0, 0.0), tau, 1e-17)?.powi(4));
        let taus = tau_samples(8);
        let r = modular_form_check(f, 2, Group::Gamma0Upper2, &taus);
        assert!(r.passes(1e-9), "{:?}", r);
        let (g1, g2) = (r.generators[0].matrix, r.generators[1].matrix);
        let chi = |g: ModularMatrix| {
            let tau = taus[0];
            f(g.act(tau)).unwrap() / (f(tau).unwrap() * g.automorphy(tau).powi(2))
        };
        let prod = chi(g2.mul(&g1));
        let split = r.generators[0].character.unwrap() * r.generators[1].character.unwrap();
        assert!((prod - split).norm() < 1e-9);
    }

    #[test]
    fn samples_in_window() {
        for tau in tau_samples(50) {
            assert!(tau.im >= 0.4 && tau.re.abs() <= 0.45);
            assert!((0.9 - 1e-12..=2.0 + 1e-12).contains(&tau.norm()));
        }
    }
}

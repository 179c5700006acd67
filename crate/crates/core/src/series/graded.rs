//! Graded-commutative polynomial algebra on named generators, truncated above
//! a degree cap.
//!
//! Monomials are exponent vectors over a shared [`GeneratorTable`]; the
//! canonical order of factors is the table order. Odd generators square to
//! zero and anticommute.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::ring::{Analytic, QAlgebra, Ring};
use super::taylor::Taylor;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub degree: u32,
    pub odd: bool,
}

impl Generator {
    pub fn new(name: impl Into<String>, degree: u32) -> Self {
        Generator { name: name.into(), degree, odd: degree % 2 == 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorTable {
    gens: Vec<Generator>,
    index: HashMap<String, usize>,
}

impl GeneratorTable {
    pub fn new(gens: Vec<Generator>) -> Result<Arc<Self>> {
        let mut index = HashMap::new();
        for (i, g) in gens.iter().enumerate() {
            if g.degree == 0 {
                return Err(Error::Data(format!("generator {} has degree 0", g.name)));
            }
            if index.insert(g.name.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate generator name {}", g.name)));
            }
        }
        Ok(Arc::new(GeneratorTable { gens, index }))
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn generator(&self, i: usize) -> &Generator {
        &self.gens[i]
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn degree(&self, m: &[u16]) -> u32 {
        m.iter().zip(&self.gens).map(|(&e, g)| e as u32 * g.degree).sum()
    }

    /// Parse a product of generator names such as `"c7*x1^2"` (or `"1"`).
    pub fn parse_monomial(&self, text: &str) -> Result<Vec<u16>> {
        let mut m = vec![0u16; self.len()];
        let text = text.trim();
        if text == "1" || text.is_empty() {
            return Ok(m);
        }
        for factor in text.split('*') {
            let factor = factor.trim();
            let (name, exp) = match factor.split_once('^') {
                Some((n, e)) => {
                    let e: u16 = e
                        .trim()
                        .parse()
                        .map_err(|_| Error::Data(format!("bad exponent in monomial factor {:?}", factor)))?;
                    (n.trim(), e)
                }
                None => (factor, 1),
            };
            let i = self
                .position(name)
                .ok_or_else(|| Error::Data(format!("unknown generator {:?} in monomial {:?}", name, text)))?;
            m[i] += exp;
            if self.gens[i].odd && m[i] > 1 {
                return Err(Error::Data(format!("odd generator {} appears squared in {:?}", name, text)));
            }
        }
        Ok(m)
    }

    pub fn format_monomial(&self, m: &[u16]) -> String {
        let parts: Vec<String> = m
            .iter()
            .zip(&self.gens)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, g)| if e == 1 { g.name.clone() } else { format!("{}^{}", g.name, e) })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

impl GeneratorTable {
    /// All monomials of total degree `d` (odd generators to power at most 1).
    pub fn monomials_of_degree(&self, d: u32) -> Vec<Vec<u16>> {
        fn rec(t: &GeneratorTable, i: usize, left: u32, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
            if i == t.len() {
                if left == 0 {
                    out.push(cur.clone());
                }
                return;
            }
            let g = &t.gens[i];
            let max = if g.odd { 1 } else { left / g.degree };
            for e in 0..=max.min(left / g.degree) {
                cur[i] = e as u16;
                rec(t, i + 1, left - e * g.degree, cur, out);
            }
            cur[i] = 0;
        }
        let mut out = Vec::new();
        let mut cur = vec![0u16; self.len()];
        rec(self, 0, d, &mut cur, &mut out);
        out
    }
}

/// Sign of reordering `m1 * m2` into canonical order.
fn reorder_sign(table: &GeneratorTable, m1: &[u16], m2: &[u16]) -> i64 {
    let mut swaps = 0u32;
    let mut odd_above = 0u32;
    // Walk indices from high to low, counting odd generators of m1 above i.
    for i in (0..m1.len()).rev() {
        if table.gens[i].odd {
            if m2[i] % 2 == 1 {
                swaps += odd_above;
            }
            if m1[i] % 2 == 1 {
                odd_above += 1;
            }
        }
    }
    if swaps.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

#[derive(Clone, Debug)]
pub struct GradedElement<R> {
    table: Arc<GeneratorTable>,
    cap: u32,
    terms: BTreeMap<Vec<u16>, R>,
}

impl<R: Ring> GradedElement<R> {
    pub fn zero(table: &Arc<GeneratorTable>, cap: u32) -> Self {
        GradedElement { table: table.clone(), cap, terms: BTreeMap::new() }
    }

    pub fn scalar(table: &Arc<GeneratorTable>, cap: u32, c: R) -> Self {
        let mut e = Self::zero(table, cap);
        e.insert(vec![0; table.len()], c);
        e
    }

    pub fn one(table: &Arc<GeneratorTable>, cap: u32) -> Self {
        Self::scalar(table, cap, R::one())
    }

    pub fn generator(table: &Arc<GeneratorTable>, cap: u32, name: &str) -> Result<Self> {
        let i = table.position(name).ok_or_else(|| Error::Data(format!("unknown generator {}", name)))?;
        Ok(Self::generator_at(table, cap, i))
    }

    pub fn generator_at(table: &Arc<GeneratorTable>, cap: u32, i: usize) -> Self {
        let mut m = vec![0; table.len()];
        m[i] = 1;
        let mut e = Self::zero(table, cap);
        e.insert(m, R::one());
        e
    }

    pub fn monomial(table: &Arc<GeneratorTable>, cap: u32, m: Vec<u16>, c: R) -> Self {
        let mut e = Self::zero(table, cap);
        e.insert(m, c);
        e
    }

    pub fn table(&self) -> &Arc<GeneratorTable> {
        &self.table
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &R)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &[u16]) -> R {
        self.terms.get(m).cloned().unwrap_or_else(R::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.is_zero())
    }

    fn insert(&mut self, m: Vec<u16>, c: R) {
        if c.is_zero() || self.table.degree(&m) > self.cap {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v = v.add(&c);
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.table, &other.table) || *self.table == *other.table {
            Ok(())
        } else {
            Err(Error::Data("graded elements over different generator tables".into()))
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_compatible(other).expect("generator table mismatch");
        let mut out = self.clone();
        out.cap = self.cap.min(other.cap);
        out.terms.retain(|m, _| self.table.degree(m) <= out.cap);
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn scale(&self, s: &R) -> Self {
        let mut out = Self::zero(&self.table, self.cap);
        for (m, c) in &self.terms {
            out.insert(m.clone(), c.mul(s));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_compatible(other).expect("generator table mismatch");
        let cap = self.cap.min(other.cap);
        let mut out = Self::zero(&self.table, cap);
        for (m1, c1) in &self.terms {
            let d1 = self.table.degree(m1);
            if d1 > cap {
                continue;
            }
            for (m2, c2) in &other.terms {
                if d1 + self.table.degree(m2) > cap {
                    continue;
                }
                let mut m = m1.clone();
                let mut vanishes = false;
                for (i, e) in m2.iter().enumerate() {
                    m[i] += e;
                    if self.table.gens[i].odd && m[i] > 1 {
                        vanishes = true;
                    }
                }
                if vanishes {
                    continue;
                }
                let prod = c1.mul(c2);
                let prod = if reorder_sign(&self.table, m1, m2) < 0 { prod.neg() } else { prod };
                out.insert(m, prod);
            }
        }
        out
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut acc = Self::one(&self.table, self.cap);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Degree-0 coefficient.
    pub fn constant_term(&self) -> R {
        self.coeff(&vec![0; self.table.len()])
    }

    /// Homogeneous part of degree `d`.
    pub fn component(&self, d: u32) -> Self {
        let mut out = Self::zero(&self.table, self.cap);
        for (m, c) in &self.terms {
            if self.table.degree(m) == d {
                out.insert(m.clone(), c.clone());
            }
        }
        out
    }

    pub fn map<S: Ring>(&self, f: impl Fn(&R) -> S) -> GradedElement<S> {
        let mut out = GradedElement::zero(&self.table, self.cap);
        for (m, c) in &self.terms {
            out.insert(m.clone(), f(c));
        }
        out
    }

    pub fn try_map<S: Ring>(&self, f: impl Fn(&R) -> Result<S>) -> Result<GradedElement<S>> {
        let mut out = GradedElement::zero(&self.table, self.cap);
        for (m, c) in &self.terms {
            out.insert(m.clone(), f(c)?);
        }
        Ok(out)
    }

    /// `Σ_k f_k x^k` for a Taylor series `f` and an element `x` with no
    /// degree-0 part (so the sum is finite under the degree cap).
    pub fn compose(f: &Taylor<R>, x: &Self) -> Result<Self> {
        if !x.constant_term().is_zero() {
            return Err(Error::Domain("substituted element must be nilpotent".into()));
        }
        let mut out = Self::scalar(&x.table, x.cap, f.coeff(0));
        let mut p = Self::one(&x.table, x.cap);
        for k in 1..=f.order() {
            p = p.mul(x);
            if p.is_zero() {
                break;
            }
            out = out.add(&p.scale(&f.coeff(k)));
        }
        if !p.is_zero() && !p.mul(x).is_zero() {
            return Err(Error::Domain(format!(
                "Taylor order {} too small for nilpotency of substituted element",
                f.order()
            )));
        }
        Ok(out)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let keys: std::collections::BTreeSet<&Vec<u16>> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.into_iter().all(|m| self.coeff(m).approx_eq(&other.coeff(m), tol))
    }
}

impl<R: QAlgebra> GradedElement<R> {
    /// `exp` of an element with zero degree-0 part.
    pub fn exp_nilpotent(&self) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::Domain("exp of an element with nonzero degree-0 part".into()));
        }
        let mut out = Self::one(&self.table, self.cap);
        let mut term = Self::one(&self.table, self.cap);
        let mut k = 1i64;
        loop {
            term = term.mul(self).scale(&R::from_ratio(1, k));
            if term.is_zero() {
                break;
            }
            out = out.add(&term);
            k += 1;
        }
        Ok(out)
    }
}

impl<R: Analytic> GradedElement<R> {
    /// Pair the top-degree part against a characteristic-number table.
    /// Monomials absent from the table pair to zero.
    pub fn integrate(&self, numbers: &CharacteristicNumbers, dim: u32) -> R {
        let mut acc = R::zero();
        for (m, c) in &self.terms {
            if self.table.degree(m) != dim {
                continue;
            }
            if let Some(v) = numbers.get(m) {
                acc = acc.add(&c.mul(&R::from_complex(v)));
            }
        }
        acc
    }
}

impl GradedElement<Complex64> {
    /// Whether `self · m` pairs to zero for every monomial `m` of
    /// complementary degree, i.e. `self` vanishes in the algebra seen by the
    /// characteristic-number table.
    pub fn vanishes_against(&self, numbers: &CharacteristicNumbers, dim: u32, tol: f64) -> bool {
        let degrees: std::collections::BTreeSet<u32> = self.terms.keys().map(|m| self.table.degree(m)).collect();
        for d in degrees {
            if d > dim {
                continue;
            }
            let part = self.component(d);
            for m in self.table.monomials_of_degree(dim - d) {
                let probe = GradedElement::monomial(&self.table, dim, m, Complex64::new(1.0, 0.0));
                let mut lifted = GradedElement::zero(&self.table, dim);
                for (k, c) in &part.terms {
                    lifted = lifted.add(&GradedElement::monomial(&self.table, dim, k.clone(), *c));
                }
                if lifted.mul(&probe).integrate(numbers, dim).norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Values of top-degree monomials on a fundamental class.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CharacteristicNumbers {
    values: BTreeMap<Vec<u16>, Complex64>,
}

impl CharacteristicNumbers {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, m: Vec<u16>, v: Complex64) {
        self.values.insert(m, v);
    }

    pub fn get(&self, m: &[u16]) -> Option<Complex64> {
        self.values.get(m).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u16>, &Complex64)> {
        self.values.iter()
    }
}

impl<R: Ring + fmt::Display> fmt::Display for GradedElement<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.terms.iter().map(|(m, c)| format!("({})*{}", c, self.table.format_monomial(m))).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ring::rat;
    use num_rational::BigRational;

    fn table() -> Arc<GeneratorTable> {
        GeneratorTable::new(vec![
            Generator::new("c3", 3),
            Generator::new("c5", 5),
            Generator::new("p1", 4),
            Generator::new("x", 2),
        ])
        .unwrap()
    }

    #[test]
    fn odd_generators_anticommute() {
        let t = table();
        let c3 = GradedElement::<BigRational>::generator(&t, 20, "c3").unwrap();
        let c5 = GradedElement::<BigRational>::generator(&t, 20, "c5").unwrap();
        assert!(c3.mul(&c5).add(&c5.mul(&c3)).is_zero());
        assert!(c3.mul(&c3).is_zero());
        let m = t.parse_monomial("c3*c5").unwrap();
        assert_eq!(c5.mul(&c3).coeff(&m), rat(-1, 1));
    }

    #[test]
    fn degree_cap_drops_terms() {
        let t = table();
        let p1 = GradedElement::<BigRational>::generator(&t, 8, "p1").unwrap();
        assert!(!p1.mul(&p1).is_zero());
        assert!(p1.pow(3).is_zero());
    }

    #[test]
    fn exp_of_even_generator() {
        let t = table();
        let x = GradedElement::<BigRational>::generator(&t, 6, "x").unwrap();
        let e = x.exp_nilpotent().unwrap();
        assert_eq!(e.coeff(&t.parse_monomial("x^3").unwrap()), rat(1, 6));
        assert!(GradedElement::one(&t, 6).add(&x).exp_nilpotent().is_err());
    }

    #[test]
    fn monomial_parsing() {
        let t = table();
        assert_eq!(t.parse_monomial("x^2*c3").unwrap(), vec![1, 0, 0, 2]);
        assert!(t.parse_monomial("c3^2").is_err());
        assert!(t.parse_monomial("y").is_err());
        assert_eq!(t.format_monomial(&[1, 0, 0, 2]), "c3*x^2");
    }
}

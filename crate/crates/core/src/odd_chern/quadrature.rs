//! Numerical pairings of `c₁` with `S¹` and `c₃` with `S³`.
//!
//! Both use spectral differentiation of the sampled map. On `S³` the Hopf
//! coordinates `(cos η e^{iξ₁}, sin η e^{iξ₂})` are used with midpoint nodes in
//! `η`; the `η`-circle is completed from the quarter `(0, π/2)` by the
//! symmetries `g(-η, ξ₁, ξ₂) = g(η, ξ₁, ξ₂+π)` and
//! `g(π-η, ξ₁, ξ₂) = g(η, ξ₁+π, ξ₂)`, and the `η`-integral is taken from the
//! sine series of the integrand.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Maximum deviation from unitarity accepted in samples.
pub const UNITARITY_TOL: f64 = 1e-10;
/// `|⟨c₃(g), [S³]⟩|` for a degree-one map `S³ -> SU(2)`.
pub const C3_UNIT: f64 = 6.0;

#[derive(Clone, Debug)]
pub enum LoopMap {
    /// Samples at `φ_k = 2πk/n`, `k = 0..n`.
    Circle { samples: Vec<CMatrix> },
    /// Samples at `(η_m, ξ₁_a, ξ₂_b)`, index `(m * n_xi + a) * n_xi + b`.
    Sphere3 { n_eta: usize, n_xi: usize, samples: Vec<CMatrix> },
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn check_unitary(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Data("loop samples must be square matrices".into()));
    }
    let n = m.nrows();
    let dev = max_abs(&(m * m.adjoint() - CMatrix::identity(n, n)));
    if dev > UNITARITY_TOL {
        return Err(Error::Data(format!("sample deviates from unitarity by {:.3e}", dev)));
    }
    Ok(())
}

impl LoopMap {
    /// Sample `f(φ)` on `n` uniform nodes of `[0, 2π)`.
    pub fn circle(n: usize, f: impl Fn(f64) -> CMatrix) -> Result<Self> {
        let samples = (0..n).map(|k| f(2.0 * PI * k as f64 / n as f64)).collect();
        Self::circle_from_samples(samples, false)
    }

    /// Periodic samples; with `closed_endpoint` the last sample repeats the
    /// first and is dropped after checking.
    pub fn circle_from_samples(mut samples: Vec<CMatrix>, closed_endpoint: bool) -> Result<Self> {
        if closed_endpoint {
            let last = samples.pop().ok_or_else(|| Error::Domain("empty loop".into()))?;
            let first = samples.first().ok_or_else(|| Error::Domain("empty loop".into()))?;
            if last.shape() != first.shape() || max_abs(&(&last - first)) > 1e-9 {
                return Err(Error::Domain("loop grid is not closed: last sample differs from the first".into()));
            }
        }
        if samples.len() < 16 {
            return Err(Error::Domain(format!("circle grid needs at least 16 nodes, got {}", samples.len())));
        }
        let dim = samples[0].nrows();
        for s in &samples {
            if s.nrows() != dim {
                return Err(Error::Data("loop samples have inconsistent sizes".into()));
            }
            check_unitary(s)?;
        }
        Ok(LoopMap::Circle { samples })
    }

    /// Sample `f(z₁, z₂)` on the Hopf grid with `n` nodes per angle.
    pub fn sphere3(n: usize, f: impl Fn(Complex64, Complex64) -> CMatrix + Sync) -> Result<Self> {
        if n < 24 || !n.is_multiple_of(2) {
            return Err(Error::Domain(format!("S³ grid needs an even resolution >= 24, got {}", n)));
        }
        let idx: Vec<(usize, usize, usize)> =
            (0..n).flat_map(|m| (0..n).flat_map(move |a| (0..n).map(move |b| (m, a, b)))).collect();
        let samples: Vec<CMatrix> = idx
            .par_iter()
            .map(|&(m, a, b)| {
                let eta = (m as f64 + 0.5) * PI / (2.0 * n as f64);
                let x1 = 2.0 * PI * a as f64 / n as f64;
                let x2 = 2.0 * PI * b as f64 / n as f64;
                f(Complex64::from_polar(eta.cos(), x1), Complex64::from_polar(eta.sin(), x2))
            })
            .collect();
        Self::sphere3_from_samples(n, samples)
    }

    /// Samples on the Hopf grid with `n` nodes per angle, ordered
    /// `(η_m, ξ₁_a, ξ₂_b)` with `b` fastest; `η_m = (m + 1/2)π/(2n)`,
    /// `ξ_a = 2πa/n`.
    pub fn sphere3_from_samples(n: usize, samples: Vec<CMatrix>) -> Result<Self> {
        if n < 24 || !n.is_multiple_of(2) {
            return Err(Error::Domain(format!("S³ grid needs an even resolution >= 24, got {}", n)));
        }
        if samples.len() != n * n * n {
            return Err(Error::Data(format!("S³ grid {} needs {} samples, got {}", n, n * n * n, samples.len())));
        }
        let dim = samples[0].nrows();
        for s in &samples {
            if s.nrows() != dim {
                return Err(Error::Data("map samples have inconsistent sizes".into()));
            }
            check_unitary(s)?;
        }
        Ok(LoopMap::Sphere3 { n_eta: n, n_xi: n, samples })
    }
}

/// Spectral derivative of periodic matrix-valued samples on `[0, period)`.
fn spectral_derivative(samples: &[CMatrix], period: f64, fft: &Arc<dyn Fft<f64>>, ifft: &Arc<dyn Fft<f64>>) -> Vec<CMatrix> {
    let n = samples.len();
    let (r, c) = samples[0].shape();
    let mut out = vec![CMatrix::zeros(r, c); n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let scale = 2.0 * PI / period;
    for i in 0..r {
        for j in 0..c {
            for (k, s) in samples.iter().enumerate() {
                buf[k] = s[(i, j)];
            }
            fft.process(&mut buf);
            for (k, v) in buf.iter_mut().enumerate() {
                let m = if k < n / 2 {
                    k as f64
                } else if k == n / 2 && n.is_multiple_of(2) {
                    0.0
                } else {
                    k as f64 - n as f64
                };
                *v *= Complex64::new(0.0, m * scale / n as f64);
            }
            ifft.process(&mut buf);
            for (k, o) in out.iter_mut().enumerate() {
                o[(i, j)] = buf[k];
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct WindingResult {
    pub value: f64,
    pub nearest: i64,
    pub residual: f64,
}

/// `(1/2πi) ∮ tr[g⁻¹ dg]` by the trapezoidal rule with spectral derivatives.
pub fn winding_c1(l: &LoopMap) -> Result<WindingResult> {
    let samples = match l {
        LoopMap::Circle { samples } => samples,
        _ => return Err(Error::Domain("winding_c1 needs a loop on S¹".into())),
    };
    let n = samples.len();
    let mut planner = FftPlanner::new();
    let (fft, ifft) = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
    let d = spectral_derivative(samples, 2.0 * PI, &fft, &ifft);
    let mut acc = Complex64::new(0.0, 0.0);
    for (g, dg) in samples.iter().zip(&d) {
        acc += (g.adjoint() * dg).trace();
    }
    let value = (acc * (2.0 * PI / n as f64) / Complex64::new(0.0, 2.0 * PI)).re;
    let nearest = value.round() as i64;
    Ok(WindingResult { value, nearest, residual: (value - nearest as f64).abs() })
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DegreeResult {
    /// `⟨c₃(ℂ^N, g, d), [S³]⟩`.
    pub pairing: f64,
    /// `pairing / C3_UNIT`.
    pub degree: f64,
    pub nearest: i64,
    pub residual: f64,
}

/// Orientation of `S³` in Hopf coordinates, fixed so that the identity map
/// onto `SU(2)` pairs to `+C3_UNIT`.
const ORIENTATION: f64 = 1.0;

/// `⟨c₃, [S³]⟩ = (1/2πi)² ∫ tr[(g⁻¹dg)³]`.
pub fn degree_c3(l: &LoopMap) -> Result<DegreeResult> {
    let (n_eta, n_xi, samples) = match l {
        LoopMap::Sphere3 { n_eta, n_xi, samples } => (*n_eta, *n_xi, samples),
        _ => return Err(Error::Domain("degree_c3 needs a map on S³".into())),
    };
    let at = |m: usize, a: usize, b: usize| &samples[(m * n_xi + a) * n_xi + b];
    let half = n_xi / 2;
    let n_full = 4 * n_eta;
    let mut planner = FftPlanner::new();
    let (fft_e, ifft_e) = (planner.plan_fft_forward(n_full), planner.plan_fft_inverse(n_full));
    let (fft_x, ifft_x) = (planner.plan_fft_forward(n_xi), planner.plan_fft_inverse(n_xi));

    // η-derivatives at the quarter nodes for every (ξ₁, ξ₂).
    let pairs: Vec<(usize, usize)> = (0..n_xi).flat_map(|a| (0..n_xi).map(move |b| (a, b))).collect();
    let d_eta: Vec<Vec<CMatrix>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let full: Vec<CMatrix> = (0..n_full)
                .map(|k| {
                    let (quarter, m) = (k / n_eta, k % n_eta);
                    match quarter {
                        0 => at(m, a, b).clone(),
                        1 => at(n_eta - 1 - m, (a + half) % n_xi, b).clone(),
                        2 => at(m, (a + half) % n_xi, (b + half) % n_xi).clone(),
                        _ => at(n_eta - 1 - m, a, (b + half) % n_xi).clone(),
                    }
                })
                .collect();
            let d = spectral_derivative(&full, 2.0 * PI, &fft_e, &ifft_e);
            d.into_iter().take(n_eta).collect()
        })
        .collect();

    let slices: Vec<Complex64> = (0..n_eta)
        .into_par_iter()
        .map(|m| {
            // ξ₁-derivatives along each b, ξ₂-derivatives along each a.
            let mut d1 = vec![CMatrix::zeros(0, 0); n_xi * n_xi];
            let mut d2 = vec![CMatrix::zeros(0, 0); n_xi * n_xi];
            for b in 0..n_xi {
                let line: Vec<CMatrix> = (0..n_xi).map(|a| at(m, a, b).clone()).collect();
                for (a, d) in spectral_derivative(&line, 2.0 * PI, &fft_x, &ifft_x).into_iter().enumerate() {
                    d1[a * n_xi + b] = d;
                }
            }
            for a in 0..n_xi {
                let line: Vec<CMatrix> = (0..n_xi).map(|b| at(m, a, b).clone()).collect();
                for (b, d) in spectral_derivative(&line, 2.0 * PI, &fft_x, &ifft_x).into_iter().enumerate() {
                    d2[a * n_xi + b] = d;
                }
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..n_xi {
                for b in 0..n_xi {
                    let g = at(m, a, b);
                    let gi = g.adjoint();
                    let ae = &gi * &d_eta[a * n_xi + b][m];
                    let a1 = &gi * &d1[a * n_xi + b];
                    let a2 = &gi * &d2[a * n_xi + b];
                    let comm = &a1 * &a2 - &a2 * &a1;
                    acc += (ae * comm).trace() * 3.0;
                }
            }
            acc * (2.0 * PI / n_xi as f64).powi(2)
        })
        .collect();

    // Integrand is Σ_k b_k sin(2kη); ∫₀^{π/2} sin(2kη) dη = 1/k for odd k.
    let n = n_eta;
    let mut integral = Complex64::new(0.0, 0.0);
    for k in (1..=n).step_by(2) {
        let norm = if k == n { 1.0 / n as f64 } else { 2.0 / n as f64 };
        let mut bk = Complex64::new(0.0, 0.0);
        for (m, v) in slices.iter().enumerate() {
            let eta = (m as f64 + 0.5) * PI / (2.0 * n as f64);
            bk += v * (2.0 * k as f64 * eta).sin();
        }
        integral += bk * norm / k as f64;
    }
    let pairing = ORIENTATION * (integral / Complex64::new(0.0, 2.0 * PI).powi(2)).re;
    let degree = pairing / C3_UNIT;
    let nearest = degree.round() as i64;
    Ok(DegreeResult { pairing, degree, nearest, residual: (degree - nearest as f64).abs() })
}

/// `g(z₁, z₂) = [[z₁, -z̄₂], [z₂, z̄₁]]`, the identification `S³ ≅ SU(2)`.
pub fn su2_identity(z1: Complex64, z2: Complex64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[z1, -z2.conj(), z2, z1.conj()])
}

/// `diag(e^{i k₁ φ}, e^{i k₂ φ}, ...)`.
pub fn diagonal_loop(ks: &[i64]) -> impl Fn(f64) -> CMatrix + '_ {
    move |phi| CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        ks.len(),
        ks.iter().map(|&k| Complex64::from_polar(1.0, k as f64 * phi)),
    ))
}

/// Kronecker product of two matrices.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Block-diagonal sum `a ⊕ b`.
pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

/// Matrix of `Λ^k g` in the basis of increasing `k`-subsets (minors).
pub fn exterior_power(g: &CMatrix, k: usize) -> CMatrix {
    let n = g.nrows();
    let subsets = k_subsets(n, k);
    let s = subsets.len();
    let mut out = CMatrix::zeros(s, s);
    for (i, rows) in subsets.iter().enumerate() {
        for (j, cols) in subsets.iter().enumerate() {
            let minor = CMatrix::from_fn(k, k, |a, b| g[(rows[a], cols[b])]);
            out[(i, j)] = if k == 0 { Complex64::new(1.0, 0.0) } else { minor.determinant() };
        }
    }
    out
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

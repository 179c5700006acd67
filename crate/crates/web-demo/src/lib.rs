//! Browser bindings for three operations: evaluating a theta function,
//! tabulating exact transgression coefficients, and scanning a built-in
//! fixed-point dataset for rigidity. Each returns a JSON string.

use num_complex::Complex64;
use serde_json::json;
use toeplitz_rigidity::dataset::builtin;
use toeplitz_rigidity::equivariant::{anomaly_check, rigidity_scan, t_samples, FKind};
use toeplitz_rigidity::odd_chern::transgression_coeffs;
use toeplitz_rigidity::series::ring::rational_to_f64;
use toeplitz_rigidity::theta::{theta_eval_tol, ThetaKind, DEFAULT_TOL};
use wasm_bindgen::prelude::*;

/// Datasets offered by the rigidity scan.
pub const SCAN_DATASETS: &[&str] = &["s3", "hp2_s7", "hp2_s7_n1", "hp2_s7_n2", "cp2_s7", "empty"];

fn to_string(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// `θ_kind(v, τ)` as `{"re", "im", "abs"}`.
pub fn theta_json(kind: &str, v_re: f64, v_im: f64, tau_re: f64, tau_im: f64) -> Result<String, String> {
    let kind = ThetaKind::parse(kind).map_err(to_string)?;
    let z = theta_eval_tol(kind, Complex64::new(v_re, v_im), Complex64::new(tau_re, tau_im), DEFAULT_TOL).map_err(to_string)?;
    Ok(json!({ "re": z.re, "im": z.im, "abs": z.norm() }).to_string())
}

/// Coefficients of `q^{k/2}`, `k < 2·q_trunc + 1`, of every `λ_{j,d}`, `d ≤ degree_cap`.
pub fn transgression_json(j: usize, degree_cap: u32, q_trunc: u32, rank_n: Option<i64>) -> Result<String, String> {
    if !(1..=3).contains(&j) || degree_cap.is_multiple_of(2) || degree_cap > 15 || !(1..=6).contains(&q_trunc) {
        return Err("need j in 1..=3, an odd degree cap up to 15 and 1 ≤ q_trunc ≤ 6".into());
    }
    let trunc = 2 * q_trunc as i64 + 1;
    let t = transgression_coeffs(j, degree_cap, trunc, rank_n).map_err(to_string)?;
    let rows: Vec<_> = t
        .entries
        .iter()
        .map(|(d, s)| {
            let exact: Vec<String> = (0..trunc).map(|k| s.coeff(k).to_string()).collect();
            let value: Vec<f64> = (0..trunc).map(|k| rational_to_f64(&s.coeff(k))).collect();
            json!({ "degree": d, "exact": exact, "value": value })
        })
        .collect();
    Ok(json!({ "j": j, "trunc_half_units": trunc, "rows": rows }).to_string())
}

/// Rigidity scan of one F-function on a built-in dataset.
pub fn rigidity_json(dataset: &str, function: &str, samples: usize, q_trunc: u32) -> Result<String, String> {
    if !SCAN_DATASETS.contains(&dataset) {
        return Err(format!("unknown dataset {:?}", dataset));
    }
    if !(2..=40).contains(&samples) || !(1..=4).contains(&q_trunc) {
        return Err("need 2 to 40 samples and 1 ≤ q_trunc ≤ 4".into());
    }
    let file = builtin(dataset).map_err(to_string)?;
    let d = file.equivariant().map_err(to_string)?;
    let kind = FKind::parse(function).map_err(to_string)?;
    let anomaly = anomaly_check(d).map_err(to_string)?;
    let r = rigidity_scan(kind, d, &t_samples(samples, 0.02, 0.48, 1e-3), 2 * q_trunc as i64 + 1, 1e-8).map_err(to_string)?;
    let coefficients: Vec<Vec<[f64; 2]>> = r.coefficients.iter().map(|row| row.iter().map(|c| [c.re, c.im]).collect()).collect();
    Ok(json!({
        "description": file.description,
        "anomaly_n": anomaly.n,
        "fn": r.kind,
        "t": r.t_samples,
        "coefficients": coefficients,
        "variation": r.variation,
        "max_variation": r.max_variation,
        "rigid": r.rigid,
        "notes": r.notes,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn theta(kind: &str, v_re: f64, v_im: f64, tau_re: f64, tau_im: f64) -> Result<String, JsError> {
    theta_json(kind, v_re, v_im, tau_re, tau_im).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn transgression(j: usize, degree_cap: u32, q_trunc: u32, rank_n: Option<i32>) -> Result<String, JsError> {
    transgression_json(j, degree_cap, q_trunc, rank_n.map(i64::from)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn rigidity(dataset: &str, function: &str, samples: usize, q_trunc: u32) -> Result<String, JsError> {
    rigidity_json(dataset, function, samples, q_trunc).map_err(|e| JsError::new(&e))
}

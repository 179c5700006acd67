use num_complex::Complex64;
use toeplitz_rigidity::dataset::builtin;
use toeplitz_rigidity::equivariant::{
    anomaly_check, f_function, f_value, index_twist, lefschetz_index, rigidity_scan, signature_rational, t_samples,
    EquivariantData, FKind,
};
use toeplitz_rigidity::modularity::{jacobi_law_check, jacobi_samples, tau_samples, Group, JacobiSpec};
use toeplitz_rigidity::odd_chern::OddChConvention;

fn data(name: &str) -> EquivariantData {
    builtin(name).unwrap().equivariant().unwrap().clone()
}

#[test]
fn hp2_anomalies() {
    assert_eq!(anomaly_check(&data("hp2_s7")).unwrap().n, Some(0));
    assert_eq!(anomaly_check(&data("hp2_s7_n1")).unwrap().n, Some(1));
    assert_eq!(anomaly_check(&data("hp2_s7_n2")).unwrap().n, Some(2));
}

#[test]
fn hp2_witten_families_are_rigid() {
    let d = data("hp2_s7");
    let ts = t_samples(12, 0.05, 0.45, 1e-3);
    for kind in [FKind::L, FKind::W, FKind::WPrime] {
        let r = rigidity_scan(kind, &d, &ts, 7, 1e-8).unwrap();
        let size = r.coefficients[0].iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(size > 1e-6, "{:?} vanishes identically", kind);
        assert!(r.rigid, "{:?}: variation {:?} (size {})", kind, r.variation, size);
    }
}

#[test]
fn broken_anomaly_is_not_rigid() {
    let d = data("hp2_s7_n2");
    let r = rigidity_scan(FKind::W, &d, &t_samples(12, 0.05, 0.45, 1e-3), 5, 1e-8).unwrap();
    assert!(!r.rigid && r.max_variation > 1e-3, "{:?}", r.variation);
}

#[test]
fn jacobi_laws_on_hp2() {
    for (name, n) in [("hp2_s7", 0.0), ("hp2_s7_n1", 1.0)] {
        let d = data(name);
        let spec = JacobiSpec { index: n / 2.0, weight: 8, group: Group::Gamma0Upper2, lattice: JacobiSpec::even_lattice() };
        let f = |t, tau| f_value(FKind::W, &d, t, tau);
        let r = jacobi_law_check(f, &spec, &jacobi_samples(8));
        assert!(r.passes(1e-7), "{}: {:?}", name, r);
        let wrong = JacobiSpec { weight: 9, ..spec.clone() };
        assert!(jacobi_law_check(f, &wrong, &jacobi_samples(8)).residual() > 1e-2);
    }
}

#[test]
fn f_function_t_and_s_laws() {
    let d = data("hp2_s7_n1");
    let n = 1.0;
    let pi = std::f64::consts::PI;
    let i = Complex64::new(0.0, 1.0);
    for (t, tau) in jacobi_samples(6) {
        let fl = f_value(FKind::L, &d, t, tau).unwrap();
        let fl1 = f_value(FKind::L, &d, t, tau + 1.0).unwrap();
        assert!((fl - fl1).norm() < 1e-8 * fl.norm(), "F_L not T-invariant");
        let fw1 = f_value(FKind::W, &d, t, tau + 1.0).unwrap();
        let fwp = f_value(FKind::WPrime, &d, t, tau).unwrap();
        assert!((fw1 - fwp).norm() < 1e-8 * fwp.norm(), "F_W(τ+1) ≠ F′_W(τ)");
        // F_L(t/τ, -1/τ) = 2^{[(N + dim V)/2]} τ^{(dim M + 1)/2} e^{πint²/τ} F_W(t, τ)
        let lhs = f_value(FKind::L, &d, t / tau, -1.0 / tau).unwrap();
        let fw = f_value(FKind::W, &d, t, tau).unwrap();
        let pow2 = 2f64.powi(((d.rank_n + d.v_dim as i64) / 2) as i32);
        let rhs = fw * pow2 * tau.powi(d.ambient_dim.div_ceil(2) as i32) * (i * pi * n * t * t / tau).exp();
        assert!((lhs - rhs).norm() < 1e-7 * lhs.norm(), "S-law: {} vs {}", lhs, rhs);
    }
}

#[test]
fn dr_family_t_law() {
    let mut d = data("hp2_s7");
    for c in &mut d.components {
        c.v0_trivial = 0;
    }
    d.v_dim = 14;
    for (t, tau) in jacobi_samples(4) {
        let a = f_value(FKind::DR(1), &d, t, tau + 1.0).unwrap();
        let b = f_value(FKind::DR(1), &d, t, tau).unwrap();
        assert!((a - b).norm() < 1e-8 * b.norm().max(1e-300), "dR1 T-law");
        let a = f_value(FKind::DR(2), &d, t, tau + 1.0).unwrap();
        let b = f_value(FKind::DR(3), &d, t, tau).unwrap();
        assert!((a - b).norm() < 1e-8 * b.norm().max(1e-300), "dR2 -> dR3 under T");
    }
}

#[test]
fn signature_is_constant_and_matches_closed_form() {
    let pts = [
        Complex64::new(0.5, 0.0),
        Complex64::new(1.0 + 1e-3, 0.0),
        Complex64::new(10.0, 0.0),
        Complex64::new(1e6, 0.0),
        Complex64::new(0.3, 1.7),
        Complex64::from_polar(1.0, 0.9),
    ];
    let cp2 = data("cp2_s7");
    let expected = -8.0 * 6.0 / 5040.0;
    for z in pts {
        let f = signature_rational(&cp2, z, OddChConvention::FromDegreeOne).unwrap();
        assert!((f - expected).norm() < 1e-9, "z={}: {}", z, f);
    }
    let hp2 = data("hp2_s7");
    let f2 = signature_rational(&hp2, Complex64::new(2.0, 0.0), OddChConvention::FromDegreeOne).unwrap();
    for z in pts {
        let f = signature_rational(&hp2, z, OddChConvention::FromDegreeOne).unwrap();
        assert!((f - f2).norm() < 1e-7 * f2.norm(), "z={}: {} vs {}", z, f, f2);
    }
}

#[test]
fn index_series_on_shipped_data() {
    for name in ["s3", "hp2_s7", "hp2_s7_n1", "empty"] {
        let d = data(name);
        for kind in [FKind::W, FKind::WPrime, FKind::L] {
            let t = 0.2914;
            let f = f_function(kind, &d, t, 5).unwrap();
            let (tw, odd) = index_twist(kind, &d, 5).unwrap();
            let ind = lefschetz_index(&d, &tw, odd, t).unwrap();
            for k in 0..5 {
                let scale = f.coeff(k).norm().max(1.0);
                assert!((f.coeff(k) - ind.coeff(k)).norm() < 1e-9 * scale, "{} {:?} k={}", name, kind, k);
            }
        }
    }
}

#[test]
fn taus_are_upper_half_plane() {
    assert!(tau_samples(10).iter().all(|t| t.im > 0.0));
}

#[test]
fn precision_modes_agree_away_from_poles() {
    use toeplitz_rigidity::equivariant::{signature_rational_with, Precision};
    let d = data("hp2_s7");
    let expected = -8.0 * 6.0 / 5040.0;
    let conv = OddChConvention::FromDegreeOne;
    let z = Complex64::new(2.5, 0.75);
    for p in [Precision::Double, Precision::DoubleDouble, Precision::Exact] {
        let f = signature_rational_with(&d, z, conv, p).unwrap();
        assert!((f - expected).norm() < 1e-9, "{:?}: {}", p, f);
    }
    // Next to z = 1 only the exact mode stays on the constant.
    let near = Complex64::new(1.0 + 1e-6, 0.0);
    let exact = signature_rational_with(&d, near, conv, Precision::Exact).unwrap();
    assert!((exact - expected).norm() < 1e-15, "{}", exact);
    let double = signature_rational_with(&d, near, conv, Precision::Double).unwrap();
    assert!((double - expected).norm() > 1e-6, "double unexpectedly accurate: {}", double);
    assert!(signature_rational_with(&d, Complex64::new(1.0, 0.0), conv, Precision::Exact).is_err());
}

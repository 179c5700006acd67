use serde_json::Value;
use toeplitz_rigidity_web::{rigidity_json, theta_json, transgression_json, SCAN_DATASETS};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn theta_vanishes_at_the_origin() {
    let v = parse(theta_json("theta", 0.0, 0.0, 0.0, 1.0).unwrap());
    assert!(v["abs"].as_f64().unwrap() < 1e-14);
    let v = parse(theta_json("theta3", 0.0, 0.0, 0.0, 1.0).unwrap());
    // θ₃(0, i) = π^{1/4} / Γ(3/4)
    assert!((v["re"].as_f64().unwrap() - 1.086_434_811_213_308_1).abs() < 1e-11);
    assert!(theta_json("theta", 0.0, 0.0, 0.0, -1.0).is_err());
}

#[test]
fn transgression_table_is_exact() {
    let v = parse(transgression_json(3, 3, 1, None).unwrap());
    let rows = v["rows"].as_array().unwrap();
    let c3 = rows.iter().find(|r| r["degree"] == 3).unwrap();
    assert_eq!(c3["exact"][1], "1/6");
    assert!(transgression_json(4, 3, 1, None).is_err());
}

#[test]
fn rigidity_scan_distinguishes_anomalies() {
    let ok = parse(rigidity_json("hp2_s7", "W", 6, 2).unwrap());
    assert_eq!(ok["rigid"], true);
    let bad = parse(rigidity_json("hp2_s7_n2", "W", 6, 2).unwrap());
    assert_eq!(bad["rigid"], false);
    for name in SCAN_DATASETS {
        rigidity_json(name, "Wp", 3, 1).unwrap();
    }
    assert!(rigidity_json("model7", "W", 6, 2).is_err());
}

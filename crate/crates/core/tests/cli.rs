use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_toeplitz-rigidity"));
    c.current_dir(env!("CARGO_MANIFEST_DIR"));
    c.env_remove("TOEPLITZ_THREADS").env_remove("TOEPLITZ_PRECISION");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{}: {}", e, String::from_utf8_lossy(&o.stdout)))
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

#[test]
fn rigidity_scan_on_the_circle_action_passes() {
    let o = run(&["rigidity-scan", &data("s3_circle_action.json"), "--q-trunc", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["scans"].as_array().unwrap().len(), 2);
}

#[test]
fn rigidity_scan_csv_has_variation_table_and_verdict_block() {
    let o = run(&["rigidity-scan", "hp2_s7", "--format", "csv", "--t-samples", "4", "--q-trunc", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("fn,half,t,re,im"));
    // Two functions, three half-orders, four t samples.
    assert_eq!(text.lines().filter(|l| l.starts_with("W,") || l.starts_with("Wp,")).count(), 24);
    assert!(text.contains("\nverdict,PASS\n"));
}

#[test]
fn broken_anomaly_fails_with_exit_one() {
    let o = run(&["rigidity-scan", "hp2_s7_n2", "--fn", "W", "--t-samples", "6", "--q-trunc", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json_of(&o)["verdict"], "FAIL");
}

#[test]
fn check_jacobi_example_reports_residuals() {
    let o = run(&["check-jacobi", "--fn", "fW", "--dataset", "s3", "--index", "0", "--weight", "2", "--group", "gamma-upper-0-2"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_of(&o);
    assert!(v["residual"].as_f64().unwrap() < 1e-7);
    assert!(v["report"]["lattice"].as_array().unwrap().len() >= 2);
}

#[test]
fn check_jacobi_with_nonzero_function_and_wrong_weight() {
    let ok = run(&["check-jacobi", "--dataset", "hp2_s7_n1"]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = run(&["check-jacobi", "--dataset", "hp2_s7_n1", "--weight", "9"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{ \"q_trunc\": 3, ").unwrap();
    let o = run(&["--config", p.to_str().unwrap(), "transgression", "--j", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config"));
    std::fs::write(&p, "{ \"q_trunk\": 3 }").unwrap();
    let o = run(&["--config", p.to_str().unwrap(), "transgression", "--j", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cfg.json");
    std::fs::write(&p, r#"{ "format": "csv", "q_trunc": 1 }"#).unwrap();
    let o = run(&["--config", p.to_str().unwrap(), "transgression", "--j", "3", "--degree-cap", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("degree,half,exact,value\n"));
    assert!(text.contains("3,1,1/6,"));
}

#[test]
fn input_errors_exit_two() {
    for args in [
        vec!["rigidity-scan", "no_such_dataset"],
        vec!["transgression", "--j", "4"],
        vec!["transgression", "--j", "2", "--q-trunc", "0.5"],
        vec!["theta-eval", "--v", "0.1", "--tau", "0,-1"],
        vec!["signature", "hp2_s7", "--z", "1"],
        vec!["winding", "hp2_s7"],
        vec!["selftest", "--only", "13"],
        vec!["no-such-command"],
        vec!["rigidity-scan", "s3", "--tolerance", "-1"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{:?}: {}", args, String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn zero_gamma_dataset_is_rejected() {
    let text = std::fs::read_to_string(data("s3_circle_action.json")).unwrap().replacen("\"gamma\": 1", "\"gamma\": 0", 1);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("zero.json");
    std::fs::write(&p, text).unwrap();
    let o = run(&["fixedpoint", p.to_str().unwrap(), "--dry-run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("γ ∈ ℤ∖{0}"));
}

#[test]
fn every_subcommand_has_a_dry_run() {
    for args in [
        vec!["theta-eval", "--v", "0.1", "--tau", "0,1"],
        vec!["qexpand", "--bundle", "theta1"],
        vec!["transgression", "--j", "1"],
        vec!["winding", "diag_circle"],
        vec!["degree3", "su2"],
        vec!["genus", "model7"],
        vec!["fixedpoint", "hp2_s7"],
        vec!["rigidity-scan", "s3"],
        vec!["signature", "hp2_s7"],
        vec!["check-modular", "--fn", "lambda3"],
        vec!["check-jacobi", "--dataset", "hp2_s7"],
        vec!["selftest"],
    ] {
        let mut a = args.clone();
        a.push("--dry-run");
        let o = run(&a);
        assert_eq!(o.status.code(), Some(0), "{:?}: {}", args, String::from_utf8_lossy(&o.stderr));
        let v = json_of(&o);
        assert_eq!(v["dry_run"], true, "{:?}", args);
        assert_eq!(v["valid"], true);
    }
}

#[test]
fn reports_are_identical_across_thread_counts() {
    let args = ["signature", "hp2_s7", "--z-samples", "12", "--format", "csv"];
    let one = bin().args(args).env("TOEPLITZ_THREADS", "1").output().unwrap();
    let four = bin().args(args).env("TOEPLITZ_THREADS", "4").output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let args = ["rigidity-scan", "hp2_s7_n1", "--t-samples", "5", "--q-trunc", "1"];
    let a = run(&[&args[..], &["--threads", "1"]].concat());
    let b = run(&[&args[..], &["--threads", "3"]].concat());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn floats_round_trip_through_json() {
    let o = run(&["theta-eval", "--kind", "theta1", "--v", "0.3,0.1", "--tau", "0.1,0.9"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    let v = json_of(&o);
    let re = v["values"][0]["value"][0].as_f64().unwrap();
    assert!(text.contains(&format!("{:.16e}", re)));
}

#[test]
fn sampled_loops_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let n = 64;
    let mut rows = String::from("# phi -> diag(e^{i phi}, e^{-2 i phi})\nre00,im00,re01,im01,re10,im10,re11,im11\n");
    for k in 0..n {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        rows += &format!("{},{},0,0,0,0,{},{}\n", phi.cos(), phi.sin(), (2.0 * phi).cos(), -(2.0 * phi).sin());
    }
    let p = dir.path().join("loop.csv");
    std::fs::write(&p, rows).unwrap();
    let o = run(&["winding", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json_of(&o)["winding"]["nearest"], -1);
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,0,0\n").unwrap();
    assert_eq!(run(&["winding", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn sampled_su2_map_from_csv() {
    let n = 24usize;
    let mut rows = String::new();
    for m in 0..n {
        let eta = (m as f64 + 0.5) * std::f64::consts::PI / (2.0 * n as f64);
        for a in 0..n {
            let x1 = 2.0 * std::f64::consts::PI * a as f64 / n as f64;
            for b in 0..n {
                let x2 = 2.0 * std::f64::consts::PI * b as f64 / n as f64;
                let (z1re, z1im) = (eta.cos() * x1.cos(), eta.cos() * x1.sin());
                let (z2re, z2im) = (eta.sin() * x2.cos(), eta.sin() * x2.sin());
                // [[z1, -conj z2], [z2, conj z1]]
                rows += &format!("{},{},{},{},{},{},{},{}\n", z1re, z1im, -z2re, z2im, z2re, z2im, z1re, -z1im);
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("su2.csv");
    std::fs::write(&p, rows).unwrap();
    let o = run(&["degree3", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json_of(&o)["degree"]["nearest"].as_i64().unwrap().abs(), 1);
}

#[test]
fn output_file_and_selftest_subset() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("out.json");
    let o = run(&["selftest", "--only", "3,4", "--output", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(v["passed"], 2);
    assert!(v["criteria"][0].get("elapsed_s").is_none());
}

#[test]
fn genus_hypothesis_violation_is_informational() {
    let o = run(&["genus", "model11", "--which", "psi1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&o);
    assert!(v["verdict"].is_null());
    assert!(!v["notes"].as_array().unwrap().is_empty());
    let o = run(&["genus", "model11_p1", "--which", "psi1"]);
    assert_eq!(json_of(&o)["verdict"], "PASS");
}

//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.
//! Runs without the libtest harness so the lines are never captured.

use toeplitz_rigidity::acceptance::run_all;

fn main() {
    let results = run_all();
    for r in &results {
        println!("{}", r);
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("{} of {} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        eprintln!("failing criteria: {:?}", failed);
        std::process::exit(1);
    }
}

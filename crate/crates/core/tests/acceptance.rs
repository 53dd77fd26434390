//! Acceptance criteria 1–10 at their stated tolerances.
//!
//! Plain `main` rather than libtest so the PASS/FAIL lines are always shown.
//! Pass suite names (or criterion numbers) as arguments to run a subset.

use std::process::ExitCode;
use std::time::Instant;

use ricciform::verify::{exit_code, resolve, Lab, SUITES};

fn main() -> ExitCode {
    // Cargo passes libtest flags such as --nocapture; ignore them.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut names = Vec::new();
    for a in &args {
        match resolve(a) {
            Ok(v) => names.extend(v),
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        }
    }
    if names.is_empty() {
        names = SUITES.to_vec();
    }
    let lab = Lab::new();
    let mut results = Vec::new();
    for n in names {
        let start = Instant::now();
        match lab.suite(n) {
            Ok(r) => {
                println!("{r}  ({:.1}s)", start.elapsed().as_secs_f64());
                results.push(r);
            }
            Err(e) => {
                println!("FAIL    {n}: error: {e}");
                return ExitCode::from(3);
            }
        }
    }
    let failed = results.iter().filter(|r| !r.pass()).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    ExitCode::from(exit_code(&results) as u8)
}

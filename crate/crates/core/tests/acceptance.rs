//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//! Pass criterion ids as arguments to run a subset.

use std::process::ExitCode;

use dicke_core::validation::{Validator, ALL_CRITERIA};

fn main() -> ExitCode {
    let ids: Vec<u8> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let ids = if ids.is_empty() { ALL_CRITERIA.to_vec() } else { ids };
    let validator = Validator::new();
    let mut failed = Vec::new();
    for id in ids {
        let outcome = validator.run(id);
        println!("{outcome}");
        if !outcome.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}

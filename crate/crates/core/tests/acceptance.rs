//! Runs every acceptance criterion, printing one PASS/FAIL line each, and
//! exits nonzero if any fails. `YM_CHECK_FAST=1` halves the relaxation grids.

use std::process::ExitCode;

use ymac::check::{run_criterion, select, CheckOptions};

fn main() -> ExitCode {
    let opts = CheckOptions::from_env();
    let mut failed = 0;
    for id in select(None) {
        let r = run_criterion(id, &opts).expect("known criterion");
        println!("{}", r.line());
        failed += usize::from(!r.passed);
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

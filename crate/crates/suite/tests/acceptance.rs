//! Runs every acceptance criterion and prints one pass/fail line per criterion. Exits
//! nonzero iff any criterion fails. `KLOPT_ACCEPT_ONLY=1,4` restricts the run.

use std::process::ExitCode;

use klopt_harness::acceptance::{run_acceptance, AcceptOptions};

fn main() -> ExitCode {
    let only = std::env::var("KLOPT_ACCEPT_ONLY").ok().map(|v| {
        v.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.trim().parse().expect("KLOPT_ACCEPT_ONLY: criterion ids")).collect()
    });
    let report = run_acceptance(&AcceptOptions { only, ..Default::default() });
    for w in &report.warnings {
        println!("warning: {w}");
    }
    for r in &report.rows {
        println!("{}", r.line());
        if !r.pass {
            for d in r.detail.iter().filter(|d| d.starts_with("FAIL")) {
                println!("       {d}");
            }
        }
    }
    let failed = report.rows.iter().filter(|r| !r.pass).count();
    println!("acceptance: {} criteria, {} passed, {failed} failed", report.rows.len(), report.rows.len() - failed);
    ExitCode::from(report.exit_code() as u8)
}

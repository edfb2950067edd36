//! Runs every verification check at its pinned tolerance and prints one
//! line per check.

use coverplace::checks::{run_check, CheckConfig, Suite, CHECKS, DEFAULT_SEED};

#[test]
fn acceptance_criteria() {
    let cfg = CheckConfig::new(Suite::Full, DEFAULT_SEED);
    let mut failed = Vec::new();
    for &(id, _) in CHECKS.iter() {
        let out = run_check(id, &cfg);
        println!(
            "[{:02}] {:<6} {:<50} {:>8.2}s  {}",
            out.id,
            if out.passed { "PASS" } else { "FAIL" },
            out.name,
            out.seconds,
            out.detail
        );
        if !out.passed {
            failed.push(out.id);
        }
    }
    assert!(failed.is_empty(), "failed checks: {failed:?}");
}

//! The twelve acceptance criteria at their stated tolerances. One PASS/FAIL
//! line per criterion goes straight to stderr so it shows without
//! `--nocapture`.

use std::io::Write;

use hbspace::suite::{run_all, SuiteOptions};

#[test]
fn acceptance_criteria() {
    let results = run_all(SuiteOptions::default()).expect("fixtures");
    let mut err = std::io::stderr().lock();
    for r in &results {
        writeln!(
            err,
            "criterion {:>2} {} {:<36} {:>6.2}s  {}",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.seconds,
            r.detail
        )
        .unwrap();
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

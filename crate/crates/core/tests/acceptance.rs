//! Runs every acceptance criterion at full size and prints one line per criterion.

use langevin_bounce::verify::{self, Suite, VerifySettings};

#[test]
fn acceptance_criteria() {
    let settings = VerifySettings::new(Suite::Full);
    let report = verify::run_suite(&settings, |r| println!("{}", r.line())).unwrap();
    let failed: Vec<String> = report
        .results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{} {}", r.id, r.name))
        .collect();
    println!(
        "{} of {} criteria passed",
        report.results.len() - failed.len(),
        report.results.len()
    );
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}

#[test]
fn wrong_exponent_is_caught() {
    let settings = VerifySettings {
        k_override: Some(0.12),
        ..VerifySettings::new(Suite::Quick)
    };
    let r = verify::criterion_1(&settings);
    println!("{}", r.line());
    assert!(!r.passed);
}

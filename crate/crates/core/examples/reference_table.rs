//! Recompute t statistics and critical values for a table of published
//! correlations and run the numerical self-checks.

use pvwave::cli::{verification_checks, VerifySettings, REFERENCE_ROWS};
use pvwave::corr_t_test;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:<3} {:>8} {:>5} {:>8} {:>8} {:>8} {:>8}  sig", "", "r", "n", "t", "pub t", "t_crit", "pub");
    for row in REFERENCE_ROWS {
        let test = corr_t_test(row.r, row.n, 0.05)?;
        println!(
            "{:<3} {:>8.4} {:>5} {:>8.4} {:>8.4} {:>8.4} {:>8.3}  {}",
            row.label, row.r, row.n, test.t, row.t, test.t_crit, row.t_crit, test.significant
        );
    }

    println!();
    for check in verification_checks(&VerifySettings::default())? {
        println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
    }
    Ok(())
}

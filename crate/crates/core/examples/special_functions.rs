//! Bessel J0, Laguerre polynomials and the t/F critical values used by the
//! significance tests.

use pvwave::specfun::{bessel_j0, f_critical, laguerre, student_t_critical};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>6} {:>14} {:>14} {:>14}", "x", "J0(x)", "L1(x)", "L3(x)");
    for i in 0..=10 {
        let x = i as f64;
        println!(
            "{x:>6.1} {:>14.10} {:>14.10} {:>14.10}",
            bessel_j0(x)?,
            laguerre(1, x)?,
            laguerre(3, x)?
        );
    }

    println!();
    println!("two-sided t critical values at alpha = 0.05");
    for df in [5u32, 30, 57, 121, 492] {
        println!("  df = {df:>3}: {:.4}", student_t_critical(0.05, df)?);
    }

    println!();
    println!("F critical values at alpha = 0.05");
    for (d1, d2) in [(1u32, 28u32), (2, 80), (1, 120)] {
        println!("  F({d1}, {d2}) = {:.5}", f_critical(0.05, d1, d2)?);
    }
    Ok(())
}

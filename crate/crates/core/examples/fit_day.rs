//! Generate one trading day from a known Bessel profile, bin it and recover
//! the parameters with Levenberg-Marquardt.

use chrono::NaiveDate;
use pvwave::fitting::{fit_best_of, init_bessel, scan_bessel, Observations};
use pvwave::ingest::{bin_day, PriceGrid, SynthDaySpec, SynthFamily, TickSize};
use pvwave::models::{BesselParams, ModelParams};
use pvwave::FitOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let day = NaiveDate::from_ymd_opt(2008, 3, 14).unwrap();
    let truth = BesselParams::new(1.0, 50.0, 10.0)?;
    let grid = PriceGrid::around(10.0, 0.2, TickSize::from_f64(0.005)?)?;
    let spec = SynthDaySpec::new(day, SynthFamily::Bessel(truth), 100_000, grid, 42);
    let ticks = pvwave::ingest::synth_day(&spec)?;

    let dist = bin_day(&ticks, TickSize::from_f64(0.01)?)?;
    println!("{} ticks, {} bins, total volume {}", ticks.len(), dist.bins.len(), dist.total_volume);

    let obs = Observations::from(&dist);
    let opts = FitOptions::default();
    let starts = [ModelParams::Bessel(init_bessel(&dist)), ModelParams::Bessel(scan_bessel(&obs))];
    let fit = fit_best_of(&starts, &obs, &opts)?;

    let g = &fit.goodness;
    println!("termination: {:?} after {} iterations", fit.termination, fit.iterations);
    if let ModelParams::Bessel(b) = fit.params {
        println!("C = {:.5}  omega = {:.3}  p0 = {:.4}", b.c, b.omega, b.p0);
        println!("true omega = {}  true p0 = {}", truth.omega, truth.p0);
    }
    println!(
        "n = {}  k = {}  R2 = {:.4}  R2crit = {:.4}  F = {:.1}  Fcrit = {:.3}  significant = {}",
        g.n, g.k, g.r2, g.r2_crit, g.f, g.f_crit, g.significant
    );
    Ok(())
}

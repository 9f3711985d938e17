//! Fit both a Bessel and a Kummer profile to one day and derive the force and
//! utility diagnostics from them.

use chrono::NaiveDate;
use pvwave::fitting::{fit_best_of, init_bessel, init_kummer, scan_bessel, scan_kummer, Observations};
use pvwave::ingest::{bin_day, synth_day, PriceGrid, SynthDaySpec, SynthFamily, TickSize};
use pvwave::models::{compute_forces, BesselParams, ModelParams};
use pvwave::FitOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let day = NaiveDate::from_ymd_opt(2009, 6, 1).unwrap();
    let grid = PriceGrid::around(20.0, 0.2, TickSize::from_f64(0.005)?)?;
    let family = SynthFamily::Bessel(BesselParams::new(1.0, 45.0, 20.0)?);
    let ticks = synth_day(&SynthDaySpec::new(day, family, 80_000, grid, 3))?;
    let dist = bin_day(&ticks, TickSize::from_f64(0.01)?)?;

    let obs = Observations::from(&dist);
    let opts = FitOptions::default();
    let bessel = fit_best_of(
        &[ModelParams::Bessel(init_bessel(&dist)), ModelParams::Bessel(scan_bessel(&obs))],
        &obs,
        &opts,
    )?;
    let kummer = fit_best_of(
        &[ModelParams::Kummer(init_kummer(&dist)), ModelParams::Kummer(scan_kummer(&obs))],
        &obs,
        &opts,
    )?;
    println!("Bessel R2 = {:.4}, Kummer R2 = {:.4}", bessel.r2(), kummer.r2());

    let report = compute_forces(&[bessel.params, kummer.params], &dist)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

//! Parse raw tick CSV and build volume distributions at two bin widths.

use pvwave::ingest::{bin_day, parse_ticks, BadRowPolicy, ParseOptions, TickSize};

const TICKS: &str = "\
date,time,price,volume
2008-01-02,09:30:01,10.012,300
2008-01-02,09:30:05,10.004,100
2008-01-02,09:31:40,9.996,200
2008-01-02,10:02:00,10.021,500
2008-01-02,10:15:30,oops,100
2008-01-02,11:45:12,10.009,400
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = ParseOptions { bad_rows: BadRowPolicy::Skip, ..ParseOptions::default() };
    let parsed = parse_ticks(TICKS.as_bytes(), &opts)?;
    for bad in &parsed.rejected {
        println!("skipped line {}: {}", bad.line, bad.reason);
    }

    for day in &parsed.days {
        for tick in [0.01, 0.005] {
            let dist = bin_day(&day.ticks, TickSize::from_f64(tick)?)?;
            println!("{} at {tick}:", day.day);
            for b in &dist.bins {
                println!("  {:.3}  {:>5}  {:.3}", b.price.to_f64(), b.volume, b.probability);
            }
        }
    }
    Ok(())
}

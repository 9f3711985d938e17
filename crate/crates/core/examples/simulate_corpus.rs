//! Build a labelled synthetic corpus and write it as CSV.
//!
//! Usage: `cargo run --release --example simulate_corpus [DIR]`

use std::fs::File;
use std::path::PathBuf;

use pvwave::ingest::{synth_corpus, write_labels, write_ticks, ClassMixture, CorpusSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&dir)?;

    let spec = CorpusSpec {
        day_count: 30,
        n_ticks: 20_000,
        mixture: ClassMixture { bessel: 0.7, two_bessel: 0.15, kummer: 0.1, uniform: 0.05 },
        ..CorpusSpec::default()
    };
    let corpus = synth_corpus(&spec)?;

    let ticks_path = dir.join("ticks.csv");
    let labels_path = dir.join("labels.csv");
    write_ticks(File::create(&ticks_path)?, corpus.ticks())?;
    write_labels(File::create(&labels_path)?, &corpus.truth)?;

    for t in &corpus.truth {
        println!("{} {:<10} p0 = {:.3}  V = {}", t.day, t.family_tag(), t.p0, t.total_volume);
    }
    println!("wrote {} and {}", ticks_path.display(), labels_path.display());
    Ok(())
}

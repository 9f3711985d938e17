//! Classify a mixed synthetic corpus and compare against the planted labels.

use std::collections::BTreeMap;

use pvwave::ingest::{synth_corpus, ClassMixture, CorpusSpec};
use pvwave::{classify_corpus, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = CorpusSpec {
        day_count: 40,
        n_ticks: 50_000,
        mixture: ClassMixture { bessel: 0.7, two_bessel: 0.15, kummer: 0.1, uniform: 0.05 },
        ..CorpusSpec::default()
    };
    let corpus = synth_corpus(&spec)?;
    let result = classify_corpus(&corpus.days, &PipelineConfig::default())?;

    println!("{}", result.summary);

    let mut confusion: BTreeMap<(&str, String), usize> = BTreeMap::new();
    for (truth, day) in corpus.truth.iter().zip(&result.days) {
        *confusion.entry((truth.family_tag(), day.class.to_string())).or_default() += 1;
    }
    println!("planted -> classified");
    for ((planted, class), n) in confusion {
        println!("  {planted:<10} -> {class:<24} {n}");
    }
    Ok(())
}

//! Plant a return/volume correlation that changes halfway through a corpus,
//! run the full pipeline and test the correlation per regime.

use pvwave::ingest::{synth_corpus, CorpusSpec, ResponseRegime, VolumeResponse};
use pvwave::pipeline::equilibrium_series;
use pvwave::{classify_corpus, regime_report, PipelineConfig, RegimeSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let response = VolumeResponse {
        regimes: vec![ResponseRegime { first_day: 0, rho: 0.0 }, ResponseRegime { first_day: 60, rho: 0.6 }],
        ..VolumeResponse::default()
    };
    let spec = CorpusSpec { day_count: 120, n_ticks: 20_000, response, ..CorpusSpec::default() };
    let corpus = synth_corpus(&spec)?;

    let classified = classify_corpus(&corpus.days, &PipelineConfig::default())?;
    let series = equilibrium_series(&classified.days)?;

    let split = corpus.truth[60].day;
    let regimes = [
        RegimeSpec::new("calm", corpus.truth[0].day, split.pred_opt().unwrap()),
        RegimeSpec::new("coupled", split, corpus.truth.last().unwrap().day),
    ];
    let report = regime_report(&series, &regimes, 0.05)?;
    println!("{report}");
    Ok(())
}

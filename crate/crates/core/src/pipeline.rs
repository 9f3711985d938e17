//! Per-day classification cascade and the equilibrium-price series.
//!
//! Stages, each gated on `R² > R²_crit`:
//!
//! 1. single Bessel on the coarse (0.01) distribution → [`DayClass::Agreement`]
//! 2. single Bessel on the fine (0.005) distribution → [`DayClass::Agreement`]
//! 3. two-Bessel superposition → [`DayClass::TwoPriceJump`]
//! 4. first-order Kummer → [`DayClass::ThreePriceIndependent`]
//! 5. otherwise [`DayClass::NoAgreementUniform`]
//!
//! Days with fewer than `min_bins` coarse bins are [`DayClass::Degenerate`].

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitting::{
    fit_best_of, init_bessel, init_kummer, local_maxima, scan_bessel, scan_kummer, scan_two_bessel, two_bessel_seed,
    FitOptions, FitResult, Observations, PEAK_SEPARATION,
};
use crate::ingest::{bin_day, tick_vwap, DailyVolumeDistribution, DayTicks, IngestError, TickSize};
use crate::models::{Family, ModelParams};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no days to classify")]
    NoDays,
    #[error("need at least 2 usable days, found {usable}")]
    InsufficientData { usable: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DayClass {
    Agreement,
    TwoPriceJump,
    ThreePriceIndependent,
    NoAgreementUniform,
    Degenerate,
}

impl DayClass {
    pub const ALL: [DayClass; 5] = [
        DayClass::Agreement,
        DayClass::TwoPriceJump,
        DayClass::ThreePriceIndependent,
        DayClass::NoAgreementUniform,
        DayClass::Degenerate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DayClass::Agreement => "Agreement",
            DayClass::TwoPriceJump => "TwoPriceJump",
            DayClass::ThreePriceIndependent => "ThreePriceIndependent",
            DayClass::NoAgreementUniform => "NoAgreementUniform",
            DayClass::Degenerate => "Degenerate",
        }
    }

    /// Row label in the summary table.
    pub fn description(self) -> &'static str {
        match self {
            DayClass::Agreement => "Agreement and Stationary Equilibrium",
            DayClass::TwoPriceJump => "Two Equilibrium Prices (Price Jump)",
            DayClass::ThreePriceIndependent => "Three Prices, Independent Trading",
            DayClass::NoAgreementUniform => "No Agreement (Uniform)",
            DayClass::Degenerate => "Degenerate (Too Few Bins)",
        }
    }
}

impl fmt::Display for DayClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DayClass {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DayClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown class `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumSource {
    Fitted,
    VolumeWeightedMean,
}

impl EquilibriumSource {
    pub fn as_str(self) -> &'static str {
        match self {
            EquilibriumSource::Fitted => "fitted",
            EquilibriumSource::VolumeWeightedMean => "volume_weighted_mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub coarse_tick: TickSize,
    pub fine_tick: TickSize,
    pub fit: FitOptions,
    /// Fewer coarse bins than this makes the day degenerate.
    pub min_bins: usize,
    /// Fewer fine bins than this skips the six-parameter superposition.
    pub min_bins_two_bessel: usize,
    pub session_seconds: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            coarse_tick: TickSize::COARSE,
            fine_tick: TickSize::FINE,
            fit: FitOptions::default(),
            min_bins: 5,
            min_bins_two_bessel: 8,
            session_seconds: crate::ingest::DEFAULT_SESSION_SECONDS,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.fit.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.min_bins < 4 {
            return Err(PipelineError::Config(format!(
                "min_bins must be at least 4 for a three-parameter fit, got {}",
                self.min_bins
            )));
        }
        if self.min_bins_two_bessel < Family::TwoBessel.param_count() + 2 {
            return Err(PipelineError::Config(format!(
                "min_bins_two_bessel must be at least 8, got {}",
                self.min_bins_two_bessel
            )));
        }
        if !(self.session_seconds > 0.0) {
            return Err(PipelineError::Config("session_seconds must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one cascade stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageAttempt {
    pub stage: u8,
    pub family: Family,
    pub tick_size: TickSize,
    pub n_bins: usize,
    pub r2: Option<f64>,
    pub r2_crit: Option<f64>,
    pub accepted: bool,
    /// Why the stage was skipped or rejected despite a fit.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayClassification {
    pub day: NaiveDate,
    pub class: DayClass,
    /// Stage (1-4) whose fit was accepted.
    pub stage: Option<u8>,
    pub chosen_fit: Option<FitResult>,
    /// Bin width of the distribution the chosen fit was made on.
    pub fit_tick: Option<TickSize>,
    /// `None` only for a day without ticks.
    pub equilibrium_price: Option<f64>,
    pub equilibrium_source: EquilibriumSource,
    pub total_volume: u64,
    /// Coarse bin count.
    pub n_bins: usize,
    /// Coarse-profile maxima above half the peak, at least three bins apart.
    pub peak_count: usize,
    /// Both fitted prices of a two-price day, lower first.
    pub two_prices: Option<(f64, f64)>,
    pub attempts: Vec<StageAttempt>,
    pub flag: Option<String>,
}

fn degenerate(day: NaiveDate, ticks: &DayTicks, n_bins: usize, flag: String) -> DayClassification {
    DayClassification {
        day,
        class: DayClass::Degenerate,
        stage: None,
        chosen_fit: None,
        fit_tick: None,
        equilibrium_price: tick_vwap(&ticks.ticks),
        equilibrium_source: EquilibriumSource::VolumeWeightedMean,
        total_volume: ticks.ticks.iter().map(|t| t.volume).sum(),
        n_bins,
        peak_count: 0,
        two_prices: None,
        attempts: Vec::new(),
        flag: Some(flag),
    }
}

/// Number of maxima at or above half the highest bin, greedily kept from the
/// tallest down when at least [`PEAK_SEPARATION`] bins apart.
pub fn peak_count(dist: &DailyVolumeDistribution) -> usize {
    let profile = dist.dense_profile();
    let top = profile.iter().map(|x| x.1).fold(0.0, f64::max);
    let mut maxima: Vec<usize> = local_maxima(&profile)
        .into_iter()
        .filter(|&i| profile[i].1 >= 0.5 * top)
        .collect();
    maxima.sort_by(|&a, &b| profile[b].1.total_cmp(&profile[a].1).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in maxima {
        if kept.iter().all(|&k| k.abs_diff(i) >= PEAK_SEPARATION) {
            kept.push(i);
        }
    }
    kept.len()
}

fn within(range: (f64, f64), p: f64) -> bool {
    range.0 <= p && p <= range.1
}

/// Starting points for a family: the rule-based seed, then the scanned one.
fn starts(family: Family, dist: &DailyVolumeDistribution, opts: &FitOptions) -> Vec<ModelParams> {
    let obs = Observations::from(dist);
    match family {
        Family::Bessel => vec![
            ModelParams::Bessel(init_bessel(dist)),
            ModelParams::Bessel(scan_bessel(&obs)),
        ],
        Family::TwoBessel => vec![
            ModelParams::TwoBessel(two_bessel_seed(dist, opts).params),
            ModelParams::TwoBessel(scan_two_bessel(dist, opts)),
        ],
        Family::Kummer => vec![
            ModelParams::Kummer(init_kummer(dist)),
            ModelParams::Kummer(scan_kummer(&obs)),
        ],
    }
}

/// Run one stage's fit and decide acceptance.
fn attempt(
    stage: u8,
    family: Family,
    dist: &DailyVolumeDistribution,
    opts: &FitOptions,
) -> (StageAttempt, Option<FitResult>) {
    let mut rec = StageAttempt {
        stage,
        family,
        tick_size: dist.tick_size,
        n_bins: dist.len(),
        r2: None,
        r2_crit: None,
        accepted: false,
        note: None,
    };
    let fit = match fit_best_of(&starts(family, dist, opts), &Observations::from(dist), opts) {
        Ok(fit) => fit,
        Err(e) => {
            rec.note = Some(e.to_string());
            return (rec, None);
        }
    };
    rec.r2 = Some(fit.goodness.r2);
    rec.r2_crit = Some(fit.goodness.r2_crit);
    let range = dist.price_range();
    if fit.failed() {
        rec.note = Some("fit failed: singular normal equations".into());
    } else if !fit.params.equilibrium_prices().iter().all(|&p| within(range, p)) {
        rec.note = Some("fitted equilibrium price outside the traded range".into());
    } else {
        rec.accepted = fit.significant();
    }
    (rec, Some(fit))
}

/// Classify one day. Total: bad input yields a flagged `Degenerate` day.
pub fn classify_day(ticks: &DayTicks, config: &PipelineConfig) -> DayClassification {
    let day = ticks.day;
    if ticks.ticks.is_empty() {
        return degenerate(day, ticks, 0, "empty day".into());
    }
    let coarse = match bin_day(&ticks.ticks, config.coarse_tick) {
        Ok(d) => d.with_session_seconds(config.session_seconds),
        Err(e) => return degenerate(day, ticks, 0, e.to_string()),
    };
    if coarse.len() < config.min_bins {
        return degenerate(
            day,
            ticks,
            coarse.len(),
            format!("{} bins below the floor of {}", coarse.len(), config.min_bins),
        );
    }
    let mut out = DayClassification {
        day,
        class: DayClass::NoAgreementUniform,
        stage: None,
        chosen_fit: None,
        fit_tick: None,
        equilibrium_price: Some(coarse.vwap()),
        equilibrium_source: EquilibriumSource::VolumeWeightedMean,
        total_volume: coarse.total_volume,
        n_bins: coarse.len(),
        peak_count: peak_count(&coarse),
        two_prices: None,
        attempts: Vec::new(),
        flag: None,
    };
    let opts = &config.fit;
    let accept = |out: &mut DayClassification, class, rec: StageAttempt, fit: FitResult, tick| {
        out.class = class;
        out.stage = Some(rec.stage);
        out.fit_tick = Some(tick);
        out.attempts.push(rec);
        out.chosen_fit = Some(fit);
    };

    let (rec, fit) = attempt(1, Family::Bessel, &coarse, opts);
    if rec.accepted {
        let fit = fit.expect("accepted stage has a fit");
        out.equilibrium_price = Some(fit.params.primary_p0());
        out.equilibrium_source = EquilibriumSource::Fitted;
        accept(&mut out, DayClass::Agreement, rec, fit, config.coarse_tick);
        return out;
    }
    out.attempts.push(rec);

    let fine = match bin_day(&ticks.ticks, config.fine_tick) {
        Ok(d) => d.with_session_seconds(config.session_seconds),
        Err(e) => {
            out.flag = Some(e.to_string());
            return out;
        }
    };
    let (rec, fit) = attempt(2, Family::Bessel, &fine, opts);
    if rec.accepted {
        let fit = fit.expect("accepted stage has a fit");
        out.equilibrium_price = Some(fit.params.primary_p0());
        out.equilibrium_source = EquilibriumSource::Fitted;
        accept(&mut out, DayClass::Agreement, rec, fit, config.fine_tick);
        return out;
    }
    out.attempts.push(rec);

    if fine.len() >= config.min_bins_two_bessel {
        let (rec, fit) = attempt(3, Family::TwoBessel, &fine, opts);
        if rec.accepted {
            let fit = fit.expect("accepted stage has a fit");
            if let ModelParams::TwoBessel(t) = fit.params {
                out.two_prices = Some((t.first.p0, t.second.p0));
            }
            accept(&mut out, DayClass::TwoPriceJump, rec, fit, config.fine_tick);
            return out;
        }
        out.attempts.push(rec);
    } else {
        out.attempts.push(StageAttempt {
            stage: 3,
            family: Family::TwoBessel,
            tick_size: config.fine_tick,
            n_bins: fine.len(),
            r2: None,
            r2_crit: None,
            accepted: false,
            note: Some(format!("{} bins below the superposition floor of {}", fine.len(), config.min_bins_two_bessel)),
        });
    }

    let (rec, fit) = attempt(4, Family::Kummer, &fine, opts);
    if rec.accepted {
        let fit = fit.expect("accepted stage has a fit");
        accept(&mut out, DayClass::ThreePriceIndependent, rec, fit, config.fine_tick);
        return out;
    }
    out.attempts.push(rec);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub class: DayClass,
    pub count: usize,
    /// Rounded to 0.01 by largest remainder so the column sums to exactly 100.
    pub percent: f64,
}

/// Counts and percentages per class, one row per class in cascade order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub rows: Vec<SummaryRow>,
    pub total: usize,
}

impl CorpusSummary {
    pub fn from_classes(classes: impl IntoIterator<Item = DayClass>) -> Self {
        let mut counts = [0usize; 5];
        for c in classes {
            counts[c as usize] += 1;
        }
        let total: usize = counts.iter().sum();
        let mut hundredths = [0u64; 5];
        if total > 0 {
            let exact: Vec<u64> = counts.iter().map(|&c| c as u64 * 10_000).collect();
            for i in 0..5 {
                hundredths[i] = exact[i] / total as u64;
            }
            let mut left = 10_000 - hundredths.iter().sum::<u64>();
            let mut order: Vec<usize> = (0..5).collect();
            order.sort_by_key(|&i| (std::cmp::Reverse(exact[i] % total as u64), i));
            for &i in &order {
                if left == 0 {
                    break;
                }
                hundredths[i] += 1;
                left -= 1;
            }
        }
        CorpusSummary {
            rows: DayClass::ALL
                .into_iter()
                .map(|class| SummaryRow {
                    class,
                    count: counts[class as usize],
                    percent: hundredths[class as usize] as f64 / 100.0,
                })
                .collect(),
            total,
        }
    }

    pub fn count(&self, class: DayClass) -> usize {
        self.rows[class as usize].count
    }

    pub fn percent(&self, class: DayClass) -> f64 {
        self.rows[class as usize].percent
    }
}

impl fmt::Display for CorpusSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<40} {:>8} {:>8}", "Class", "Number", "%")?;
        for r in &self.rows {
            writeln!(f, "{:<40} {:>8} {:>8.2}", r.class.description(), r.count, r.percent)?;
        }
        write!(f, "{:<40} {:>8} {:>8.2}", "Total Number of Distributions", self.total, 100.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusClassification {
    /// Sorted by date.
    pub days: Vec<DayClassification>,
    pub summary: CorpusSummary,
}

/// Classify days in parallel; output order and summary depend only on input.
pub fn classify_corpus(days: &[DayTicks], config: &PipelineConfig) -> Result<CorpusClassification, PipelineError> {
    if days.is_empty() {
        return Err(PipelineError::NoDays);
    }
    config.validate()?;
    let mut out: Vec<DayClassification> = days.par_iter().map(|d| classify_day(d, config)).collect();
    out.sort_by_key(|d| d.day);
    let summary = CorpusSummary::from_classes(out.iter().map(|d| d.class));
    Ok(CorpusClassification { days: out, summary })
}

/// One usable day of the equilibrium series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub day: NaiveDate,
    pub p0: f64,
    pub total_volume: u64,
    pub class: DayClass,
    /// A degenerate day was skipped immediately before this one.
    pub after_gap: bool,
}

/// `(day, p₀, V)` for every non-degenerate day, in date order.
pub fn equilibrium_series(classifications: &[DayClassification]) -> Result<Vec<EquilibriumPoint>, PipelineError> {
    series_from(
        classifications
            .iter()
            .map(|d| (d.day, d.class, d.equilibrium_price, d.total_volume))
            .collect(),
    )
}

fn series_from(mut rows: Vec<(NaiveDate, DayClass, Option<f64>, u64)>) -> Result<Vec<EquilibriumPoint>, PipelineError> {
    rows.sort_by_key(|r| r.0);
    let mut out: Vec<EquilibriumPoint> = Vec::new();
    let mut gap = false;
    for (day, class, p0, total_volume) in rows {
        match (class, p0) {
            (DayClass::Degenerate, _) | (_, None) => gap = !out.is_empty(),
            (class, Some(p0)) => {
                out.push(EquilibriumPoint {
                    day,
                    p0,
                    total_volume,
                    class,
                    after_gap: gap,
                });
                gap = false;
            }
        }
    }
    if out.len() < 2 {
        return Err(PipelineError::InsufficientData { usable: out.len() });
    }
    Ok(out)
}

/// Equilibrium series from a classification CSV written by
/// [`write_classifications`].
pub fn read_equilibrium_series<R: Read>(reader: R) -> Result<Vec<EquilibriumPoint>, PipelineError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PipelineError::Parse {
                line: 1,
                reason: format!("missing column `{name}`"),
            })
    };
    let (c_date, c_class, c_p0, c_volume) = (col("date")?, col("class")?, col("p0")?, col("total_volume")?);
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let bad = |reason: String| PipelineError::Parse { line, reason };
        let field = |c: usize| rec.get(c).unwrap_or("").trim();
        let day = NaiveDate::parse_from_str(field(c_date), "%Y-%m-%d").map_err(|e| bad(format!("date: {e}")))?;
        let class: DayClass = field(c_class).parse().map_err(|_| bad(format!("unknown class `{}`", field(c_class))))?;
        let p0 = match field(c_p0) {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|e| bad(format!("p0: {e}")))?),
        };
        let volume: u64 = field(c_volume).parse().map_err(|e| bad(format!("total_volume: {e}")))?;
        rows.push((day, class, p0, volume));
    }
    series_from(rows)
}

pub const CLASSIFICATION_HEADER: [&str; 14] = [
    "date",
    "class",
    "p0",
    "p0_source",
    "C",
    "omega",
    "sqrtA",
    "R2",
    "F",
    "R2_crit",
    "significant",
    "model",
    "n_bins",
    "total_volume",
];

fn num(x: f64) -> String {
    format!("{x}")
}

/// `C`, `ω`, `√A` columns; superposition components are joined with `;`.
fn param_columns(params: &ModelParams) -> [String; 3] {
    match params {
        ModelParams::Bessel(b) => [num(b.c), num(b.omega), String::new()],
        ModelParams::TwoBessel(t) => [
            format!("{};{}", num(t.first.c), num(t.second.c)),
            format!("{};{}", num(t.first.omega), num(t.second.omega)),
            String::new(),
        ],
        ModelParams::Kummer(k) => [num(k.c), String::new(), num(k.sqrt_a)],
    }
}

fn model_tag(params: &ModelParams) -> String {
    match params {
        ModelParams::Kummer(k) => format!("kummer{}", k.order),
        other => other.family().as_str().to_string(),
    }
}

pub fn write_classifications<W: Write>(writer: W, days: &[DayClassification]) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CLASSIFICATION_HEADER)?;
    for d in days {
        let p0 = d.equilibrium_price.map(num).unwrap_or_default();
        let mut row = vec![
            d.day.format("%Y-%m-%d").to_string(),
            d.class.to_string(),
            p0,
            d.equilibrium_source.as_str().to_string(),
        ];
        match &d.chosen_fit {
            Some(fit) => {
                row.extend(param_columns(&fit.params));
                let g = &fit.goodness;
                row.extend([num(g.r2), num(g.f), num(g.r2_crit), g.significant.to_string()]);
                row.push(model_tag(&fit.params));
            }
            None => {
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push("false".into());
                row.push("none".into());
            }
        }
        row.push(d.n_bins.to_string());
        row.push(d.total_volume.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Summary CSV: `class,description,count,percent` plus a total row.
pub fn write_summary<W: Write>(writer: W, summary: &CorpusSummary) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["class", "description", "count", "percent"])?;
    for r in &summary.rows {
        w.write_record([
            r.class.as_str(),
            r.class.description(),
            &r.count.to_string(),
            &format!("{:.2}", r.percent),
        ])?;
    }
    w.write_record(["Total", "Total Number of Distributions", &summary.total.to_string(), "100.00"])?;
    w.flush()?;
    Ok(())
}

/// Observed probabilities next to the chosen fit: `price,probability,fitted`.
pub fn write_plot_data<W: Write>(
    writer: W,
    ticks: &DayTicks,
    classification: &DayClassification,
) -> Result<(), PipelineError> {
    let tick = classification.fit_tick.unwrap_or(TickSize::COARSE);
    let dist = bin_day(&ticks.ticks, tick)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["price", "probability", "fitted"])?;
    for (p, y) in dist.dense_profile() {
        let fitted = classification
            .chosen_fit
            .as_ref()
            .map(|f| num(f.params.eval(p)))
            .unwrap_or_default();
        w.write_record([format!("{p:.3}"), num(y), fitted])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{synth_day, PriceGrid, SynthDaySpec, SynthFamily, TickRecord};
    use crate::ingest::{Price, TickSize};
    use crate::models::{BesselParams, TwoBesselParams};
    use chrono::NaiveTime;

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2007, 4, d).unwrap()
    }

    fn synth(family: SynthFamily, lo: i64, hi: i64, seed: u64) -> DayTicks {
        let grid = PriceGrid::new(Price::from_millis(lo), Price::from_millis(hi), TickSize::FINE).unwrap();
        let spec = SynthDaySpec::new(day(2), family, 100_000, grid, seed);
        DayTicks {
            day: day(2),
            ticks: synth_day(&spec).unwrap(),
        }
    }

    #[test]
    fn bessel_day_is_agreement() {
        let fam = SynthFamily::Bessel(BesselParams::new(0.2, 50.0, 10.0).unwrap());
        let c = classify_day(&synth(fam, 9_800, 10_200, 1), &PipelineConfig::default());
        assert_eq!(c.class, DayClass::Agreement);
        assert_eq!(c.stage, Some(1));
        assert_eq!(c.equilibrium_source, EquilibriumSource::Fitted);
        assert!((c.equilibrium_price.unwrap() - 10.0).abs() <= 0.01);
        assert_eq!(c.attempts.len(), 1);
    }

    #[test]
    fn uniform_day_is_no_agreement() {
        // 9.845 rounds up into the 9.85 bin, so every coarse bin holds two grid points
        let c = classify_day(&synth(SynthFamily::Uniform, 9_845, 10_140, 4), &PipelineConfig::default());
        assert_eq!(c.n_bins, 30);
        assert_eq!(c.class, DayClass::NoAgreementUniform);
        assert_eq!(c.equilibrium_source, EquilibriumSource::VolumeWeightedMean);
        let p = c.equilibrium_price.unwrap();
        assert!((9.85..=10.14).contains(&p));
        assert_eq!(c.attempts.len(), 4);
    }

    #[test]
    fn too_few_bins_is_degenerate() {
        let ticks: Vec<TickRecord> = (0..4)
            .map(|i| TickRecord {
                day: day(2),
                time: NaiveTime::from_hms_opt(10, 0, i).unwrap(),
                price: Price::from_millis(10_000 + 10 * i as i64),
                volume: 100,
            })
            .collect();
        let c = classify_day(&DayTicks { day: day(2), ticks }, &PipelineConfig::default());
        assert_eq!(c.class, DayClass::Degenerate);
        assert_eq!(c.n_bins, 4);
        assert!(c.flag.is_some());
    }

    #[test]
    fn empty_day_is_flagged_degenerate() {
        let c = classify_day(&DayTicks { day: day(2), ticks: vec![] }, &PipelineConfig::default());
        assert_eq!(c.class, DayClass::Degenerate);
        assert_eq!(c.equilibrium_price, None);
        assert_eq!(c.flag.as_deref(), Some("empty day"));
    }

    #[test]
    fn two_peak_day_is_price_jump() {
        let a = BesselParams::new(1.0, 70.0, 9.9).unwrap();
        let b = BesselParams::new(1.0, 70.0, 10.1).unwrap();
        let fam = SynthFamily::TwoBessel(TwoBesselParams::new(a, b));
        let c = classify_day(&synth(fam, 9_800, 10_200, 9), &PipelineConfig::default());
        assert_eq!(c.class, DayClass::TwoPriceJump);
        let (lo, hi) = c.two_prices.unwrap();
        assert!((lo - 9.9).abs() <= 0.01 && (hi - 10.1).abs() <= 0.01, "{lo} {hi}");
        assert_eq!(c.equilibrium_source, EquilibriumSource::VolumeWeightedMean);
        assert!(c.peak_count >= 2);
    }

    fn classified(d: u32, class: DayClass, p0: f64) -> DayClassification {
        DayClassification {
            day: day(d),
            class,
            stage: None,
            chosen_fit: None,
            fit_tick: None,
            equilibrium_price: Some(p0),
            equilibrium_source: EquilibriumSource::Fitted,
            total_volume: 1000,
            n_bins: 10,
            peak_count: 1,
            two_prices: None,
            attempts: vec![],
            flag: None,
        }
    }

    #[test]
    fn series_in_date_order() {
        let days = vec![
            classified(4, DayClass::Agreement, 10.05),
            classified(2, DayClass::Agreement, 10.0),
            classified(3, DayClass::Agreement, 10.1),
        ];
        let s = equilibrium_series(&days).unwrap();
        let p: Vec<f64> = s.iter().map(|x| x.p0).collect();
        assert_eq!(p, vec![10.0, 10.1, 10.05]);
        assert!(s.iter().all(|x| !x.after_gap));
    }

    #[test]
    fn series_skips_degenerate() {
        let days = vec![
            classified(2, DayClass::Agreement, 10.0),
            classified(3, DayClass::Degenerate, 10.1),
            classified(4, DayClass::TwoPriceJump, 10.05),
        ];
        let s = equilibrium_series(&days).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].day, day(4));
        assert!(s[1].after_gap);
        assert!(equilibrium_series(&days[..2]).is_err());
    }

    #[test]
    fn summary_sums_to_hundred() {
        let classes = [DayClass::Agreement, DayClass::Agreement, DayClass::TwoPriceJump];
        let s = CorpusSummary::from_classes(classes);
        let total: f64 = s.rows.iter().map(|r| r.percent).sum();
        assert!((total - 100.0).abs() < 1e-9);
        assert_eq!(s.percent(DayClass::Agreement), 66.67);
        assert_eq!(s.percent(DayClass::TwoPriceJump), 33.33);
        assert_eq!(s.count(DayClass::Degenerate), 0);
    }

    #[test]
    fn all_bessel_corpus_summary() {
        let fam = SynthFamily::Bessel(BesselParams::new(0.2, 50.0, 10.0).unwrap());
        let days: Vec<DayTicks> = (0..10)
            .map(|i| {
                let mut d = synth(fam, 9_800, 10_200, 100 + i);
                d.day = day(2 + i as u32);
                d.ticks.iter_mut().for_each(|t| t.day = d.day);
                d
            })
            .collect();
        let out = classify_corpus(&days, &PipelineConfig::default()).unwrap();
        assert_eq!(out.summary.percent(DayClass::Agreement), 100.0);
        assert!(out.days.windows(2).all(|w| w[0].day < w[1].day));
    }

    #[test]
    fn csv_has_header_and_row_per_day() {
        let days = vec![classified(2, DayClass::NoAgreementUniform, 10.0)];
        let mut buf = Vec::new();
        write_classifications(&mut buf, &days).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CLASSIFICATION_HEADER.join(","));
        assert!(lines.next().unwrap().starts_with("2007-04-02,NoAgreementUniform,10,"));
    }

    #[test]
    fn series_round_trips_through_csv() {
        let days = vec![
            classified(2, DayClass::Agreement, 10.0),
            classified(3, DayClass::Degenerate, 10.1),
            classified(4, DayClass::TwoPriceJump, 10.05),
        ];
        let mut buf = Vec::new();
        write_classifications(&mut buf, &days).unwrap();
        let back = read_equilibrium_series(buf.as_slice()).unwrap();
        assert_eq!(back, equilibrium_series(&days).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut c = PipelineConfig::default();
        assert!(c.validate().is_ok());
        c.min_bins_two_bessel = 7;
        assert!(c.validate().is_err());
        assert!(classify_corpus(&[], &PipelineConfig::default()).is_err());
    }
}

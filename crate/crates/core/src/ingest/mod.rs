//! Tick data ingestion and per-day binning.
//!
//! Prices are carried as integer thousandths of a currency unit so that the
//! half-up rounding onto a tick grid is exact. A day's distribution stores the
//! volume per price bin together with its probability `v / V`.

mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{NaiveDate, NaiveTime};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use synth::{
    default_session_start, synth_corpus, synth_day, write_labels, ClassMixture, CorpusSpec, GroundTruth, JumpProcess,
    Planting, PriceGrid, ResponseRegime, ShapeRanges, SynthCorpus, SynthDaySpec, SynthFamily,
    VolumeResponse,
};

/// Default session length: four trading hours.
pub const DEFAULT_SESSION_SECONDS: f64 = 4.0 * 3600.0;

pub const TICK_HEADER: [&str; 4] = ["date", "time", "price", "volume"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("unexpected header `{found}`, expected `date,time,price,volume`")]
    Header { found: String },
    #[error("line {line}: {reason}")]
    Row { line: u64, reason: String },
    #[error("no ticks for day")]
    EmptyDay,
    #[error("ticks span more than one day ({first} and {other})")]
    MixedDays { first: NaiveDate, other: NaiveDate },
    #[error("invalid tick size: {0}")]
    TickSize(String),
    #[error("degenerate synthetic spec: {0}")]
    DegenerateSpec(String),
    #[error("{0}")]
    Domain(String),
}

/// A price in thousandths of a currency unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Price(i64);

impl Price {
    pub fn from_millis(millis: i64) -> Self {
        Price(millis)
    }

    /// Nearest thousandth, half away from zero.
    pub fn from_f64(value: f64) -> Self {
        Price((value * 1000.0).round() as i64)
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// Round half-up onto a multiple of `tick`.
    pub fn round_to(self, tick: TickSize) -> Price {
        let t = tick.millis();
        Price((2 * self.0 + t).div_euclid(2 * t) * t)
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:03}", abs / 1000, abs % 1000)
    }
}

impl FromStr for Price {
    type Err = String;

    /// Decimal with at most three fractional digits.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        let digits_only = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
        if int_part.is_empty() || !digits_only(int_part) || !digits_only(frac_part) {
            return Err(format!("invalid price `{s}`"));
        }
        if frac_part.len() > 3 {
            return Err(format!("price `{s}` has more than 3 fractional digits"));
        }
        let whole: i64 = int_part
            .parse()
            .map_err(|_| format!("invalid price `{s}`"))?;
        let mut frac: i64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| format!("invalid price `{s}`"))?
        };
        for _ in frac_part.len()..3 {
            frac *= 10;
        }
        Ok(Price(whole * 1000 + frac))
    }
}

/// Width of a price bin, in thousandths. Serialises as a decimal number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TickSize(i64);

impl TickSize {
    pub const COARSE: TickSize = TickSize(10);
    pub const FINE: TickSize = TickSize(5);

    pub fn from_millis(millis: i64) -> Result<Self, IngestError> {
        if millis <= 0 {
            return Err(IngestError::TickSize(format!("{millis} thousandths")));
        }
        Ok(TickSize(millis))
    }

    pub fn from_f64(value: f64) -> Result<Self, IngestError> {
        let millis = (value * 1000.0).round();
        if !value.is_finite() || (value * 1000.0 - millis).abs() > 1e-6 {
            return Err(IngestError::TickSize(format!(
                "{value} is not a multiple of 0.001"
            )));
        }
        Self::from_millis(millis as i64)
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl TryFrom<f64> for TickSize {
    type Error = IngestError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        TickSize::from_f64(value)
    }
}

impl From<TickSize> for f64 {
    fn from(t: TickSize) -> f64 {
        t.to_f64()
    }
}

impl fmt::Display for TickSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Price(self.0).fmt(f)
    }
}

/// One trade print.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickRecord {
    pub day: NaiveDate,
    pub time: NaiveTime,
    pub price: Price,
    pub volume: u64,
}

/// All ticks of one trading day, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct DayTicks {
    pub day: NaiveDate,
    pub ticks: Vec<TickRecord>,
}

/// Intra-day time filter, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionWindow {
    pub start: NaiveTime,
    pub end: NaiveTime,
}

impl SessionWindow {
    pub fn contains(&self, t: NaiveTime) -> bool {
        self.start <= t && t <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BadRowPolicy {
    #[default]
    Fail,
    Skip,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    pub bad_rows: BadRowPolicy,
    pub session: Option<SessionWindow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedTicks {
    pub days: Vec<DayTicks>,
    /// Rows dropped under [`BadRowPolicy::Skip`].
    pub rejected: Vec<RowError>,
    /// Rows outside the session window.
    pub filtered: usize,
}

impl ParsedTicks {
    pub fn tick_count(&self) -> usize {
        self.days.iter().map(|d| d.ticks.len()).sum()
    }
}

fn parse_row(record: &csv::StringRecord) -> Result<TickRecord, String> {
    if record.len() != 4 {
        return Err(format!("expected 4 fields, found {}", record.len()));
    }
    let day = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
        .map_err(|e| format!("bad date `{}`: {e}", &record[0]))?;
    let time = NaiveTime::parse_from_str(&record[1], "%H:%M:%S")
        .map_err(|e| format!("bad time `{}`: {e}", &record[1]))?;
    let price: Price = record[2].parse()?;
    if price.millis() <= 0 {
        return Err(format!("price must be positive, got {price}"));
    }
    let volume: u64 = record[3]
        .trim()
        .parse()
        .map_err(|_| format!("bad volume `{}`", &record[3]))?;
    if volume == 0 {
        return Err("volume must be at least 1".to_string());
    }
    Ok(TickRecord {
        day,
        time,
        price,
        volume,
    })
}

/// Parse a tick CSV, grouping records by day in order of first appearance.
pub fn parse_ticks<R: Read>(reader: R, opts: &ParseOptions) -> Result<ParsedTicks, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let mut out = ParsedTicks::default();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Ok(out);
    }
    if header.iter().ne(TICK_HEADER.iter().copied()) {
        return Err(IngestError::Header {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut by_day: IndexMap<NaiveDate, Vec<TickRecord>> = IndexMap::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(e.into()),
        }
        let line = record.position().map(|p| p.line()).unwrap_or(line);
        match parse_row(&record) {
            Ok(tick) => {
                if opts.session.is_some_and(|w| !w.contains(tick.time)) {
                    out.filtered += 1;
                    continue;
                }
                by_day.entry(tick.day).or_default().push(tick);
            }
            Err(reason) => match opts.bad_rows {
                BadRowPolicy::Fail => return Err(IngestError::Row { line, reason }),
                BadRowPolicy::Skip => out.rejected.push(RowError { line, reason }),
            },
        }
    }
    out.days = by_day
        .into_iter()
        .map(|(day, ticks)| DayTicks { day, ticks })
        .collect();
    Ok(out)
}

/// Write ticks in the CSV format accepted by [`parse_ticks`].
pub fn write_ticks<'a, W: Write>(
    writer: W,
    ticks: impl IntoIterator<Item = &'a TickRecord>,
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TICK_HEADER)?;
    for t in ticks {
        w.write_record([
            t.day.format("%Y-%m-%d").to_string(),
            t.time.format("%H:%M:%S").to_string(),
            t.price.to_string(),
            t.volume.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBin {
    pub price: Price,
    pub volume: u64,
    pub probability: f64,
}

/// Volume probability `P = v / V` per price bin for one trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyVolumeDistribution {
    pub day: NaiveDate,
    pub tick_size: TickSize,
    /// Strictly increasing prices, zero-volume bins omitted.
    pub bins: Vec<PriceBin>,
    pub total_volume: u64,
    pub session_seconds: f64,
}

impl DailyVolumeDistribution {
    /// Build from per-bin volumes. Bins are merged by price and sorted.
    pub fn from_volumes(
        day: NaiveDate,
        tick_size: TickSize,
        volumes: impl IntoIterator<Item = (Price, u64)>,
    ) -> Result<Self, IngestError> {
        let mut acc: BTreeMap<Price, u64> = BTreeMap::new();
        for (price, v) in volumes {
            if price.millis() % tick_size.millis() != 0 {
                return Err(IngestError::Domain(format!(
                    "price {price} is not a multiple of tick {tick_size}"
                )));
            }
            if v > 0 {
                *acc.entry(price).or_default() += v;
            }
        }
        let total_volume: u64 = acc.values().sum();
        if total_volume == 0 {
            return Err(IngestError::EmptyDay);
        }
        let total = total_volume as f64;
        let bins = acc
            .into_iter()
            .map(|(price, volume)| PriceBin {
                price,
                volume,
                probability: volume as f64 / total,
            })
            .collect();
        Ok(DailyVolumeDistribution {
            day,
            tick_size,
            bins,
            total_volume,
            session_seconds: DEFAULT_SESSION_SECONDS,
        })
    }

    pub fn with_session_seconds(mut self, seconds: f64) -> Self {
        self.session_seconds = seconds;
        self
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.price.to_f64()).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.probability).collect()
    }

    pub fn price_range(&self) -> (f64, f64) {
        let first = self.bins.first().map(|b| b.price.to_f64()).unwrap_or(0.0);
        let last = self.bins.last().map(|b| b.price.to_f64()).unwrap_or(0.0);
        (first, last)
    }

    /// Highest-volume price. Ties resolve to the volume-weighted mean of the
    /// tied bin prices.
    pub fn modal_price(&self) -> f64 {
        let max = self.bins.iter().map(|b| b.volume).max().unwrap_or(0);
        let tied: Vec<&PriceBin> = self.bins.iter().filter(|b| b.volume == max).collect();
        let weight: f64 = tied.iter().map(|b| b.volume as f64).sum();
        tied.iter()
            .map(|b| b.price.to_f64() * b.volume as f64)
            .sum::<f64>()
            / weight
    }

    pub fn modal_probability(&self) -> f64 {
        self.bins
            .iter()
            .map(|b| b.probability)
            .fold(0.0, f64::max)
    }

    /// Volume-weighted mean price.
    pub fn vwap(&self) -> f64 {
        let num: f64 = self
            .bins
            .iter()
            .map(|b| b.price.to_f64() * b.volume as f64)
            .sum();
        num / self.total_volume as f64
    }

    /// Probabilities on the full tick grid from the lowest to the highest
    /// traded bin, with zeros for untraded bins.
    pub fn dense_profile(&self) -> Vec<(f64, f64)> {
        let (Some(first), Some(last)) = (self.bins.first(), self.bins.last()) else {
            return Vec::new();
        };
        let t = self.tick_size.millis();
        let n = ((last.price.millis() - first.price.millis()) / t) as usize + 1;
        let mut out: Vec<(f64, f64)> = (0..n)
            .map(|i| (Price(first.price.millis() + i as i64 * t).to_f64(), 0.0))
            .collect();
        for b in &self.bins {
            let i = ((b.price.millis() - first.price.millis()) / t) as usize;
            out[i].1 = b.probability;
        }
        out
    }
}

/// Round every tick half-up onto `tick_size` and normalise volumes by the
/// day's total.
pub fn bin_day(
    ticks: &[TickRecord],
    tick_size: TickSize,
) -> Result<DailyVolumeDistribution, IngestError> {
    let first = ticks.first().ok_or(IngestError::EmptyDay)?;
    if let Some(other) = ticks.iter().find(|t| t.day != first.day) {
        return Err(IngestError::MixedDays {
            first: first.day,
            other: other.day,
        });
    }
    DailyVolumeDistribution::from_volumes(
        first.day,
        tick_size,
        ticks.iter().map(|t| (t.price.round_to(tick_size), t.volume)),
    )
}

/// Volume-weighted mean of raw tick prices.
pub fn tick_vwap(ticks: &[TickRecord]) -> Option<f64> {
    let volume: u64 = ticks.iter().map(|t| t.volume).sum();
    if volume == 0 {
        return None;
    }
    let num: f64 = ticks
        .iter()
        .map(|t| t.price.to_f64() * t.volume as f64)
        .sum();
    Some(num / volume as f64)
}

//! Seeded synthetic tick data.
//!
//! A day draws `n_ticks` prices from the normalised `|model|` over a price
//! grid; a corpus strings days together with an equilibrium-price random walk
//! and a total-volume process whose day-over-day change is correlated with the
//! return at a planted `ρ`.

use std::io::Write;

use chrono::{Datelike, Duration, NaiveDate, NaiveTime, Weekday};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{DayTicks, IngestError, Price, TickRecord, TickSize};
use crate::models::{BesselParams, KummerParams, TwoBesselParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SynthFamily {
    Bessel(BesselParams),
    TwoBessel(TwoBesselParams),
    #[serde(rename = "kummer1")]
    Kummer(KummerParams),
    /// Flat over the whole grid.
    Uniform,
}

impl SynthFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            SynthFamily::Bessel(_) => "bessel",
            SynthFamily::TwoBessel(_) => "two_bessel",
            SynthFamily::Kummer(_) => "kummer1",
            SynthFamily::Uniform => "uniform",
        }
    }

    fn weight(&self, p: f64) -> f64 {
        match self {
            SynthFamily::Bessel(b) => b.eval(p),
            SynthFamily::TwoBessel(t) => t.eval(p),
            SynthFamily::Kummer(k) => k.eval(p),
            SynthFamily::Uniform => 1.0,
        }
    }

    fn equilibrium_prices(&self) -> Vec<f64> {
        match self {
            SynthFamily::Bessel(b) => vec![b.p0],
            SynthFamily::TwoBessel(t) => vec![t.first.p0, t.second.p0],
            SynthFamily::Kummer(k) => vec![k.p0],
            SynthFamily::Uniform => vec![],
        }
    }
}

/// Inclusive price grid `min, min + tick, ..., max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PriceGrid {
    pub min: Price,
    pub max: Price,
    pub tick: TickSize,
}

impl PriceGrid {
    pub fn new(min: Price, max: Price, tick: TickSize) -> Result<Self, IngestError> {
        let t = tick.millis();
        if min.millis() <= 0 || max < min || min.millis() % t != 0 || max.millis() % t != 0 {
            return Err(IngestError::DegenerateSpec(format!(
                "grid [{min}, {max}] step {tick} is not a positive tick-aligned range"
            )));
        }
        Ok(PriceGrid { min, max, tick })
    }

    /// Grid of `center ± half_width`, both ends rounded onto the tick.
    pub fn around(center: f64, half_width: f64, tick: TickSize) -> Result<Self, IngestError> {
        let lo = Price::from_f64(center - half_width).round_to(tick);
        let hi = Price::from_f64(center + half_width).round_to(tick);
        PriceGrid::new(lo, hi, tick)
    }

    pub fn points(&self) -> Vec<Price> {
        let t = self.tick.millis();
        (self.min.millis()..=self.max.millis())
            .step_by(t as usize)
            .map(Price::from_millis)
            .collect()
    }

    pub fn contains(&self, p: f64) -> bool {
        self.min.to_f64() <= p && p <= self.max.to_f64()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDaySpec {
    pub day: NaiveDate,
    pub family: SynthFamily,
    pub n_ticks: usize,
    pub grid: PriceGrid,
    pub seed: u64,
    /// Split as evenly as possible across ticks; defaults to 100 shares each.
    pub total_volume: Option<u64>,
    pub session_start: NaiveTime,
    pub session_seconds: u32,
}

impl SynthDaySpec {
    pub fn new(day: NaiveDate, family: SynthFamily, n_ticks: usize, grid: PriceGrid, seed: u64) -> Self {
        SynthDaySpec {
            day,
            family,
            n_ticks,
            grid,
            seed,
            total_volume: None,
            session_start: default_session_start(),
            session_seconds: super::DEFAULT_SESSION_SECONDS as u32,
        }
    }

    /// Normalised target probability of each grid point.
    pub fn target_probabilities(&self) -> Result<Vec<(Price, f64)>, IngestError> {
        let points = self.grid.points();
        let weights: Vec<f64> = points.iter().map(|p| self.family.weight(p.to_f64())).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(IngestError::DegenerateSpec(format!(
                "{} model vanishes over [{}, {}]",
                self.family.tag(),
                self.grid.min,
                self.grid.max
            )));
        }
        Ok(points.into_iter().zip(weights.into_iter().map(|w| w / total)).collect())
    }

    fn validate(&self) -> Result<(), IngestError> {
        if self.n_ticks == 0 {
            return Err(IngestError::DegenerateSpec("n_ticks must be at least 1".into()));
        }
        if let Some(v) = self.total_volume {
            if v < self.n_ticks as u64 {
                return Err(IngestError::DegenerateSpec(format!(
                    "total volume {v} below tick count {}",
                    self.n_ticks
                )));
            }
        }
        if self.session_seconds == 0 {
            return Err(IngestError::DegenerateSpec("empty session".into()));
        }
        let end = self.session_start.signed_duration_since(NaiveTime::MIN)
            + Duration::seconds(self.session_seconds as i64);
        if end > Duration::days(1) {
            return Err(IngestError::DegenerateSpec("session runs past midnight".into()));
        }
        for p0 in self.family.equilibrium_prices() {
            if !self.grid.contains(p0) {
                return Err(IngestError::DegenerateSpec(format!(
                    "equilibrium price {p0} outside grid [{}, {}]",
                    self.grid.min, self.grid.max
                )));
            }
        }
        Ok(())
    }
}

pub fn default_session_start() -> NaiveTime {
    NaiveTime::from_hms_opt(9, 30, 0).unwrap()
}

/// Draw one day of ticks. Identical specs give identical output.
pub fn synth_day(spec: &SynthDaySpec) -> Result<Vec<TickRecord>, IngestError> {
    spec.validate()?;
    let target = spec.target_probabilities()?;
    let sampler = WeightedIndex::new(target.iter().map(|t| t.1))
        .map_err(|e| IngestError::DegenerateSpec(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_ticks;
    let total = spec.total_volume.unwrap_or(100 * n as u64);
    let (base, extra) = (total / n as u64, (total % n as u64) as usize);
    let mut draws: Vec<(u32, usize, usize)> = (0..n)
        .map(|i| {
            let bin = sampler.sample(&mut rng);
            let second = rng.random_range(0..spec.session_seconds);
            (second, i, bin)
        })
        .collect();
    draws.sort_unstable();
    Ok(draws
        .into_iter()
        .map(|(second, i, bin)| TickRecord {
            day: spec.day,
            time: spec.session_start + Duration::seconds(second as i64),
            price: target[bin].0,
            volume: base + u64::from(i < extra),
        })
        .collect())
}

/// Class proportions of a synthetic corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMixture {
    pub bessel: f64,
    pub two_bessel: f64,
    pub kummer: f64,
    pub uniform: f64,
}

impl ClassMixture {
    pub fn all_bessel() -> Self {
        ClassMixture {
            bessel: 1.0,
            two_bessel: 0.0,
            kummer: 0.0,
            uniform: 0.0,
        }
    }

    fn as_array(&self) -> [f64; 4] {
        [self.bessel, self.two_bessel, self.kummer, self.uniform]
    }

    /// Largest-remainder apportionment of `days` to the four classes.
    fn quotas(&self, days: usize) -> [usize; 4] {
        let w = self.as_array();
        let exact: Vec<f64> = w.iter().map(|x| x * days as f64).collect();
        let mut q: [usize; 4] = [0; 4];
        for i in 0..4 {
            q[i] = exact[i].floor() as usize;
        }
        let mut left = days - q.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| {
            (exact[b] - exact[b].floor())
                .total_cmp(&(exact[a] - exact[a].floor()))
                .then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            q[i] += 1;
            left -= 1;
        }
        q
    }
}

/// Geometric random walk of the equilibrium price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpProcess {
    pub start_price: f64,
    /// Standard deviation of the daily return `Δp / p₀`.
    pub return_sd: f64,
}

impl Default for JumpProcess {
    fn default() -> Self {
        JumpProcess {
            start_price: 10.0,
            return_sd: 0.02,
        }
    }
}

/// Planted correlation from day `first_day` (index into the corpus) onward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseRegime {
    pub first_day: usize,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Planting {
    /// Shocks are bivariate normal with correlation ρ.
    #[default]
    Population,
    /// Shocks are orthogonalised so each regime's sample correlation is
    /// exactly ρ.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeResponse {
    /// Sorted by `first_day`; the first entry should start at day 0 or 1.
    pub regimes: Vec<ResponseRegime>,
    /// Standard deviation of the daily volume change `ΔV / V`.
    pub volume_sd: f64,
    pub start_volume: u64,
    pub planting: Planting,
}

impl VolumeResponse {
    pub fn constant(rho: f64) -> Self {
        VolumeResponse {
            regimes: vec![ResponseRegime { first_day: 0, rho }],
            ..Default::default()
        }
    }

    fn regime_of(&self, day: usize) -> usize {
        self.regimes
            .iter()
            .rposition(|r| r.first_day <= day)
            .unwrap_or(0)
    }
}

impl Default for VolumeResponse {
    fn default() -> Self {
        VolumeResponse {
            regimes: vec![ResponseRegime { first_day: 0, rho: 0.0 }],
            volume_sd: 0.15,
            start_volume: 360_000_000,
            planting: Planting::Population,
        }
    }
}

/// Ranges the per-day shape parameters are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapeRanges {
    pub bessel_omega: (f64, f64),
    /// Grid half-width around `p₀` for single-Bessel days.
    pub bessel_half_width: f64,
    pub two_bessel_omega: (f64, f64),
    /// Distance between the two equilibrium prices.
    pub two_bessel_separation: f64,
    /// Grid extension beyond each two-Bessel peak.
    pub two_bessel_margin: f64,
    pub kummer_sqrt_a: (f64, f64),
    pub kummer_half_width: f64,
    /// Number of 0.01-wide bins a uniform day spreads over.
    pub uniform_bins: usize,
}

impl Default for ShapeRanges {
    fn default() -> Self {
        ShapeRanges {
            bessel_omega: (45.0, 55.0),
            bessel_half_width: 0.20,
            two_bessel_omega: (60.0, 80.0),
            two_bessel_separation: 0.20,
            two_bessel_margin: 0.10,
            kummer_sqrt_a: (15.0, 25.0),
            kummer_half_width: 0.25,
            uniform_bins: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub first_day: NaiveDate,
    pub day_count: usize,
    pub mixture: ClassMixture,
    pub jump: JumpProcess,
    pub response: VolumeResponse,
    pub shapes: ShapeRanges,
    pub n_ticks: usize,
    /// Grid spacing of generated prices, in currency units.
    pub tick: f64,
    pub seed: u64,
    pub session_start: NaiveTime,
    pub session_seconds: u32,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            first_day: NaiveDate::from_ymd_opt(2007, 4, 2).unwrap(),
            day_count: 20,
            mixture: ClassMixture::all_bessel(),
            jump: JumpProcess::default(),
            response: VolumeResponse::default(),
            shapes: ShapeRanges::default(),
            n_ticks: 100_000,
            tick: 0.005,
            seed: 7,
            session_start: default_session_start(),
            session_seconds: super::DEFAULT_SESSION_SECONDS as u32,
        }
    }
}

/// Planted truth for one synthetic day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub day: NaiveDate,
    pub family: SynthFamily,
    /// Equilibrium price; the midpoint of the two prices for two-Bessel days.
    pub p0: f64,
    pub total_volume: u64,
    /// Planted `Δp/p₀` relative to the previous day (absent on day 0).
    pub mean_return: Option<f64>,
    /// Planted `ΔV/V` relative to the previous day (absent on day 0).
    pub volume_change: Option<f64>,
    /// Target grid probabilities normalisation constant `C`.
    pub normalisation: f64,
    pub grid: (f64, f64),
}

impl GroundTruth {
    pub fn family_tag(&self) -> &'static str {
        self.family.tag()
    }

    pub fn params_json(&self) -> serde_json::Value {
        let c = self.normalisation;
        match self.family {
            SynthFamily::Bessel(b) => json!({"C": c * b.c, "omega": b.omega, "p0": b.p0}),
            SynthFamily::TwoBessel(t) => json!({
                "C1": c * t.first.c, "omega1": t.first.omega, "p01": t.first.p0,
                "C2": c * t.second.c, "omega2": t.second.omega, "p02": t.second.p0,
            }),
            SynthFamily::Kummer(k) => json!({"C": c * k.c, "sqrtA": k.sqrt_a, "p0": k.p0, "n": k.order}),
            SynthFamily::Uniform => json!({"C": c, "min": self.grid.0, "max": self.grid.1}),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub days: Vec<DayTicks>,
    pub truth: Vec<GroundTruth>,
}

impl SynthCorpus {
    pub fn ticks(&self) -> impl Iterator<Item = &TickRecord> {
        self.days.iter().flat_map(|d| d.ticks.iter())
    }
}

/// Mix a stream seed with a day index so every day has its own RNG stream.
fn day_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn business_days(first: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = first;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date overflow");
    }
    out
}

/// Correlated `(return, volume)` shocks for days `1..day_count`.
fn planted_shocks(spec: &CorpusSpec, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let days = spec.day_count;
    let mut z1: Vec<f64> = (0..days).map(|_| rng.sample(StandardNormal)).collect();
    let mut z2: Vec<f64> = (0..days).map(|_| rng.sample(StandardNormal)).collect();
    let regime: Vec<usize> = (0..days).map(|d| spec.response.regime_of(d)).collect();
    if spec.response.planting == Planting::Exact {
        for r in 0..spec.response.regimes.len() {
            let idx: Vec<usize> = (1..days).filter(|&d| regime[d] == r).collect();
            if idx.len() >= 3 {
                orthonormalise(&idx, &mut z1, &mut z2);
            }
        }
    }
    (0..days)
        .map(|d| {
            let rho = spec.response.regimes[regime[d]].rho;
            (z1[d], rho * z1[d] + (1.0 - rho * rho).sqrt() * z2[d])
        })
        .collect()
}

/// Centre both series on `idx`, make `b` orthogonal to `a`, and scale both
/// to unit sample variance.
fn orthonormalise(idx: &[usize], a: &mut [f64], b: &mut [f64]) {
    let m = idx.len() as f64;
    for v in [&mut *a, &mut *b] {
        let mean = idx.iter().map(|&i| v[i]).sum::<f64>() / m;
        idx.iter().for_each(|&i| v[i] -= mean);
    }
    let aa: f64 = idx.iter().map(|&i| a[i] * a[i]).sum();
    let ab: f64 = idx.iter().map(|&i| a[i] * b[i]).sum();
    idx.iter().for_each(|&i| b[i] -= ab / aa * a[i]);
    for v in [&mut *a, &mut *b] {
        let ss: f64 = idx.iter().map(|&i| v[i] * v[i]).sum();
        let scale = (ss / m).sqrt();
        idx.iter().for_each(|&i| v[i] /= scale);
    }
}

fn uniform_in(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.random_range(range.0..range.1)
    } else {
        range.0
    }
}

/// Grid covering exactly `bins` coarse (0.01) bins centred near `p0`, with
/// every coarse bin receiving the same number of grid points.
fn uniform_grid(p0: f64, bins: usize, tick: TickSize) -> Result<PriceGrid, IngestError> {
    let coarse = TickSize::COARSE.millis();
    let bins = bins.max(1) as i64;
    let first = Price::from_f64(p0 - 0.5 * (bins - 1) as f64 * TickSize::COARSE.to_f64())
        .round_to(TickSize::COARSE)
        .millis();
    let t = tick.millis();
    if coarse % t == 0 && (coarse / 2) % t == 0 {
        // Coarse bin q collects [q - 0.005, q + 0.005) under half-up rounding.
        let lo = first - coarse / 2;
        let hi = first + (bins - 1) * coarse + coarse / 2 - t;
        PriceGrid::new(Price::from_millis(lo), Price::from_millis(hi), tick)
    } else {
        let lo = Price::from_millis(first).round_to(tick);
        let hi = Price::from_millis(lo.millis() + (bins - 1) * coarse.max(t)).round_to(tick);
        PriceGrid::new(lo, hi, tick)
    }
}

fn day_family(
    class: usize,
    p0: f64,
    shapes: &ShapeRanges,
    tick: TickSize,
    rng: &mut ChaCha8Rng,
) -> Result<(SynthFamily, PriceGrid), IngestError> {
    Ok(match class {
        0 => {
            let omega = uniform_in(rng, shapes.bessel_omega);
            (
                SynthFamily::Bessel(BesselParams { c: 1.0, omega, p0 }),
                PriceGrid::around(p0, shapes.bessel_half_width, tick)?,
            )
        }
        1 => {
            let half = 0.5 * shapes.two_bessel_separation;
            let a = BesselParams {
                c: 1.0,
                omega: uniform_in(rng, shapes.two_bessel_omega),
                p0: p0 - half,
            };
            let b = BesselParams {
                c: 1.0,
                omega: uniform_in(rng, shapes.two_bessel_omega),
                p0: p0 + half,
            };
            (
                SynthFamily::TwoBessel(TwoBesselParams::new(a, b)),
                PriceGrid::around(p0, half + shapes.two_bessel_margin, tick)?,
            )
        }
        2 => {
            let sqrt_a = uniform_in(rng, shapes.kummer_sqrt_a);
            (
                SynthFamily::Kummer(KummerParams {
                    c: 1.0,
                    sqrt_a,
                    p0,
                    order: 1,
                }),
                PriceGrid::around(p0, shapes.kummer_half_width, tick)?,
            )
        }
        _ => (SynthFamily::Uniform, uniform_grid(p0, shapes.uniform_bins, tick)?),
    })
}

/// Multi-day corpus with planted classes, equilibrium prices, volumes and
/// return/volume correlation.
pub fn synth_corpus(spec: &CorpusSpec) -> Result<SynthCorpus, IngestError> {
    let w = spec.mixture.as_array();
    if w.iter().any(|x| !(*x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(IngestError::Domain(format!(
            "mixture proportions {w:?} must be non-negative and sum to 1"
        )));
    }
    if spec.day_count < 2 {
        return Err(IngestError::Domain("a corpus needs at least 2 days".into()));
    }
    if spec.response.regimes.is_empty() {
        return Err(IngestError::Domain("at least one response regime is required".into()));
    }
    if let Some(r) = spec.response.regimes.iter().find(|r| !(r.rho.abs() <= 1.0)) {
        return Err(IngestError::Domain(format!("|rho| must not exceed 1, got {}", r.rho)));
    }
    if !(spec.jump.start_price > 0.0) || !(spec.jump.return_sd >= 0.0) || !(spec.response.volume_sd >= 0.0) {
        return Err(IngestError::Domain("start price must be positive and standard deviations non-negative".into()));
    }
    let tick = TickSize::from_f64(spec.tick)?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let quotas = spec.mixture.quotas(spec.day_count);
    let mut classes: Vec<usize> = quotas
        .iter()
        .enumerate()
        .flat_map(|(c, &q)| std::iter::repeat_n(c, q))
        .collect();
    classes.shuffle(&mut rng);
    let shocks = planted_shocks(spec, &mut rng);

    // The volume drift offsets the -σ²/2 log drift of the multiplicative walk.
    let vol_drift = 0.5 * spec.response.volume_sd.powi(2);
    let floor_volume = spec.n_ticks.max(1) as u64;
    let mut p0 = spec.jump.start_price;
    let mut volume = spec.response.start_volume.max(floor_volume);
    let dates = business_days(spec.first_day, spec.day_count);
    let mut days = Vec::with_capacity(spec.day_count);
    let mut truth = Vec::with_capacity(spec.day_count);

    for (i, &day) in dates.iter().enumerate() {
        let (mut mean_return, mut volume_change) = (None, None);
        if i > 0 {
            let (x, y) = shocks[i];
            let r = spec.jump.return_sd * x;
            let dv = (vol_drift + spec.response.volume_sd * y).max(-0.9);
            let next_p0 = p0 * (1.0 + r);
            let next_volume = ((volume as f64) * (1.0 + dv)).round().max(floor_volume as f64) as u64;
            mean_return = Some((next_p0 - p0) / p0);
            volume_change = Some((next_volume as f64 - volume as f64) / volume as f64);
            p0 = next_p0;
            volume = next_volume;
        }
        let mut day_rng = ChaCha8Rng::seed_from_u64(day_seed(spec.seed, i));
        let (family, grid) = day_family(classes[i], p0, &spec.shapes, tick, &mut day_rng)?;
        let day_spec = SynthDaySpec {
            day,
            family,
            n_ticks: spec.n_ticks,
            grid,
            seed: day_rng.random(),
            total_volume: Some(volume),
            session_start: spec.session_start,
            session_seconds: spec.session_seconds,
        };
        let ticks = synth_day(&day_spec)?;
        let weight_sum: f64 = grid.points().iter().map(|p| family.weight(p.to_f64())).sum();
        truth.push(GroundTruth {
            day,
            family,
            p0,
            total_volume: volume,
            mean_return,
            volume_change,
            normalisation: 1.0 / weight_sum,
            grid: (grid.min.to_f64(), grid.max.to_f64()),
        });
        days.push(DayTicks { day, ticks });
    }
    Ok(SynthCorpus { days, truth })
}

/// Ground-truth CSV: `date,family,p0,params_json,total_volume`.
pub fn write_labels<W: Write>(writer: W, truth: &[GroundTruth]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "family", "p0", "params_json", "total_volume"])?;
    for t in truth {
        w.write_record([
            t.day.format("%Y-%m-%d").to_string(),
            t.family_tag().to_string(),
            format!("{:.6}", t.p0),
            t.params_json().to_string(),
            t.total_volume.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

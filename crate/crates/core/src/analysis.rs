//! Day-over-day equilibrium returns, volume changes, and their correlation
//! per market regime.

use std::fmt;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::EquilibriumPoint;
use crate::specfun::{student_t_critical, SpecFunError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{0}")]
    Domain(String),
    #[error("correlation undefined: {0} sequence is constant")]
    UndefinedCorrelation(&'static str),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 observations, got {0}")]
    TooFew(usize),
    #[error("invalid regime: {0}")]
    Regime(String),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// `r̄ = (p₀' - p₀) / p₀`.
pub fn mean_return(p0_prev: f64, p0_curr: f64) -> Result<f64, AnalysisError> {
    if !(p0_prev > 0.0) || !p0_curr.is_finite() {
        return Err(AnalysisError::Domain(format!(
            "mean return needs a positive previous price, got {p0_prev} -> {p0_curr}"
        )));
    }
    Ok((p0_curr - p0_prev) / p0_prev)
}

/// `ΔV = (V' - V) / V`.
pub fn volume_change(v_prev: f64, v_curr: f64) -> Result<f64, AnalysisError> {
    if !(v_prev > 0.0) || !(v_curr >= 0.0) || !v_curr.is_finite() {
        return Err(AnalysisError::Domain(format!(
            "volume change needs a positive previous volume, got {v_prev} -> {v_curr}"
        )));
    }
    Ok((v_curr - v_prev) / v_prev)
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(AnalysisError::TooFew(n));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(AnalysisError::UndefinedCorrelation("first"));
    }
    if syy == 0.0 {
        return Err(AnalysisError::UndefinedCorrelation("second"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrTest {
    pub r: f64,
    pub n: usize,
    pub t: f64,
    pub t_crit: f64,
    pub significant: bool,
}

/// Two-sided test of `H₀: ρ = 0` with `t = |r| √(n-2) / √(1-r²)` on `n - 2`
/// degrees of freedom.
pub fn corr_t_test(r: f64, n: usize, alpha: f64) -> Result<CorrTest, AnalysisError> {
    if n < 3 {
        return Err(AnalysisError::TooFew(n));
    }
    if !(r.abs() <= 1.0) {
        return Err(AnalysisError::Domain(format!("correlation {r} outside [-1, 1]")));
    }
    let df = n - 2;
    let t_crit = student_t_critical(alpha, df as u32)?;
    let t = if r.abs() == 1.0 {
        f64::INFINITY
    } else {
        r.abs() * (df as f64).sqrt() / (1.0 - r * r).sqrt()
    };
    Ok(CorrTest {
        r,
        n,
        t,
        t_crit,
        significant: t > t_crit,
    })
}

/// Consecutive usable days `(T-1, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayPairObservation {
    pub prev: NaiveDate,
    pub day: NaiveDate,
    pub mean_return: f64,
    pub volume_change: f64,
    /// A skipped day lies between `prev` and `day`.
    pub spans_gap: bool,
}

/// Pairs of consecutive entries of an equilibrium series.
pub fn day_pairs(series: &[EquilibriumPoint]) -> Result<Vec<DayPairObservation>, AnalysisError> {
    series
        .windows(2)
        .map(|w| {
            Ok(DayPairObservation {
                prev: w[0].day,
                day: w[1].day,
                mean_return: mean_return(w[0].p0, w[1].p0)?,
                volume_change: volume_change(w[0].total_volume as f64, w[1].total_volume as f64)?,
                spans_gap: w[1].after_gap,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl RegimeSpec {
    pub fn new(label: impl Into<String>, start: NaiveDate, end: NaiveDate) -> Self {
        RegimeSpec {
            label: label.into(),
            start,
            end,
        }
    }

    /// Closed on both ends.
    pub fn contains(&self, day: NaiveDate) -> bool {
        self.start <= day && day <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// Fewer than 4 usable days.
    Insufficient,
    /// One of the two series is constant.
    Undefined,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Insufficient => "insufficient",
            RowStatus::Undefined => "undefined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub n_days: usize,
    /// Pairs whose later day falls in the regime; the test uses `n_pairs - 2`
    /// degrees of freedom.
    pub n_pairs: usize,
    pub gap_pairs: usize,
    pub test: Option<CorrTest>,
    pub status: RowStatus,
}

impl RegimeRow {
    pub fn significant(&self) -> bool {
        self.test.is_some_and(|t| t.significant)
    }
}

/// Whole-sample row first, then one row per regime in the given order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCorrelationReport {
    pub rows: Vec<RegimeRow>,
}

impl RegimeCorrelationReport {
    pub fn whole_sample(&self) -> &RegimeRow {
        &self.rows[0]
    }

    pub fn regime(&self, label: &str) -> Option<&RegimeRow> {
        self.rows[1..].iter().find(|r| r.label == label)
    }
}

pub const WHOLE_SAMPLE_LABEL: &str = "All";

/// Minimum usable days for a regime row to carry a test.
pub const MIN_REGIME_DAYS: usize = 4;

fn row_for(
    label: &str,
    start: NaiveDate,
    end: NaiveDate,
    n_days: usize,
    pairs: &[&DayPairObservation],
    alpha: f64,
) -> Result<RegimeRow, AnalysisError> {
    let mut row = RegimeRow {
        label: label.to_string(),
        start,
        end,
        n_days,
        n_pairs: pairs.len(),
        gap_pairs: pairs.iter().filter(|p| p.spans_gap).count(),
        test: None,
        status: RowStatus::Insufficient,
    };
    if n_days < MIN_REGIME_DAYS || pairs.len() < 3 {
        return Ok(row);
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.mean_return).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.volume_change).collect();
    match pearson(&x, &y) {
        Ok(r) => {
            row.test = Some(corr_t_test(r, pairs.len(), alpha)?);
            row.status = RowStatus::Ok;
        }
        Err(AnalysisError::UndefinedCorrelation(_)) => row.status = RowStatus::Undefined,
        Err(e) => return Err(e),
    }
    Ok(row)
}

/// Correlation of mean return against volume change for the whole series and
/// for each regime. A pair belongs to the regime containing its later day.
pub fn regime_report(
    series: &[EquilibriumPoint],
    regimes: &[RegimeSpec],
    alpha: f64,
) -> Result<RegimeCorrelationReport, AnalysisError> {
    for r in regimes {
        if r.start > r.end {
            return Err(AnalysisError::Regime(format!("{} starts after it ends", r.label)));
        }
    }
    let mut sorted: Vec<&RegimeSpec> = regimes.iter().collect();
    sorted.sort_by_key(|r| r.start);
    if let Some(w) = sorted.windows(2).find(|w| w[1].start <= w[0].end) {
        return Err(AnalysisError::Regime(format!("{} overlaps {}", w[0].label, w[1].label)));
    }
    if series.windows(2).any(|w| w[0].day >= w[1].day) {
        return Err(AnalysisError::Domain("series must be strictly increasing in date".into()));
    }

    let pairs = day_pairs(series)?;
    let all: Vec<&DayPairObservation> = pairs.iter().collect();
    let (first, last) = match (series.first(), series.last()) {
        (Some(a), Some(b)) => (a.day, b.day),
        _ => return Err(AnalysisError::TooFew(0)),
    };
    let mut rows = vec![row_for(WHOLE_SAMPLE_LABEL, first, last, series.len(), &all, alpha)?];
    for r in regimes {
        let n_days = series.iter().filter(|p| r.contains(p.day)).count();
        let inside: Vec<&DayPairObservation> = pairs.iter().filter(|p| r.contains(p.day)).collect();
        rows.push(row_for(&r.label, r.start, r.end, n_days, &inside, alpha)?);
    }
    Ok(RegimeCorrelationReport { rows })
}

pub const REGIME_HEADER: [&str; 10] = [
    "label",
    "start",
    "end",
    "n",
    "r",
    "t",
    "t_crit",
    "significant",
    "n_days",
    "status",
];

/// Regime CSV: `label,start,end,n,r,t,t_crit,significant,n_days,status`,
/// where `n` counts pairs.
pub fn write_regime_report<W: Write>(writer: W, report: &RegimeCorrelationReport) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REGIME_HEADER)?;
    for row in &report.rows {
        let (r, t, t_crit) = match row.test {
            Some(c) => (format!("{:.6}", c.r), format!("{:.6}", c.t), format!("{:.6}", c.t_crit)),
            None => Default::default(),
        };
        w.write_record([
            row.label.clone(),
            row.start.format("%Y-%m-%d").to_string(),
            row.end.format("%Y-%m-%d").to_string(),
            row.n_pairs.to_string(),
            r,
            t,
            t_crit,
            row.significant().to_string(),
            row.n_days.to_string(),
            row.status.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

impl fmt::Display for RegimeCorrelationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lw = self.rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0).max(5);
        writeln!(f, "{:<lw$} {:<23} {:>5} {:>5}  result", "label", "term", "days", "pairs")?;
        for row in &self.rows {
            let term = format!("{}..{}", row.start, row.end);
            let result = match row.test {
                Some(c) => format!(
                    "{:.4} (t={:.4} {} t_crit={:.4})",
                    c.r,
                    c.t,
                    if c.significant { ">" } else { "<=" },
                    c.t_crit
                ),
                None => row.status.as_str().to_string(),
            };
            writeln!(f, "{:<lw$} {:<23} {:>5} {:>5}  {}", row.label, term, row.n_days, row.n_pairs, result)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::DayClass;

    #[test]
    fn return_and_volume_examples() {
        assert_eq!(mean_return(10.0, 10.0).unwrap(), 0.0);
        assert!((mean_return(10.0, 10.1).unwrap() - 0.01).abs() < 1e-15);
        assert!((mean_return(10.0, 9.5).unwrap() + 0.05).abs() < 1e-15);
        assert!(mean_return(0.0, 1.0).is_err());
        assert_eq!(volume_change(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(volume_change(100.0, 150.0).unwrap(), 0.5);
        assert_eq!(volume_change(200.0, 50.0).unwrap(), -0.75);
        assert!(volume_change(0.0, 5.0).is_err());
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(pearson(&x, &[2.0; 4]), Err(AnalysisError::UndefinedCorrelation(_))));
        assert!(pearson(&x[..2], &y[..2]).is_err());
    }

    #[test]
    fn t_test_examples() {
        let a = corr_t_test(0.1391, 494, 0.05).unwrap();
        assert!((a.t - 3.115).abs() < 0.005 && a.significant);
        assert!((a.t_crit - 1.9648).abs() < 1e-4);
        let b = corr_t_test(-0.2567, 59, 0.05).unwrap();
        assert!((b.t - 2.006).abs() < 0.005 && b.significant);
        let f = corr_t_test(0.4766, 107, 0.05).unwrap();
        assert!((f.t - 5.556).abs() < 0.005 && (f.t_crit - 1.983).abs() < 0.005);
        assert!(corr_t_test(1.0, 10, 0.05).unwrap().t.is_infinite());
        assert!(corr_t_test(0.3, 2, 0.05).is_err());
    }

    fn point(day: NaiveDate, p0: f64, v: u64) -> EquilibriumPoint {
        EquilibriumPoint {
            day,
            p0,
            total_volume: v,
            class: DayClass::Agreement,
            after_gap: false,
        }
    }

    fn series(n: usize) -> Vec<EquilibriumPoint> {
        let start = NaiveDate::from_ymd_opt(2007, 4, 2).unwrap();
        (0..n)
            .map(|i| {
                let x = i as f64;
                point(
                    start + chrono::Duration::days(i as i64),
                    10.0 + (x * 0.7).sin() * 0.1,
                    1_000 + ((x * 1.3).cos() * 300.0) as u64,
                )
            })
            .collect()
    }

    #[test]
    fn whole_sample_pairs() {
        let s = series(495);
        let rep = regime_report(&s, &[], 0.05).unwrap();
        assert_eq!(rep.whole_sample().n_pairs, 494);
        assert_eq!(rep.whole_sample().n_days, 495);
    }

    #[test]
    fn regime_rows_and_flags() {
        let s = series(30);
        let d = |i: i64| s[0].day + chrono::Duration::days(i);
        let regimes = vec![
            RegimeSpec::new("B", d(0), d(9)),
            RegimeSpec::new("C", d(10), d(29)),
            RegimeSpec::new("X", d(100), d(120)),
        ];
        let rep = regime_report(&s, &regimes, 0.05).unwrap();
        assert_eq!(rep.rows.len(), 4);
        // the first day of C pairs with the last day of B and joins C
        assert_eq!(rep.regime("B").unwrap().n_pairs, 9);
        assert_eq!(rep.regime("C").unwrap().n_pairs, 20);
        assert_eq!(rep.regime("X").unwrap().status, RowStatus::Insufficient);
        let overlapping = vec![RegimeSpec::new("B", d(0), d(10)), RegimeSpec::new("C", d(10), d(29))];
        assert!(regime_report(&s, &overlapping, 0.05).is_err());
    }

    #[test]
    fn csv_layout() {
        let rep = regime_report(&series(20), &[], 0.05).unwrap();
        let mut buf = Vec::new();
        write_regime_report(&mut buf, &rep).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("label,start,end,n,r,t,t_crit,significant,n_days,status\nAll,"));
    }
}

//! Batch commands behind the `pvwave` binary: `classify`, `correlate`,
//! `simulate` and `verify`.
//!
//! Every command reads one [`RunConfig`] (TOML, all fields optional) with
//! command-line overrides applied on top, and writes its outputs in a single
//! pass after the parallel work is done, so reruns are byte-identical.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{corr_t_test, regime_report, write_regime_report, AnalysisError, RegimeSpec};
use crate::fitting::{DfConvention, FitOptions};
use crate::ingest::{
    parse_ticks, synth_corpus, write_labels, write_ticks, BadRowPolicy, CorpusSpec, IngestError, ParseOptions,
    SessionWindow, TickSize,
};
use crate::pipeline::{
    classify_corpus, read_equilibrium_series, write_classifications, write_plot_data,
    write_summary, PipelineConfig, PipelineError,
};
use crate::specfun::{
    bessel_j0_unchecked, f_cdf, f_quantile, laguerre_unchecked, student_t_cdf, student_t_quantile, SpecFunError,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: IngestError },
    #[error("config {path}: {source}")]
    ConfigParse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("{failed} verification check(s) failed")]
    Verify { failed: usize },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Levenberg–Marquardt settings; `alpha` and the df convention live at the top
/// level of [`RunConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmSettings {
    pub max_iterations: usize,
    pub initial_damping: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    pub max_damping: f64,
    pub rss_rel_tol: f64,
    pub gradient_tol: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        let f = FitOptions::default();
        LmSettings {
            max_iterations: f.max_iterations,
            initial_damping: f.initial_damping,
            damping_up: f.damping_up,
            damping_down: f.damping_down,
            max_damping: f.max_damping,
            rss_rel_tol: f.rss_rel_tol,
            gradient_tol: f.gradient_tol,
        }
    }
}

/// Tolerances of the `verify` self-test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    pub t_tolerance: f64,
    pub t_crit_tolerance: f64,
    /// For rows whose published critical value is rounded (A and B).
    pub t_crit_rounded_tolerance: f64,
    pub j0_tolerance: f64,
    pub laguerre_tolerance: f64,
    pub quantile_tolerance: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            t_tolerance: 0.005,
            t_crit_tolerance: 0.005,
            t_crit_rounded_tolerance: 0.01,
            j0_tolerance: 1e-10,
            laguerre_tolerance: 1e-12,
            quantile_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Tick CSV for `classify`; classification CSV for `correlate`.
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub tick_size: TickSize,
    pub fine_tick_size: TickSize,
    pub alpha: f64,
    pub df_convention: DfConvention,
    /// Coarse bins below this make a day degenerate.
    pub min_bins: usize,
    pub min_bins_two_bessel: usize,
    pub session_hours: f64,
    pub session_window: Option<SessionWindow>,
    pub bad_rows: BadRowPolicy,
    /// Write one observed-vs-fitted CSV per day under `out/plots`.
    pub plot_data: bool,
    pub regimes: Vec<RegimeSpec>,
    pub lm: LmSettings,
    pub simulate: CorpusSpec,
    pub verify: VerifySettings,
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

/// Five market terms of April 2007 to April 2009.
pub fn default_regimes() -> Vec<RegimeSpec> {
    vec![
        RegimeSpec::new("B", ymd(2007, 4, 2), ymd(2007, 6, 29)),
        RegimeSpec::new("C", ymd(2007, 7, 2), ymd(2007, 10, 30)),
        RegimeSpec::new("D", ymd(2007, 11, 1), ymd(2008, 4, 30)),
        RegimeSpec::new("E", ymd(2008, 5, 5), ymd(2008, 10, 31)),
        RegimeSpec::new("F", ymd(2008, 11, 3), ymd(2009, 4, 10)),
    ]
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            out: PathBuf::from("out"),
            seed: 7,
            tick_size: TickSize::COARSE,
            fine_tick_size: TickSize::FINE,
            alpha: 0.05,
            df_convention: DfConvention::Paper,
            min_bins: 5,
            min_bins_two_bessel: 8,
            session_hours: 4.0,
            session_window: None,
            bad_rows: BadRowPolicy::Fail,
            plot_data: true,
            regimes: default_regimes(),
            lm: LmSettings::default(),
            simulate: CorpusSpec::default(),
            verify: VerifySettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::ConfigParse {
            path: path.to_path_buf(),
            source: Box::new(e),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    pub fn fit_options(&self) -> FitOptions {
        let lm = &self.lm;
        FitOptions {
            max_iterations: lm.max_iterations,
            initial_damping: lm.initial_damping,
            damping_up: lm.damping_up,
            damping_down: lm.damping_down,
            max_damping: lm.max_damping,
            rss_rel_tol: lm.rss_rel_tol,
            gradient_tol: lm.gradient_tol,
            alpha: self.alpha,
            df_convention: self.df_convention,
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            coarse_tick: self.tick_size,
            fine_tick: self.fine_tick_size,
            fit: self.fit_options(),
            min_bins: self.min_bins,
            min_bins_two_bessel: self.min_bins_two_bessel,
            session_seconds: self.session_hours * 3600.0,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.session_hours > 0.0) {
            return Err(CliError::Config("session_hours must be positive".into()));
        }
        self.pipeline().validate()?;
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "pvwave", version, about = "Price-volume probability wave estimation")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Coarse bin width.
    #[arg(long, global = true, value_name = "X")]
    pub tick_size: Option<f64>,
    #[arg(long, global = true, value_name = "X")]
    pub alpha: Option<f64>,
    /// `paper` or `conventional`.
    #[arg(long, global = true, value_name = "CONVENTION")]
    pub df_convention: Option<DfConvention>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Classify every day of a tick CSV.
    Classify,
    /// Regime correlation report from a classification CSV.
    Correlate,
    /// Write a synthetic tick corpus and its ground truth.
    Simulate,
    /// Reproduce the reference correlation table and special-function checks.
    Verify,
}

impl Cli {
    /// Configuration file (or defaults) with command-line overrides applied.
    pub fn effective_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.input {
            cfg.input = Some(p.clone());
        }
        if let Some(p) = &self.out {
            cfg.out = p.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.tick_size {
            cfg.tick_size = TickSize::from_f64(t)?;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(d) = self.df_convention {
            cfg.df_convention = d;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Run a parsed command line, writing human-readable output to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = cli.effective_config()?;
    let out_err = io_err(Path::new("<stdout>"));
    if cli.print_config {
        return stdout.write_all(cfg.to_toml().as_bytes()).map_err(out_err);
    }
    match cli.command {
        Some(Command::Classify) => cmd_classify(&cfg, stdout),
        Some(Command::Correlate) => cmd_correlate(&cfg, stdout),
        Some(Command::Simulate) => cmd_simulate(&cfg, stdout),
        Some(Command::Verify) => cmd_verify(&cfg, stdout),
        None => Err(CliError::Config(
            "no command given (classify, correlate, simulate, verify)".into(),
        )),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn required_input(cfg: &RunConfig) -> Result<&Path, CliError> {
    cfg.input
        .as_deref()
        .ok_or_else(|| CliError::Config("no input given (--input or `input` in the config)".into()))
}

fn say(stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    writeln!(stdout, "{text}").map_err(io_err(Path::new("<stdout>")))
}

/// Classify a tick CSV; writes `classification.csv`, `summary.csv`,
/// `summary.txt` and, if enabled, `plots/<date>.csv`.
pub fn cmd_classify(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let input = required_input(cfg)?;
    let file = File::open(input).map_err(io_err(input))?;
    let opts = ParseOptions {
        bad_rows: cfg.bad_rows,
        session: cfg.session_window,
    };
    let parsed = parse_ticks(BufReader::new(file), &opts).map_err(|source| CliError::Input {
        path: input.to_path_buf(),
        source,
    })?;
    if parsed.days.is_empty() {
        return Err(CliError::Input {
            path: input.to_path_buf(),
            source: IngestError::EmptyDay,
        });
    }
    let result = classify_corpus(&parsed.days, &cfg.pipeline())?;

    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let path = cfg.out.join("classification.csv");
    write_classifications(create(&path)?, &result.days)?;
    let path = cfg.out.join("summary.csv");
    write_summary(create(&path)?, &result.summary)?;
    let path = cfg.out.join("summary.txt");
    let mut txt = create(&path)?;
    writeln!(txt, "{}", result.summary).map_err(io_err(&path))?;
    txt.flush().map_err(io_err(&path))?;
    if cfg.plot_data {
        let dir = cfg.out.join("plots");
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for (ticks, c) in parsed.days.iter().zip(sorted_by_day(&parsed.days, &result.days)) {
            let path = dir.join(format!("{}.csv", ticks.day.format("%Y-%m-%d")));
            write_plot_data(create(&path)?, ticks, c)?;
        }
    }
    say(stdout, &result.summary.to_string())?;
    if !parsed.rejected.is_empty() {
        say(stdout, &format!("skipped {} malformed row(s)", parsed.rejected.len()))?;
    }
    say(stdout, &format!("wrote {}", cfg.out.display()))
}

/// Classifications in the order of `days`.
fn sorted_by_day<'a>(
    days: &[crate::ingest::DayTicks],
    classified: &'a [crate::pipeline::DayClassification],
) -> Vec<&'a crate::pipeline::DayClassification> {
    days.iter()
        .map(|d| {
            classified
                .iter()
                .find(|c| c.day == d.day)
                .expect("every day is classified")
        })
        .collect()
}

/// Regime correlation report from a classification CSV; writes `regimes.csv`.
pub fn cmd_correlate(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let default_input = cfg.out.join("classification.csv");
    let input = cfg.input.as_deref().unwrap_or(&default_input);
    let file = File::open(input).map_err(io_err(input))?;
    let series = read_equilibrium_series(BufReader::new(file))?;
    let report = regime_report(&series, &cfg.regimes, cfg.alpha)?;
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let path = cfg.out.join("regimes.csv");
    write_regime_report(create(&path)?, &report)?;
    say(stdout, &report.to_string())?;
    say(stdout, &format!("wrote {}", path.display()))
}

/// Synthetic corpus from `[simulate]`, seeded by the top-level seed; writes
/// `ticks.csv` and `labels.csv`.
pub fn cmd_simulate(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = CorpusSpec {
        seed: cfg.seed,
        ..cfg.simulate.clone()
    };
    let corpus = synth_corpus(&spec)?;
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let path = cfg.out.join("ticks.csv");
    write_ticks(create(&path)?, corpus.ticks())?;
    let path = cfg.out.join("labels.csv");
    write_labels(create(&path)?, &corpus.truth)?;
    say(
        stdout,
        &format!(
            "simulated {} days, {} ticks, into {}",
            corpus.days.len(),
            corpus.days.iter().map(|d| d.ticks.len()).sum::<usize>(),
            cfg.out.display()
        ),
    )
}

/// One published correlation row: label, `r`, pair count, printed `t` and
/// `t_crit`, and whether the printed `t_crit` is coarsely rounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub label: &'static str,
    pub r: f64,
    pub n: usize,
    pub t: f64,
    pub t_crit: f64,
    pub t_crit_rounded: bool,
}

pub const REFERENCE_ROWS: [ReferenceRow; 6] = [
    ReferenceRow { label: "A", r: 0.1391, n: 494, t: 3.115, t_crit: 1.960, t_crit_rounded: true },
    ReferenceRow { label: "B", r: -0.2567, n: 59, t: 2.006, t_crit: 2.001, t_crit_rounded: true },
    ReferenceRow { label: "C", r: 0.0729, n: 83, t: 0.6583, t_crit: 1.990, t_crit_rounded: false },
    ReferenceRow { label: "D", r: 0.1026, n: 122, t: 1.130, t_crit: 1.980, t_crit_rounded: false },
    ReferenceRow { label: "E", r: 0.1963, n: 123, t: 2.202, t_crit: 1.980, t_crit_rounded: false },
    ReferenceRow { label: "F", r: 0.4766, n: 107, t: 5.556, t_crit: 1.983, t_crit_rounded: false },
];

/// J₀ by the trapezoidal rule on `(1/π) ∫₀^π cos(x sin θ) dθ`; the periodic
/// integrand makes the rule converge geometrically.
pub fn j0_quadrature(x: f64) -> f64 {
    let m = 256;
    let h = std::f64::consts::PI / m as f64;
    let mut sum = 0.5 * (1.0 + (x * (std::f64::consts::PI).sin()).cos());
    for i in 1..m {
        sum += (x * (i as f64 * h).sin()).cos();
    }
    sum * h / std::f64::consts::PI
}

/// `L_n(x) = Σ_k (-1)^k C(n, k) x^k / k!`.
pub fn laguerre_expansion(n: u32, x: f64) -> f64 {
    let mut coef = 1.0; // C(n, k) / k!
    let mut sum = 0.0;
    let mut pow = 1.0;
    for k in 0..=n {
        if k > 0 {
            coef *= (n - k + 1) as f64 / (k as f64 * k as f64);
            pow *= -x;
        }
        sum += coef * pow;
    }
    sum
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Every self-test check with its outcome.
pub fn verification_checks(v: &VerifySettings) -> Result<Vec<CheckOutcome>, CliError> {
    let mut out = Vec::new();
    for row in REFERENCE_ROWS {
        let test = corr_t_test(row.r, row.n, 0.05)?;
        let crit_tol = if row.t_crit_rounded {
            v.t_crit_rounded_tolerance
        } else {
            v.t_crit_tolerance
        };
        let (dt, dc) = ((test.t - row.t).abs(), (test.t_crit - row.t_crit).abs());
        out.push(CheckOutcome {
            name: format!("correlation row {}", row.label),
            passed: dt <= v.t_tolerance && dc <= crit_tol,
            detail: format!(
                "r={} n={}: t={:.4} (published {}, |Δ|={:.2e} ≤ {:e}), t_crit={:.4} (published {}, |Δ|={:.2e} ≤ {:e})",
                row.r, row.n, test.t, row.t, dt, v.t_tolerance, test.t_crit, row.t_crit, dc, crit_tol
            ),
        });
    }

    let worst_j0 = (0..1000)
        .map(|i| {
            let x = 30.0 * i as f64 / 999.0;
            (bessel_j0_unchecked(x) - j0_quadrature(x)).abs()
        })
        .fold(0.0, f64::max);
    out.push(CheckOutcome {
        name: "J0 against quadrature on [0, 30]".into(),
        passed: worst_j0 <= v.j0_tolerance,
        detail: format!("max |Δ| = {worst_j0:.2e} over 1000 points (≤ {:e})", v.j0_tolerance),
    });

    let mut worst_lag: f64 = 0.0;
    for n in 0..=10 {
        for i in 0..=100 {
            let x = 4.0 * i as f64 / 100.0;
            let exact = laguerre_expansion(n, x);
            worst_lag = worst_lag.max((laguerre_unchecked(n, x) - exact).abs() / exact.abs().max(1.0));
        }
    }
    out.push(CheckOutcome {
        name: "Laguerre against explicit expansion, n <= 10".into(),
        passed: worst_lag <= v.laguerre_tolerance,
        detail: format!("max relative |Δ| = {worst_lag:.2e} on x in [0, 4] (≤ {:e})", v.laguerre_tolerance),
    });

    let mut worst_q: f64 = 0.0;
    for &df in &[1u32, 2, 5, 30, 57, 120, 492] {
        for &p in &[0.01, 0.1, 0.5, 0.9, 0.975, 0.999] {
            let t = student_t_quantile(p, df)?;
            worst_q = worst_q.max((student_t_cdf(t, df)? - p).abs());
            for &d1 in &[1u32, 2, 6] {
                let f = f_quantile(p, d1, df)?;
                worst_q = worst_q.max((f_cdf(f, d1, df)? - p).abs());
            }
        }
    }
    out.push(CheckOutcome {
        name: "t and F quantile round trips".into(),
        passed: worst_q <= v.quantile_tolerance,
        detail: format!("max |cdf(quantile(p)) - p| = {worst_q:.2e} (≤ {:e})", v.quantile_tolerance),
    });
    Ok(out)
}

/// Print one PASS/FAIL line per check; fails if any check fails.
pub fn cmd_verify(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let checks = verification_checks(&cfg.verify)?;
    for c in &checks {
        say(
            stdout,
            &format!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail),
        )?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Verify { failed });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml();
        let back = RunConfig::from_toml(&text, Path::new("x.toml")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = RunConfig::from_toml("alpha = 0.01\ndf_convention = \"conventional\"\n", Path::new("x")).unwrap();
        assert_eq!(cfg.alpha, 0.01);
        assert_eq!(cfg.df_convention, DfConvention::Conventional);
        assert_eq!(cfg.min_bins, 5);
        assert!(RunConfig::from_toml("bogus = 1", Path::new("x")).is_err());
    }

    #[test]
    fn overrides_apply() {
        let cli = Cli::parse_from(["pvwave", "--alpha", "0.1", "--tick-size", "0.02", "--seed", "3", "verify"]);
        let cfg = cli.effective_config().unwrap();
        assert_eq!(cfg.alpha, 0.1);
        assert_eq!(cfg.tick_size.millis(), 20);
        assert_eq!(cfg.seed, 3);
        assert_eq!(cli.command, Some(Command::Verify));
    }

    #[test]
    fn default_verify_passes() {
        let checks = verification_checks(&VerifySettings::default()).unwrap();
        for c in &checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert_eq!(checks.len(), 9);
    }

    #[test]
    fn zero_tolerance_fails() {
        let zero = VerifySettings {
            t_tolerance: 0.0,
            t_crit_tolerance: 0.0,
            t_crit_rounded_tolerance: 0.0,
            j0_tolerance: 0.0,
            laguerre_tolerance: 0.0,
            quantile_tolerance: 0.0,
        };
        let cfg = RunConfig {
            verify: zero,
            ..Default::default()
        };
        let mut sink = Vec::new();
        assert!(matches!(cmd_verify(&cfg, &mut sink), Err(CliError::Verify { .. })));
        assert!(String::from_utf8(sink).unwrap().contains("FAIL"));
    }

    #[test]
    fn quadrature_oracle_matches_known_values() {
        assert!((j0_quadrature(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((laguerre_expansion(2, 1.0) - (-0.5)).abs() < 1e-15);
    }
}

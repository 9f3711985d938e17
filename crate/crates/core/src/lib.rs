//! Price-volume probability wave estimation.
//!
//! Fits per-trading-day volume-probability distributions over price with
//! zero-order Bessel and first-order Laguerre (Kummer) eigenfunction models,
//! classifies every day through a significance cascade, and measures the
//! correlation between equilibrium-price returns and total-volume changes
//! across market regimes.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: J₀, Laguerre polynomials, incomplete beta, t and F quantiles
//! - [`ingest`]: tick CSV parsing, price binning and seeded synthetic corpora
//! - [`models`]: model families, numeric Jacobian, force diagnostics
//! - [`fitting`]: Levenberg–Marquardt and goodness-of-fit testing
//! - [`pipeline`]: the per-day classification cascade
//! - [`analysis`]: returns, volume changes, correlation and regime reports
//! - [`cli`]: batch commands used by the `pvwave` binary
//!
//! ```
//! use pvwave::models::{BesselParams, ModelParams};
//!
//! let model = ModelParams::Bessel(BesselParams::new(0.2, 50.0, 10.0).unwrap());
//! assert!((model.eval(10.0) - 0.2).abs() < 1e-15);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod fitting;
pub mod ingest;
pub mod models;
pub mod pipeline;
pub mod specfun;

pub use analysis::{corr_t_test, pearson, regime_report, RegimeCorrelationReport, RegimeSpec};
pub use fitting::{goodness, lm_fit, FitOptions, FitResult};
pub use ingest::{bin_day, parse_ticks, DailyVolumeDistribution, Price, TickRecord, TickSize};
pub use models::{BesselParams, Family, KummerParams, ModelParams, TwoBesselParams};
pub use pipeline::{classify_corpus, classify_day, DayClass, DayClassification, PipelineConfig};

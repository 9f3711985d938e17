//! Levenberg–Marquardt least squares over a day's bin probabilities, with the
//! coefficient-of-determination / F-test significance decision.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::DailyVolumeDistribution;
use crate::models::{numeric_jacobian, BesselParams, Family, KummerParams, ModelParams, TwoBesselParams};
use crate::specfun::{f_critical, SpecFunError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("{family} fit needs at least {needed} bins, got {got}")]
    TooFewBins {
        family: Family,
        needed: usize,
        got: usize,
    },
    #[error("goodness of fit needs n > k + 1 (n = {n}, k = {k})")]
    TooFewForTest { n: usize, k: usize },
    #[error("observed and predicted lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid fit options: {0}")]
    Options(String),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// Sample points `(price, value)` sorted by price.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    prices: Vec<f64>,
    values: Vec<f64>,
}

impl Observations {
    pub fn new(points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut pts: Vec<(f64, f64)> = points.into_iter().collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let (prices, values) = pts.into_iter().unzip();
        Observations { prices, values }
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Observations {
        Observations {
            prices: self.prices.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

impl From<&DailyVolumeDistribution> for Observations {
    fn from(dist: &DailyVolumeDistribution) -> Self {
        Observations::new(dist.bins.iter().map(|b| (b.price.to_f64(), b.probability)))
    }
}

/// How many explanatory variables `k` enter the F test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DfConvention {
    /// k = 1 for the three-parameter models, k = 2 for the superposition.
    #[default]
    Paper,
    /// k = parameter count - 1.
    Conventional,
}

impl DfConvention {
    pub fn k(self, family: Family) -> usize {
        match (self, family) {
            (DfConvention::Paper, Family::TwoBessel) => 2,
            (DfConvention::Paper, _) => 1,
            (DfConvention::Conventional, f) => f.param_count() - 1,
        }
    }
}

impl std::str::FromStr for DfConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(DfConvention::Paper),
            "conventional" => Ok(DfConvention::Conventional),
            other => Err(format!("unknown df convention `{other}` (paper | conventional)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub initial_damping: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    /// Give up once damping exceeds this.
    pub max_damping: f64,
    /// Converged when an accepted step lowers RSS by less than this fraction.
    pub rss_rel_tol: f64,
    /// Converged when `max |Jᵀr|` falls below this.
    pub gradient_tol: f64,
    pub alpha: f64,
    pub df_convention: DfConvention,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            initial_damping: 1e-3,
            damping_up: 10.0,
            damping_down: 0.1,
            max_damping: 1e12,
            rss_rel_tol: 1e-12,
            gradient_tol: 1e-10,
            alpha: 0.05,
            df_convention: DfConvention::Paper,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<(), FitError> {
        let positive = [
            ("initial_damping", self.initial_damping),
            ("damping_up", self.damping_up),
            ("damping_down", self.damping_down),
            ("max_damping", self.max_damping),
            ("rss_rel_tol", self.rss_rel_tol),
            ("gradient_tol", self.gradient_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FitError::Options(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(FitError::Options("max_iterations must be positive".into()));
        }
        if !(self.damping_up > 1.0 && self.damping_down < 1.0) {
            return Err(FitError::Options("damping_up must exceed 1 and damping_down be below 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(FitError::Options(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Coefficient of determination and F-test outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Goodness {
    pub n: usize,
    pub k: usize,
    pub rss: f64,
    /// `TSS - RSS`.
    pub ess: f64,
    pub tss: f64,
    pub r2: f64,
    pub f: f64,
    pub f_crit: f64,
    pub r2_crit: f64,
    /// `R² > R²_crit`.
    pub significant: bool,
    /// `F > F_crit`; always equal to `significant` away from round-off ties.
    pub f_significant: bool,
}

/// `R²_crit = k F_crit / (k F_crit + n - k - 1)`.
pub fn r2_critical(f_crit: f64, n: usize, k: usize) -> f64 {
    let kf = k as f64 * f_crit;
    kf / (kf + (n - k - 1) as f64)
}

/// `F = (R² / k) / ((1 - R²) / (n - k - 1))`.
pub fn f_from_r2(r2: f64, n: usize, k: usize) -> f64 {
    if r2 >= 1.0 {
        return f64::INFINITY;
    }
    (r2 / k as f64) / ((1.0 - r2) / (n - k - 1) as f64)
}

/// Goodness of fit of `predicted` against `observed` with `k` explanatory
/// variables.
pub fn goodness(observed: &[f64], predicted: &[f64], k: usize, alpha: f64) -> Result<Goodness, FitError> {
    if observed.len() != predicted.len() {
        return Err(FitError::LengthMismatch(observed.len(), predicted.len()));
    }
    let n = observed.len();
    if k == 0 || n <= k + 1 {
        return Err(FitError::TooFewForTest { n, k });
    }
    let f_crit = f_critical(alpha, k as u32, (n - k - 1) as u32)?;
    let r2_crit = r2_critical(f_crit, n, k);
    let mean = observed.iter().sum::<f64>() / n as f64;
    let tss: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();
    let rss: f64 = observed
        .iter()
        .zip(predicted)
        .map(|(y, yhat)| (y - yhat).powi(2))
        .sum();
    let scale: f64 = observed.iter().map(|y| y * y).sum();
    if tss <= 1e-20 * scale {
        return Ok(Goodness {
            n,
            k,
            rss,
            ess: 0.0,
            tss,
            r2: 0.0,
            f: 0.0,
            f_crit,
            r2_crit,
            significant: false,
            f_significant: false,
        });
    }
    let ess = tss - rss;
    let r2 = 1.0 - rss / tss;
    let dof = (n - k - 1) as f64;
    let f = if rss == 0.0 {
        f64::INFINITY
    } else {
        (ess / k as f64) / (rss / dof)
    };
    Ok(Goodness {
        n,
        k,
        rss,
        ess,
        tss,
        r2,
        f,
        f_crit,
        r2_crit,
        significant: r2 > r2_crit,
        f_significant: f > f_crit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    RssConverged,
    GradientConverged,
    /// No step lowers RSS even at maximal damping: a local minimum.
    DampingExhausted,
    MaxIterations,
    /// Normal equations stayed singular through maximal damping.
    Singular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub params: ModelParams,
    pub n_bins: usize,
    pub goodness: Goodness,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// RSS after every accepted step, starting with the initial guess.
    pub rss_trace: Vec<f64>,
}

impl FitResult {
    pub fn r2(&self) -> f64 {
        self.goodness.r2
    }

    pub fn significant(&self) -> bool {
        self.goodness.significant
    }

    pub fn failed(&self) -> bool {
        self.termination == Termination::Singular
    }

    pub fn predict(&self, prices: &[f64]) -> Vec<f64> {
        prices.iter().map(|&p| self.params.eval(p)).collect()
    }
}

const POSITIVE_FLOOR: f64 = 1e-12;

/// Project onto the admissible region: every fitted parameter of these
/// families must stay positive.
fn clamp_params(theta: &mut [f64]) {
    for v in theta.iter_mut() {
        if !(*v > POSITIVE_FLOOR) {
            *v = POSITIVE_FLOOR;
        }
    }
}

fn rss_of(model: &ModelParams, obs: &Observations) -> f64 {
    obs.prices
        .iter()
        .zip(&obs.values)
        .map(|(&p, &y)| (y - model.eval(p)).powi(2))
        .sum()
}

/// Levenberg–Marquardt fit of `init`'s family to `obs`.
///
/// Fails only on precondition violations; numerical trouble is reported
/// through [`FitResult::termination`].
pub fn lm_fit(init: &ModelParams, obs: &Observations, opts: &FitOptions) -> Result<FitResult, FitError> {
    opts.validate()?;
    let family = init.family();
    let m = family.param_count();
    let n = obs.len();
    if n < m + 2 {
        return Err(FitError::TooFewBins {
            family,
            needed: m + 2,
            got: n,
        });
    }
    let k = opts.df_convention.k(family);

    let mut theta = init.to_vec();
    clamp_params(&mut theta);
    let mut model = init.with_vec(&theta).expect("arity");
    let mut rss = rss_of(&model, obs);
    let mut trace = vec![rss];
    let mut lambda = opts.initial_damping;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        if rss == 0.0 {
            termination = Termination::RssConverged;
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(n, m);
        let mut resid = DVector::<f64>::zeros(n);
        for (i, (&p, &y)) in obs.prices.iter().zip(&obs.values).enumerate() {
            resid[i] = y - model.eval(p);
            for (j, d) in numeric_jacobian(&model, p).into_iter().enumerate() {
                jac[(i, j)] = d;
            }
        }
        let grad = jac.transpose() * &resid;
        if grad.amax() < opts.gradient_tol {
            termination = Termination::GradientConverged;
            break;
        }
        let normal = jac.transpose() * &jac;
        let max_diag = normal.diagonal().amax();
        let mut solved_once = false;
        loop {
            let mut damped = normal.clone();
            for j in 0..m {
                let d = normal[(j, j)].max(1e-12 * max_diag).max(f64::MIN_POSITIVE);
                damped[(j, j)] += lambda * d;
            }
            if let Some(chol) = damped.cholesky() {
                solved_once = true;
                let step = chol.solve(&grad);
                let mut candidate: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
                clamp_params(&mut candidate);
                let cand_model = init.with_vec(&candidate).expect("arity");
                let cand_rss = rss_of(&cand_model, obs);
                if cand_rss.is_finite() && cand_rss < rss {
                    let rel = (rss - cand_rss) / rss;
                    theta = candidate;
                    model = cand_model;
                    rss = cand_rss;
                    trace.push(rss);
                    lambda = (lambda * opts.damping_down).max(1e-15);
                    if rel < opts.rss_rel_tol {
                        termination = Termination::RssConverged;
                        break 'outer;
                    }
                    break;
                }
            }
            lambda *= opts.damping_up;
            if lambda > opts.max_damping {
                termination = if solved_once {
                    Termination::DampingExhausted
                } else {
                    Termination::Singular
                };
                break 'outer;
            }
        }
    }

    let model = model.canonical();
    let predicted: Vec<f64> = obs.prices.iter().map(|&p| model.eval(p)).collect();
    let goodness = goodness(&obs.values, &predicted, k, opts.alpha)?;
    let converged = matches!(
        termination,
        Termination::RssConverged | Termination::GradientConverged | Termination::DampingExhausted
    );
    Ok(FitResult {
        family,
        params: model,
        n_bins: n,
        goodness,
        iterations,
        converged,
        termination,
        rss_trace: trace,
    })
}

pub const OMEGA_CLAMP: (f64, f64) = (1.0, 1e4);
pub const SQRT_A_CLAMP: (f64, f64) = (1.0, 1e4);
/// First positive zero of J₀, rounded as used for the width heuristic.
const J0_FIRST_ZERO: f64 = 2.4048;
/// Fraction of the peak that marks the edge of the central lobe.
const LOBE_EDGE: f64 = 0.05;

/// Modal price and probability of a dense profile. Ties resolve to the mean
/// of the tied prices (equal weights, so also the volume-weighted mean).
fn profile_mode(profile: &[(f64, f64)]) -> (f64, f64) {
    let peak = profile.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<f64> = profile.iter().filter(|x| x.1 == peak).map(|x| x.0).collect();
    (tied.iter().sum::<f64>() / tied.len() as f64, peak)
}

fn bessel_seed(profile: &[(f64, f64)]) -> BesselParams {
    let (p0, c) = profile_mode(profile);
    let half_width = profile
        .iter()
        .filter(|x| x.1 < LOBE_EDGE * c)
        .map(|x| (x.0 - p0).abs())
        .fold(f64::INFINITY, f64::min);
    let omega = if half_width.is_finite() && half_width > 0.0 {
        (J0_FIRST_ZERO / half_width).clamp(OMEGA_CLAMP.0, OMEGA_CLAMP.1)
    } else {
        OMEGA_CLAMP.0
    };
    BesselParams { c, omega, p0 }
}

/// Single-Bessel starting point: `p₀` at the mode, `C` the modal probability,
/// `ω` from the distance to the first bin below 5 % of the peak.
pub fn init_bessel(dist: &DailyVolumeDistribution) -> BesselParams {
    bessel_seed(&dist.dense_profile())
}

/// Local maxima of a profile: rises from the left (or starts the profile) and
/// does not rise to the right. Returned as indices.
pub fn local_maxima(profile: &[(f64, f64)]) -> Vec<usize> {
    let n = profile.len();
    (0..n)
        .filter(|&i| {
            let y = profile[i].1;
            y > 0.0 && (i == 0 || y > profile[i - 1].1) && (i + 1 == n || y >= profile[i + 1].1)
        })
        .collect()
}

/// Minimum separation, in bins, of the two peaks seeding a superposition.
pub const PEAK_SEPARATION: usize = 3;

/// The two highest local maxima at least [`PEAK_SEPARATION`] bins apart, as
/// `(left, right)` indices.
pub fn two_peaks(profile: &[(f64, f64)]) -> Option<(usize, usize)> {
    let mut maxima = local_maxima(profile);
    maxima.sort_by(|&a, &b| profile[b].1.total_cmp(&profile[a].1).then(a.cmp(&b)));
    let &first = maxima.first()?;
    let second = maxima
        .iter()
        .copied()
        .find(|&i| i.abs_diff(first) >= PEAK_SEPARATION)?;
    Some((first.min(second), first.max(second)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBesselSeed {
    pub params: TwoBesselParams,
    /// No two separated peaks: seeded from the residual of a single fit.
    pub used_fallback: bool,
}

pub fn init_two_bessel(dist: &DailyVolumeDistribution) -> TwoBesselParams {
    two_bessel_seed(dist, &FitOptions::default()).params
}

/// Two-Bessel starting point. Each component is seeded by the single-Bessel
/// rule on its own side of the midpoint between the two highest separated
/// peaks. Without such peaks, the second component goes to the largest
/// positive residual of a single-Bessel pre-fit.
pub fn two_bessel_seed(dist: &DailyVolumeDistribution, opts: &FitOptions) -> TwoBesselSeed {
    let profile = dist.dense_profile();
    if let Some((left, right)) = two_peaks(&profile) {
        let mid = (left + right) / 2;
        let a = bessel_seed(&profile[..=mid]);
        let b = bessel_seed(&profile[mid + 1..]);
        return TwoBesselSeed {
            params: TwoBesselParams::new(a, b),
            used_fallback: false,
        };
    }
    let first_guess = bessel_seed(&profile);
    let obs = Observations::from(dist);
    let first = lm_fit(&ModelParams::Bessel(first_guess), &obs, opts)
        .ok()
        .and_then(|r| match r.params {
            ModelParams::Bessel(b) => Some(b),
            _ => None,
        })
        .unwrap_or(first_guess);
    let (p, r) = profile
        .iter()
        .map(|&(p, y)| (p, y - first.eval(p)))
        .fold((first.p0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let second = BesselParams {
        c: r.max(first.c * 1e-3),
        omega: first.omega,
        p0: p,
    };
    TwoBesselSeed {
        params: TwoBesselParams::new(first, second),
        used_fallback: true,
    }
}

/// First-order Kummer starting point: `√A` is the reciprocal of the
/// volume-weighted mean absolute deviation about the mode.
pub fn init_kummer(dist: &DailyVolumeDistribution) -> KummerParams {
    let profile = dist.dense_profile();
    let (p0, c) = profile_mode(&profile);
    let mass: f64 = profile.iter().map(|x| x.1).sum();
    let mad = profile.iter().map(|x| x.1 * (x.0 - p0).abs()).sum::<f64>() / mass;
    let sqrt_a = if mad > 0.0 {
        (1.0 / mad).clamp(SQRT_A_CLAMP.0, SQRT_A_CLAMP.1)
    } else {
        SQRT_A_CLAMP.1
    };
    KummerParams {
        c,
        sqrt_a,
        p0,
        order: 1,
    }
}

/// Grid points per decade-spanning scan of a width parameter.
const SCAN_POINTS: usize = 64;

fn log_grid(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(move |i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
}

/// Least-squares amplitude for a fixed unit-amplitude shape, and its RSS.
fn best_amplitude(obs: &Observations, shape: impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut gy, mut gg, mut yy) = (0.0, 0.0, 0.0);
    for (&p, &y) in obs.prices.iter().zip(&obs.values) {
        let g = shape(p);
        gy += g * y;
        gg += g * g;
        yy += y * y;
    }
    if gg == 0.0 {
        return (0.0, yy);
    }
    let c = (gy / gg).max(POSITIVE_FLOOR);
    (c, yy - 2.0 * c * gy + c * c * gg)
}

/// Price span and smallest spacing of the observed prices.
fn span_and_spacing(obs: &Observations) -> (f64, f64) {
    let p = &obs.prices;
    let span = p.last().copied().unwrap_or(0.0) - p.first().copied().unwrap_or(0.0);
    let spacing = p
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    (span, spacing)
}

/// Pick the width parameter by profile scan: for each candidate the amplitude
/// is solved exactly, and the candidate with the smallest RSS wins.
fn scan_width(obs: &Observations, range: (f64, f64), clamp: (f64, f64), shape: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let lo = range.0.clamp(clamp.0, clamp.1);
    let hi = range.1.clamp(clamp.0, clamp.1);
    if !(hi > lo) {
        let (c, _) = best_amplitude(obs, |p| shape(lo, p));
        return (lo, c);
    }
    let mut best = (lo, 0.0, f64::INFINITY);
    for w in log_grid(lo, hi, SCAN_POINTS) {
        let (c, rss) = best_amplitude(obs, |p| shape(w, p));
        if rss < best.2 {
            best = (w, c, rss);
        }
    }
    (best.0, best.1)
}

fn observed_mode(obs: &Observations) -> f64 {
    let profile: Vec<(f64, f64)> = obs.prices.iter().copied().zip(obs.values.iter().copied()).collect();
    profile_mode(&profile).0
}

/// Single-Bessel seed by scanning `ω` with `p₀` at the mode. Complements
/// [`init_bessel`] when the lobe edge falls between bins.
pub fn scan_bessel(obs: &Observations) -> BesselParams {
    let p0 = observed_mode(obs);
    let (span, spacing) = span_and_spacing(obs);
    let range = (J0_FIRST_ZERO / span.max(spacing), 2.0 * J0_FIRST_ZERO / spacing);
    let (omega, c) = scan_width(obs, range, OMEGA_CLAMP, |w, p| crate::specfun::bessel_j0_unchecked(w * (p - p0)).abs());
    BesselParams { c, omega, p0 }
}

/// First-order Kummer seed by scanning `√A` with `p₀` at the mode.
pub fn scan_kummer(obs: &Observations) -> KummerParams {
    let p0 = observed_mode(obs);
    let (span, spacing) = span_and_spacing(obs);
    let range = (0.5 / span.max(spacing), 2.0 / spacing);
    let shape = |a: f64, p: f64| {
        KummerParams {
            c: 1.0,
            sqrt_a: a,
            p0,
            order: 1,
        }
        .eval(p)
    };
    let (sqrt_a, c) = scan_width(obs, range, SQRT_A_CLAMP, shape);
    KummerParams {
        c,
        sqrt_a,
        p0,
        order: 1,
    }
}

/// Two-Bessel seed with each component scanned on its own side of the split
/// between the two highest separated peaks. Without such peaks the first
/// component is a scanned single-Bessel fit and the second sits at the
/// largest positive residual.
pub fn scan_two_bessel(dist: &DailyVolumeDistribution, opts: &FitOptions) -> TwoBesselParams {
    let obs = Observations::from(dist);
    let profile = dist.dense_profile();
    if let Some((left, right)) = two_peaks(&profile) {
        let split = profile[(left + right) / 2].0;
        let half = |keep: &dyn Fn(f64) -> bool| {
            Observations::new(
                obs.prices
                    .iter()
                    .zip(&obs.values)
                    .filter(|(p, _)| keep(**p))
                    .map(|(&p, &y)| (p, y)),
            )
        };
        let a = scan_bessel(&half(&|p| p <= split));
        let b = scan_bessel(&half(&|p| p > split));
        return TwoBesselParams::new(a, b);
    }
    let seed = scan_bessel(&obs);
    let first = lm_fit(&ModelParams::Bessel(seed), &obs, opts)
        .ok()
        .and_then(|r| match r.params {
            ModelParams::Bessel(b) => Some(b),
            _ => None,
        })
        .unwrap_or(seed);
    let residual = Observations::new(
        obs.prices
            .iter()
            .zip(&obs.values)
            .map(|(&p, &y)| (p, (y - first.eval(p)).max(0.0))),
    );
    let mut second = scan_bessel(&residual);
    second.c = second.c.max(first.c * 1e-3);
    TwoBesselParams::new(first, second)
}

/// Fit from every starting point and keep the lowest RSS; the earliest start
/// wins ties. Starts that cannot be fitted are skipped.
pub fn fit_best_of(inits: &[ModelParams], obs: &Observations, opts: &FitOptions) -> Result<FitResult, FitError> {
    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for init in inits {
        match lm_fit(init, obs, opts) {
            Ok(fit) => {
                let better = match &best {
                    None => true,
                    Some(b) => b.failed() && !fit.failed() || (fit.failed() == b.failed() && fit.goodness.rss < b.goodness.rss),
                };
                if better {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(FitError::Options("no starting points".into())))
}

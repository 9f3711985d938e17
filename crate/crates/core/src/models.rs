//! Eigenfunction model families for the volume probability over price.
//!
//! * Bessel: `C |J₀(ω (p - p₀))|`, a crowd in agreement on one price.
//! * Two-Bessel: the sum of two Bessel components, one per equilibrium price.
//! * Kummer: `C e^{-√A |p - p₀|} |Lₙ(2 √A |p - p₀|)|`, independent trading.
//!
//! All models return the probability of a price bin evaluated at its centre.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::DailyVolumeDistribution;
use crate::specfun::{bessel_j0_unchecked, laguerre_unchecked};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid {family} parameter {name} = {value}")]
    InvalidParam {
        family: Family,
        name: &'static str,
        value: f64,
    },
    #[error("{family} expects {expected} parameters, got {got}")]
    Arity {
        family: Family,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Bessel,
    TwoBessel,
    Kummer,
}

impl Family {
    pub fn param_count(self) -> usize {
        match self {
            Family::Bessel | Family::Kummer => 3,
            Family::TwoBessel => 6,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Bessel => &["C", "omega", "p0"],
            Family::TwoBessel => &["C1", "omega1", "p01", "C2", "omega2", "p02"],
            Family::Kummer => &["C", "sqrtA", "p0"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Bessel => "bessel",
            Family::TwoBessel => "two_bessel",
            Family::Kummer => "kummer",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn positive(family: Family, name: &'static str, value: f64) -> Result<f64, ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ModelError::InvalidParam {
            family,
            name,
            value,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselParams {
    pub c: f64,
    pub omega: f64,
    pub p0: f64,
}

impl BesselParams {
    pub fn new(c: f64, omega: f64, p0: f64) -> Result<Self, ModelError> {
        Ok(BesselParams {
            c: positive(Family::Bessel, "C", c)?,
            omega: positive(Family::Bessel, "omega", omega)?,
            p0: positive(Family::Bessel, "p0", p0)?,
        })
    }

    pub fn eval(&self, p: f64) -> f64 {
        self.c * bessel_j0_unchecked(self.omega * (p - self.p0)).abs()
    }
}

/// Two Bessel components ordered so that `first.p0 <= second.p0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBesselParams {
    pub first: BesselParams,
    pub second: BesselParams,
}

impl TwoBesselParams {
    /// Components are swapped if needed to keep the canonical ordering.
    /// `C₂ = 0` is accepted so that a degenerate superposition can be expressed.
    pub fn new(a: BesselParams, b: BesselParams) -> Self {
        if b.p0 < a.p0 {
            TwoBesselParams {
                first: b,
                second: a,
            }
        } else {
            TwoBesselParams {
                first: a,
                second: b,
            }
        }
    }

    pub fn eval(&self, p: f64) -> f64 {
        self.first.eval(p) + self.second.eval(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KummerParams {
    pub c: f64,
    pub sqrt_a: f64,
    pub p0: f64,
    /// Polynomial order of `F(-n, 1, x)`.
    pub order: u32,
}

impl KummerParams {
    pub fn new(c: f64, sqrt_a: f64, p0: f64, order: u32) -> Result<Self, ModelError> {
        Ok(KummerParams {
            c: positive(Family::Kummer, "C", c)?,
            sqrt_a: positive(Family::Kummer, "sqrtA", sqrt_a)?,
            p0: positive(Family::Kummer, "p0", p0)?,
            order,
        })
    }

    pub fn eval(&self, p: f64) -> f64 {
        let d = (p - self.p0).abs();
        self.c * (-self.sqrt_a * d).exp() * laguerre_unchecked(self.order, 2.0 * self.sqrt_a * d).abs()
    }

    /// Eigenvalue `E = (1 + 2n) √A`.
    pub fn eigenvalue(&self) -> f64 {
        eigenvalue_from_sqrt_a(self.sqrt_a, self.order)
    }
}

/// `√A = E / (1 + 2n)`.
pub fn sqrt_a_from_eigenvalue(e: f64, order: u32) -> f64 {
    e / (1.0 + 2.0 * order as f64)
}

pub fn eigenvalue_from_sqrt_a(sqrt_a: f64, order: u32) -> f64 {
    sqrt_a * (1.0 + 2.0 * order as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParams {
    Bessel(BesselParams),
    TwoBessel(TwoBesselParams),
    Kummer(KummerParams),
}

impl ModelParams {
    pub fn family(&self) -> Family {
        match self {
            ModelParams::Bessel(_) => Family::Bessel,
            ModelParams::TwoBessel(_) => Family::TwoBessel,
            ModelParams::Kummer(_) => Family::Kummer,
        }
    }

    pub fn eval(&self, p: f64) -> f64 {
        match self {
            ModelParams::Bessel(b) => b.eval(p),
            ModelParams::TwoBessel(t) => t.eval(p),
            ModelParams::Kummer(k) => k.eval(p),
        }
    }

    /// Fitted parameters in [`Family::param_names`] order.
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            ModelParams::Bessel(b) => vec![b.c, b.omega, b.p0],
            ModelParams::TwoBessel(t) => vec![
                t.first.c,
                t.first.omega,
                t.first.p0,
                t.second.c,
                t.second.omega,
                t.second.p0,
            ],
            ModelParams::Kummer(k) => vec![k.c, k.sqrt_a, k.p0],
        }
    }

    /// Rebuild from a parameter vector without validation. Non-fitted
    /// settings (the Kummer order) are taken from `self`.
    pub fn with_vec(&self, v: &[f64]) -> Result<ModelParams, ModelError> {
        let family = self.family();
        if v.len() != family.param_count() {
            return Err(ModelError::Arity {
                family,
                expected: family.param_count(),
                got: v.len(),
            });
        }
        Ok(match self {
            ModelParams::Bessel(_) => ModelParams::Bessel(BesselParams {
                c: v[0],
                omega: v[1],
                p0: v[2],
            }),
            ModelParams::TwoBessel(_) => ModelParams::TwoBessel(TwoBesselParams {
                first: BesselParams {
                    c: v[0],
                    omega: v[1],
                    p0: v[2],
                },
                second: BesselParams {
                    c: v[3],
                    omega: v[4],
                    p0: v[5],
                },
            }),
            ModelParams::Kummer(k) => ModelParams::Kummer(KummerParams {
                c: v[0],
                sqrt_a: v[1],
                p0: v[2],
                order: k.order,
            }),
        })
    }

    /// Swap two-Bessel components into canonical order; identity otherwise.
    pub fn canonical(self) -> ModelParams {
        match self {
            ModelParams::TwoBessel(t) => ModelParams::TwoBessel(TwoBesselParams::new(t.first, t.second)),
            other => other,
        }
    }

    /// Equilibrium price(s) of the model.
    pub fn equilibrium_prices(&self) -> Vec<f64> {
        match self {
            ModelParams::Bessel(b) => vec![b.p0],
            ModelParams::TwoBessel(t) => vec![t.first.p0, t.second.p0],
            ModelParams::Kummer(k) => vec![k.p0],
        }
    }

    /// Primary equilibrium price: the larger-mass component for two-Bessel.
    pub fn primary_p0(&self) -> f64 {
        match self {
            ModelParams::Bessel(b) => b.p0,
            ModelParams::TwoBessel(t) => {
                if t.second.c > t.first.c {
                    t.second.p0
                } else {
                    t.first.p0
                }
            }
            ModelParams::Kummer(k) => k.p0,
        }
    }

    /// True where the model has a kink: a zero of an absolute-valued factor,
    /// or the `|p - p₀|` cusp of the Kummer family.
    fn is_kink(&self, p: f64) -> bool {
        const ZERO: f64 = 1e-12;
        match self {
            ModelParams::Bessel(b) => b.eval(p) < ZERO,
            ModelParams::TwoBessel(t) => t.first.eval(p) < ZERO || t.second.eval(p) < ZERO,
            ModelParams::Kummer(k) => p == k.p0 || k.eval(p) < ZERO,
        }
    }
}

/// Relative step of the finite-difference Jacobian.
pub const JACOBIAN_REL_STEP: f64 = 1e-6;
/// Absolute floor on the finite-difference step.
pub const JACOBIAN_ABS_STEP: f64 = 1e-9;

/// Partial derivatives of the model value at `p` with respect to each fitted
/// parameter.
///
/// Central differences with step `max(1e-6 |θ|, 1e-9)`; at kinks a forward
/// difference is used instead.
pub fn numeric_jacobian(params: &ModelParams, p: f64) -> Vec<f64> {
    let theta = params.to_vec();
    let kink = params.is_kink(p);
    let f0 = if kink { params.eval(p) } else { 0.0 };
    let mut out = Vec::with_capacity(theta.len());
    let mut work = theta.clone();
    for j in 0..theta.len() {
        let h = (JACOBIAN_REL_STEP * theta[j].abs()).max(JACOBIAN_ABS_STEP);
        work[j] = theta[j] + h;
        let plus = eval_vec(params, &work, p);
        if kink {
            out.push((plus - f0) / h);
        } else {
            work[j] = theta[j] - h;
            let minus = eval_vec(params, &work, p);
            out.push((plus - minus) / (2.0 * h));
        }
        work[j] = theta[j];
    }
    out
}

fn eval_vec(template: &ModelParams, v: &[f64], p: f64) -> f64 {
    template
        .with_vec(v)
        .map(|m| m.eval(p))
        .unwrap_or(f64::NAN)
}

/// Day-level force and utility diagnostics.
///
/// Populated from whatever fits exist for the day; absent quantities are
/// `None` and listed in `missing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceReport {
    /// `v_t = V / t`, shares per second.
    pub trading_momentum: f64,
    /// `v_tt = V / t²`, shares per second².
    pub momentum_force: f64,
    /// `U = p₀ v_tt`.
    pub liquidity_utility: f64,
    /// `I = p₀ v_t² / V`.
    pub interactive_utility: f64,
    /// Price used for `U` and `I`.
    pub reference_price: f64,
    /// `ω²` from a Bessel fit.
    pub agreement_force: Option<f64>,
    /// `A = (√A)²` from a Kummer fit.
    pub reversal_force: Option<f64>,
    /// `√A` from a Kummer fit.
    pub eigen_sqrt_a: Option<f64>,
    /// `E = (1 + 2n) √A` from a Kummer fit.
    pub eigenvalue: Option<f64>,
    /// `ω² + A` when both fits exist.
    pub momentum_force_inferred: Option<f64>,
    pub missing: Vec<String>,
}

/// Force diagnostics for one day. `fits` may hold any mix of families; the
/// first Bessel (or two-Bessel primary component) and first Kummer fit are
/// used. The reference price is the Bessel `p₀`, else the Kummer `p₀`, else
/// the modal price.
pub fn compute_forces(fits: &[ModelParams], dist: &DailyVolumeDistribution) -> Result<ForceReport, ModelError> {
    let t = dist.session_seconds;
    let volume = dist.total_volume as f64;
    if !(t > 0.0) {
        return Err(ModelError::InvalidParam {
            family: Family::Bessel,
            name: "session_seconds",
            value: t,
        });
    }
    let bessel = fits.iter().find_map(|m| match m {
        ModelParams::Bessel(b) => Some(*b),
        _ => None,
    });
    let kummer = fits.iter().find_map(|m| match m {
        ModelParams::Kummer(k) => Some(*k),
        _ => None,
    });
    let reference_price = bessel
        .map(|b| b.p0)
        .or(kummer.map(|k| k.p0))
        .unwrap_or_else(|| dist.modal_price());

    let trading_momentum = volume / t;
    let momentum_force = volume / (t * t);
    let agreement_force = bessel.map(|b| b.omega * b.omega);
    let reversal_force = kummer.map(|k| k.sqrt_a * k.sqrt_a);
    let momentum_force_inferred = match (agreement_force, reversal_force) {
        (Some(w2), Some(a)) => Some(w2 + a),
        _ => None,
    };
    let mut missing = Vec::new();
    if agreement_force.is_none() {
        missing.push("agreement_force".to_string());
    }
    if reversal_force.is_none() {
        missing.extend(["reversal_force", "eigen_sqrt_a", "eigenvalue"].map(String::from));
    }
    if momentum_force_inferred.is_none() {
        missing.push("momentum_force_inferred".to_string());
    }
    Ok(ForceReport {
        trading_momentum,
        momentum_force,
        liquidity_utility: reference_price * momentum_force,
        interactive_utility: reference_price * trading_momentum * trading_momentum / volume,
        reference_price,
        agreement_force,
        reversal_force,
        eigen_sqrt_a: kummer.map(|k| k.sqrt_a),
        eigenvalue: kummer.map(|k| k.eigenvalue()),
        momentum_force_inferred,
        missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Price, TickSize};
    use chrono::NaiveDate;

    const FIRST_ZERO: f64 = 2.404_825_557_695_773;

    fn bessel() -> BesselParams {
        BesselParams::new(0.2, 50.0, 10.0).unwrap()
    }

    #[test]
    fn bessel_examples() {
        let b = bessel();
        assert_eq!(b.eval(10.0), 0.2);
        assert!(b.eval(10.0 + FIRST_ZERO / 50.0) < 2e-10);
        let d = 0.037;
        assert!((b.eval(10.0 + d) - b.eval(10.0 - d)).abs() <= 1e-15);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(BesselParams::new(0.0, 50.0, 10.0).is_err());
        assert!(BesselParams::new(0.2, -1.0, 10.0).is_err());
        assert!(KummerParams::new(0.2, 1.0, f64::NAN, 1).is_err());
    }

    #[test]
    fn two_bessel_examples() {
        let a = bessel();
        let zero = BesselParams {
            c: 0.0,
            omega: 30.0,
            p0: 10.1,
        };
        let t = TwoBesselParams::new(a, zero);
        for i in 0..50 {
            let p = 9.8 + i as f64 * 0.01;
            assert_eq!(t.eval(p), a.eval(p));
        }
        let b = BesselParams::new(0.1, 30.0, 10.1).unwrap();
        let t = TwoBesselParams::new(b, a);
        assert_eq!(t.first.p0, 10.0);
        let expected = 0.2 + 0.1 * bessel_j0_unchecked(30.0 * (10.0 - 10.1)).abs();
        assert!((t.eval(10.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn kummer_examples() {
        let k = KummerParams::new(0.3, 1.0, 10.0, 1).unwrap();
        assert_eq!(k.eval(10.0), 0.3);
        assert!(k.eval(10.5).abs() < 1e-15);
        assert!(k.eval(9.5).abs() < 1e-15);
        let k0 = KummerParams::new(0.3, 4.0, 10.0, 0).unwrap();
        assert!((k0.eval(10.0 + std::f64::consts::LN_2 / 4.0) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn kummer_decays() {
        for order in 0..5 {
            let k = KummerParams::new(1.0, 3.0, 10.0, order).unwrap();
            assert!(k.eval(10.0 + 50.0 / 3.0) < 1e-15);
        }
    }

    #[test]
    fn jacobian_dc_is_abs_j0() {
        let m = ModelParams::Bessel(bessel());
        for i in 0..20 {
            let p = 9.9 + i as f64 * 0.0107;
            let g = numeric_jacobian(&m, p);
            let exact = bessel_j0_unchecked(50.0 * (p - 10.0)).abs();
            assert!((g[0] - exact).abs() <= 1e-6 * exact.max(1e-12), "{p}: {} vs {exact}", g[0]);
        }
    }

    #[test]
    fn jacobian_p0_vanishes_at_center() {
        let m = ModelParams::Bessel(bessel());
        let g = numeric_jacobian(&m, 10.0);
        assert!(g[2].abs() < 1e-9, "{}", g[2]);
        // brute-force symmetric secant over a coarser step agrees
        let h = 1e-4;
        let secant = (bessel_at_p0(10.0 + h) - bessel_at_p0(10.0 - h)) / (2.0 * h);
        assert!(secant.abs() < 1e-9);
    }

    fn bessel_at_p0(p0: f64) -> f64 {
        BesselParams { p0, ..bessel() }.eval(10.0)
    }

    #[test]
    fn jacobian_one_sided_at_kummer_cusp() {
        let m = ModelParams::Kummer(KummerParams::new(0.3, 2.0, 10.0, 1).unwrap());
        let g = numeric_jacobian(&m, 10.0);
        // moving p0 up from p0 = p: f = C e^{-a h}(1 - 2 a h) so df/dp0 = -3 a C;
        // a forward difference carries O(h) truncation error
        assert!((g[2] - (-3.0 * 2.0 * 0.3)).abs() < 1e-4, "{}", g[2]);
    }

    fn dist(volume: u64) -> DailyVolumeDistribution {
        DailyVolumeDistribution::from_volumes(
            NaiveDate::from_ymd_opt(2007, 4, 2).unwrap(),
            TickSize::COARSE,
            [(Price::from_millis(10_000), volume)],
        )
        .unwrap()
    }

    #[test]
    fn forces_momentum() {
        let d = dist(360_000_000);
        let r = compute_forces(&[], &d).unwrap();
        assert_eq!(r.trading_momentum, 25_000.0);
        assert!(r.agreement_force.is_none());
        assert!(r.missing.iter().any(|m| m == "agreement_force"));
    }

    #[test]
    fn forces_utilities() {
        // v_tt = 2 with t = 1 s, V = 2.
        let d = dist(2).with_session_seconds(1.0);
        let fits = [ModelParams::Bessel(BesselParams::new(0.2, 3.0, 10.0).unwrap())];
        let r = compute_forces(&fits, &d).unwrap();
        assert_eq!(r.momentum_force, 2.0);
        assert_eq!(r.liquidity_utility, 20.0);
        assert_eq!(r.interactive_utility, 10.0 * 4.0 / 2.0);
        assert_eq!(r.agreement_force, Some(9.0));
    }

    #[test]
    fn forces_identity_with_both_fits() {
        let d = dist(1_000);
        let fits = [
            ModelParams::Kummer(KummerParams::new(0.2, 1.5, 10.0, 1).unwrap()),
            ModelParams::Bessel(BesselParams::new(0.2, 3.0, 10.0).unwrap()),
        ];
        let r = compute_forces(&fits, &d).unwrap();
        let (w2, a, m) = (
            r.agreement_force.unwrap(),
            r.reversal_force.unwrap(),
            r.momentum_force_inferred.unwrap(),
        );
        assert_eq!(w2 + a - m, 0.0);
        assert_eq!(r.eigenvalue, Some(4.5));
        assert!(r.missing.is_empty());
    }

    #[test]
    fn eigen_relation() {
        assert_eq!(sqrt_a_from_eigenvalue(3.0, 1), 1.0);
        assert_eq!(eigenvalue_from_sqrt_a(1.0, 1), 3.0);
    }

    #[test]
    fn serde_tagging() {
        let m = ModelParams::Bessel(bessel());
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"family\":\"bessel\""));
        let back: ModelParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}

//! Property tests for the documented invariants of every module.

use chrono::{NaiveDate, NaiveTime};
use proptest::prelude::*;

use pvwave::analysis::{day_pairs, pearson};
use pvwave::fitting::{f_from_r2, r2_critical, Observations};
use pvwave::ingest::{bin_day, parse_ticks, write_ticks, ParseOptions, Price, TickRecord, TickSize};
use pvwave::models::{numeric_jacobian, BesselParams, KummerParams, ModelParams, TwoBesselParams};
use pvwave::pipeline::{CorpusSummary, DayClass, EquilibriumPoint};
use pvwave::specfun::{bessel_j0, f_critical, laguerre, student_t_critical};
use pvwave::{corr_t_test, lm_fit, FitOptions};

fn day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2008, 5, 6).unwrap()
}

fn ticks_from(rows: &[(i64, u64, u32)]) -> Vec<TickRecord> {
    rows.iter()
        .map(|&(millis, volume, sec)| TickRecord {
            day: day(),
            time: NaiveTime::from_hms_opt(9, 30, 0).unwrap() + chrono::Duration::seconds(sec as i64),
            price: Price::from_millis(millis),
            volume,
        })
        .collect()
}

fn tick_rows() -> impl Strategy<Value = Vec<(i64, u64, u32)>> {
    prop::collection::vec((5_000i64..20_000, 1u64..1_000_000, 0u32..14_000), 1..300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn binning_conserves_volume_and_probability(rows in tick_rows()) {
        let ticks = ticks_from(&rows);
        let total: u64 = rows.iter().map(|r| r.1).sum();
        for tick in [0.01, 0.005] {
            let dist = bin_day(&ticks, TickSize::from_f64(tick).unwrap()).unwrap();
            prop_assert_eq!(dist.total_volume, total);
            prop_assert_eq!(dist.bins.iter().map(|b| b.volume).sum::<u64>(), total);
            let p: f64 = dist.bins.iter().map(|b| b.probability).sum();
            prop_assert!((p - 1.0).abs() <= 1e-12);
            prop_assert!(dist.bins.windows(2).all(|w| w[0].price < w[1].price));
            let step = TickSize::from_f64(tick).unwrap().millis();
            prop_assert!(dist.bins.iter().all(|b| b.price.millis() % step == 0));
        }
    }

    #[test]
    fn fine_rebinning_never_loses_bins_on_the_half_cent_grid(
        rows in prop::collection::vec((1_000i64..4_000, 1u64..1_000_000, 0u32..14_000), 1..300)
    ) {
        let rows: Vec<_> = rows.into_iter().map(|(k, v, s)| (5 * k, v, s)).collect();
        let ticks = ticks_from(&rows);
        let coarse = bin_day(&ticks, TickSize::from_f64(0.01).unwrap()).unwrap();
        let fine = bin_day(&ticks, TickSize::from_f64(0.005).unwrap()).unwrap();
        prop_assert!(fine.len() >= coarse.len());
        prop_assert_eq!(fine.total_volume, coarse.total_volume);
    }

    #[test]
    fn write_then_parse_round_trips(rows in tick_rows()) {
        let mut ticks = ticks_from(&rows);
        ticks.sort_by_key(|t| t.time);
        let mut buf = Vec::new();
        write_ticks(&mut buf, &ticks).unwrap();
        let parsed = parse_ticks(buf.as_slice(), &ParseOptions::default()).unwrap();
        prop_assert_eq!(parsed.days.len(), 1);
        prop_assert_eq!(&parsed.days[0].ticks, &ticks);
    }

    #[test]
    fn j0_even_and_bounded(x in -200.0f64..200.0) {
        let j = bessel_j0(x).unwrap();
        prop_assert!(j.abs() <= 1.0);
        prop_assert_eq!(j, bessel_j0(-x).unwrap());
    }

    #[test]
    fn laguerre_recurrence(n in 1i64..30, x in -50.0f64..50.0) {
        let (lm, l0, lp) = (laguerre(n - 1, x).unwrap(), laguerre(n, x).unwrap(), laguerre(n + 1, x).unwrap());
        let a = (2 * n + 1) as f64 - x;
        let scale = ((n + 1) as f64 * lp).abs().max((a * l0).abs()).max((n as f64 * lm).abs()).max(1.0);
        prop_assert!(((n + 1) as f64 * lp - a * l0 + n as f64 * lm).abs() <= 1e-12 * scale);
    }

    #[test]
    fn bessel_model_symmetric_and_nonnegative(
        c in 0.01f64..2.0, omega in 1.0f64..200.0, p0_k in 1u32..100_000, d_k in 0u32..1_000
    ) {
        // dyadic prices so that p0 ± d are exact
        let (p0, d) = (p0_k as f64 / 1024.0, d_k as f64 / 1024.0);
        let m = BesselParams::new(c, omega, p0).unwrap();
        prop_assert_eq!(m.eval(p0 + d), m.eval(p0 - d));
        prop_assert!(m.eval(p0 + d) >= 0.0);
    }

    #[test]
    fn model_values_nonnegative(
        c in 0.01f64..2.0, k in 1.0f64..100.0, p0 in 1.0f64..100.0, d in -2.0f64..2.0, sep in 0.01f64..1.0
    ) {
        let kum = KummerParams::new(c, k, p0, 1).unwrap();
        prop_assert!(kum.eval(p0 + d) >= 0.0);
        let two = TwoBesselParams::new(
            BesselParams::new(c, k, p0).unwrap(),
            BesselParams::new(c * 0.5, k * 1.3, p0 + sep).unwrap(),
        );
        prop_assert!(two.eval(p0 + d) >= 0.0);
    }

    #[test]
    fn kummer_tail_vanishes(c in 0.01f64..2.0, k in 1.0f64..100.0, p0 in 1.0f64..100.0) {
        let m = KummerParams::new(c, k, p0, 1).unwrap();
        prop_assert!(m.eval(p0 + 50.0 / k) < c * 1e-15);
        // e^{-x/2}|1 - x| peaks again at x = 3 and decays monotonically after it
        let mut prev = m.eval(p0 + 1.5 / k);
        for i in 1..200 {
            let v = m.eval(p0 + (1.5 + 0.25 * i as f64) / k);
            prop_assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn decision_equivalence(n in 4usize..2000, k in 1usize..3, r2 in 0.0f64..1.0) {
        prop_assume!(n > k + 1);
        let fc = f_critical(0.05, k as u32, (n - k - 1) as u32).unwrap();
        let by_r2 = r2 > r2_critical(fc, n, k);
        let by_f = f_from_r2(r2, n, k) > fc;
        let gap = (r2 - r2_critical(fc, n, k)).abs();
        prop_assume!(gap > 1e-12);
        prop_assert_eq!(by_r2, by_f);
    }

    #[test]
    fn pearson_affine_invariant(
        xs in prop::collection::vec(-100.0f64..100.0, 5..60),
        a in 0.1f64..10.0, b in -100.0f64..100.0, seed in 0u64..1000
    ) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * 0.3 + ((i as u64 * 7919 + seed) % 101) as f64).collect();
        let r = match pearson(&xs, &ys) { Ok(r) => r, Err(_) => return Ok(()) };
        let ax: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        prop_assert!((pearson(&ax, &ys).unwrap() - r).abs() <= 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        let rn = pearson(&neg, &ys).unwrap();
        prop_assert!((rn + r).abs() <= 1e-12);
        if r != 0.0 {
            prop_assert_eq!(rn.signum(), -r.signum());
        }
    }

    #[test]
    fn corr_t_monotone_in_abs_r(r1 in -0.999f64..0.999, r2 in -0.999f64..0.999, n in 3usize..2000) {
        let (lo, hi) = if r1.abs() <= r2.abs() { (r1, r2) } else { (r2, r1) };
        let tl = corr_t_test(lo, n, 0.05).unwrap().t;
        let th = corr_t_test(hi, n, 0.05).unwrap().t;
        prop_assert!(th >= tl);
    }

    #[test]
    fn summary_percentages_sum_to_hundred(classes in prop::collection::vec(0usize..5, 1..600)) {
        let s = CorpusSummary::from_classes(classes.iter().map(|&i| DayClass::ALL[i]));
        let hundredths: i64 = s.rows.iter().map(|r| (r.percent * 100.0).round() as i64).sum();
        prop_assert_eq!(hundredths, 10_000);
        prop_assert_eq!(s.rows.iter().map(|r| r.count).sum::<usize>(), classes.len());
        for r in &s.rows {
            let exact = 100.0 * r.count as f64 / classes.len() as f64;
            prop_assert!((r.percent - exact).abs() < 0.01 + 1e-9);
        }
    }

    #[test]
    fn pairs_count_without_gaps(n in 2usize..200, seed in 0u64..1000) {
        let start = NaiveDate::from_ymd_opt(2007, 1, 1).unwrap();
        let series: Vec<EquilibriumPoint> = (0..n)
            .map(|i| EquilibriumPoint {
                day: start + chrono::Days::new(i as u64),
                p0: 10.0 + ((i as u64 * 31 + seed) % 17) as f64 * 0.01,
                total_volume: 1_000 + (i as u64 * 13 + seed) % 500,
                class: DayClass::Agreement,
                after_gap: false,
            })
            .collect();
        let pairs = day_pairs(&series).unwrap();
        prop_assert_eq!(pairs.len(), n - 1);
        prop_assert!(pairs.iter().all(|p| !p.spans_gap));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fit_is_bin_order_invariant(omega in 30.0f64..70.0, p0 in 9.95f64..10.05, perm_seed in 0u64..u64::MAX) {
        let truth = BesselParams::new(0.08, omega, p0).unwrap();
        let mut pts: Vec<(f64, f64)> = (0..41)
            .map(|i| {
                let p = 9.8 + 0.01 * i as f64;
                (p, truth.eval(p) * (1.0 + 0.05 * ((i * 37 % 11) as f64 - 5.0) / 5.0))
            })
            .collect();
        let init = ModelParams::Bessel(BesselParams::new(0.07, omega * 1.05, p0 + 0.004).unwrap());
        let a = lm_fit(&init, &Observations::new(pts.clone()), &FitOptions::default()).unwrap();
        let mut s = perm_seed;
        for i in (1..pts.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            pts.swap(i, (s >> 33) as usize % (i + 1));
        }
        let b = lm_fit(&init, &Observations::new(pts), &FitOptions::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn scaling_probabilities_scales_c(omega in 30.0f64..70.0, factor in 0.1f64..10.0) {
        let truth = BesselParams::new(0.08, omega, 10.0).unwrap();
        let obs = Observations::new((0..41).map(|i| {
            let p = 9.8 + 0.01 * i as f64;
            (p, truth.eval(p) * (1.0 + 0.03 * ((i * 37 % 11) as f64 - 5.0) / 5.0))
        }));
        let init = BesselParams::new(0.07, omega * 1.03, 10.003).unwrap();
        let scaled_init = BesselParams::new(0.07 * factor, omega * 1.03, 10.003).unwrap();
        let a = lm_fit(&ModelParams::Bessel(init), &obs, &FitOptions::default()).unwrap();
        let b = lm_fit(&ModelParams::Bessel(scaled_init), &obs.scaled(factor), &FitOptions::default()).unwrap();
        let (va, vb) = (a.params.to_vec(), b.params.to_vec());
        prop_assert!((vb[0] / (va[0] * factor) - 1.0).abs() < 1e-6, "C {} vs {}", vb[0], va[0] * factor);
        prop_assert!((vb[1] / va[1] - 1.0).abs() < 1e-6);
        prop_assert!((vb[2] - va[2]).abs() < 1e-6 * va[2]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn jacobian_matches_secant(
        c in 0.05f64..1.0, k in 10.0f64..80.0, p0 in 5.0f64..20.0, u in 0.0f64..1.0, fam in 0usize..3
    ) {
        let params = match fam {
            0 => ModelParams::Bessel(BesselParams::new(c, k, p0).unwrap()),
            1 => ModelParams::TwoBessel(TwoBesselParams::new(
                BesselParams::new(c, k, p0).unwrap(),
                BesselParams::new(c * 0.6, k * 1.4, p0 + 0.15).unwrap(),
            )),
            _ => ModelParams::Kummer(KummerParams::new(c, k, p0, 1).unwrap()),
        };
        let p = p0 - 0.1 + 0.35 * u;
        // generic points only: away from the kinks of the absolute values and
        // from the zeros of the p0 partial, where a relative comparison is void
        let args: Vec<f64> = match params {
            ModelParams::Bessel(b) => vec![(b.omega * (p - b.p0)).abs()],
            ModelParams::TwoBessel(t) => vec![
                (t.first.omega * (p - t.first.p0)).abs(),
                (t.second.omega * (p - t.second.p0)).abs(),
            ],
            ModelParams::Kummer(m) => vec![2.0 * m.sqrt_a * (p - m.p0).abs()],
        };
        let special: &[f64] = if fam == 2 {
            &[0.0, 1.0, 3.0]
        } else {
            // zeros of J0 and J1 up to 31
            &[0.0, 2.404825557695773, 3.831705970207512, 5.520078110286311, 7.015586669815619,
              8.653727912911013, 10.17346813506272, 11.79153443901428, 13.32369193631422, 14.93091770848779,
              16.47063005087763, 18.07106396791092, 19.61585851046824, 21.21163662987926, 22.76008438059277,
              24.35247153074930, 25.90367208761838, 27.49347913204025, 29.04682853491686, 30.63460646843198]
        };
        for z in args {
            prop_assume!(special.iter().all(|s| (z - s).abs() > 0.1));
        }
        let jac = numeric_jacobian(&params, p);
        let theta = params.to_vec();
        for (i, &j) in jac.iter().enumerate() {
            let slope = |h: f64| {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[i] += h;
                dn[i] -= h;
                (params.with_vec(&up).unwrap().eval(p) - params.with_vec(&dn).unwrap().eval(p)) / (2.0 * h)
            };
            // Richardson-extrapolated secant
            let h = 1e-5 * theta[i].abs();
            let secant = (4.0 * slope(h / 2.0) - slope(h)) / 3.0;
            let scale = j.abs().max(secant.abs()).max(1e-8);
            prop_assert!((j - secant).abs() <= 1e-5 * scale, "param {i}: jacobian {j} secant {secant}");
        }
    }
}

#[test]
fn j0_satisfies_bessel_equation() {
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let mut x = 0.1;
    while x <= 30.0 {
        let y = |t: f64| bessel_j0(t).unwrap();
        let d2 = (y(x + h) - 2.0 * y(x) + y(x - h)) / (h * h);
        let d1 = (y(x + h) - y(x - h)) / (2.0 * h);
        worst = worst.max((x * d2 + d1 + x * y(x)).abs());
        x += 0.01;
    }
    assert!(worst < 1e-5, "max residual {worst:e}");
}

#[test]
fn laguerre_satisfies_its_equation() {
    let h = 1e-4;
    for n in 0..=10i64 {
        let y = |t: f64| laguerre(n, t).unwrap();
        let mut worst: f64 = 0.0;
        for i in 1..=2000 {
            let x = 20.0 * i as f64 / 2000.0;
            let d2 = (y(x + h) - 2.0 * y(x) + y(x - h)) / (h * h);
            let d1 = (y(x + h) - y(x - h)) / (2.0 * h);
            let terms = [x * d2, (1.0 - x) * d1, n as f64 * y(x)];
            let scale = terms.iter().map(|t| t.abs()).sum::<f64>().max(1.0);
            worst = worst.max(terms.iter().sum::<f64>().abs() / scale);
        }
                assert!(worst < 1e-5, "n = {n}: max residual {worst:e}");
    }
}

#[test]
fn t_critical_strictly_decreasing_in_df() {
    let mut prev = f64::INFINITY;
    for df in 1..=1000u32 {
        let t = student_t_critical(0.05, df).unwrap();
        assert!(t < prev, "df {df}: {t} !< {prev}");
        prev = t;
    }
}

#[test]
fn quantile_round_trip_on_percent_grid() {
    use pvwave::specfun::{f_cdf, f_quantile, student_t_cdf, student_t_quantile};
    for q in (1..=99).map(|i| i as f64 / 100.0) {
        for df in [1u32, 2, 4, 10, 30, 100, 500] {
            let t = student_t_quantile(q, df).unwrap();
            assert!((student_t_cdf(t, df).unwrap() - q).abs() < 1e-8);
            for d1 in [1u32, 2, 5] {
                let f = f_quantile(q, d1, df).unwrap();
                assert!((f_cdf(f, d1, df).unwrap() - q).abs() < 1e-8);
            }
        }
    }
}

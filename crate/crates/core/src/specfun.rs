//! Special functions and distribution quantiles.
//!
//! Everything here is a pure function of its arguments. The `*_unchecked`
//! variants skip domain validation and are what the model evaluators call in
//! their inner loops; the public checked functions return [`SpecFunError`].

use std::f64::consts::{FRAC_PI_4, PI};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("{func}: argument out of domain ({detail})")]
    Domain { func: &'static str, detail: String },
}

fn domain(func: &'static str, detail: impl Into<String>) -> SpecFunError {
    SpecFunError::Domain {
        func,
        detail: detail.into(),
    }
}

/// Upper edge of the power-series branch of J₀.
const J0_SERIES_MAX: f64 = 2.0;
/// Lower edge of the Hankel asymptotic branch of J₀.
const J0_ASYMPTOTIC_MIN: f64 = 25.0;

/// Bessel function of the first kind, order zero.
///
/// Three branches, all accurate to a few ulps of absolute error:
///
/// * `|x| <= 8`: Maclaurin series `Σ (-x²/4)^k / (k!)²`.
/// * `8 < |x| < 25`: Miller backward recurrence normalised with
///   `J₀ + 2 Σ J₂ₖ = 1`. The series loses too many digits to cancellation
///   here and the asymptotic expansion is not yet converged enough.
/// * `|x| >= 25`: Hankel asymptotic expansion, summed until the terms stop
///   shrinking.
pub fn bessel_j0(x: f64) -> Result<f64, SpecFunError> {
    if !x.is_finite() {
        return Err(domain("bessel_j0", format!("x = {x}")));
    }
    Ok(bessel_j0_unchecked(x))
}

pub fn bessel_j0_unchecked(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= J0_SERIES_MAX {
        j0_series(ax)
    } else if ax < J0_ASYMPTOTIC_MIN {
        j0_miller(ax)
    } else {
        j0_asymptotic(ax)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && term.abs() < 1e-20 {
            break;
        }
    }
    sum
}

fn j0_miller(x: f64) -> f64 {
    const RESCALE: f64 = 1e250;
    // Start order comfortably beyond the turning point; J_n(x) decays
    // super-exponentially once n exceeds x. Even, so the loop below steps
    // two orders at a time and lands on J_0.
    let start = {
        let n = (x + 16.0 + 6.0 * x.cbrt()).ceil() as usize;
        n + (n % 2)
    };
    let two_over_x = 2.0 / x;
    let mut above = 0.0_f64; // J_{k+1}
    let mut current = 1e-30_f64; // J_k, k even
    let mut even_sum = 0.0_f64; // Σ J_{2j}, j >= 1
    let mut k = start as f64;
    while k > 0.0 {
        let odd = k * two_over_x * current - above; // J_{k-1}
        let even = (k - 1.0) * two_over_x * odd - current; // J_{k-2}
        above = odd;
        current = even;
        k -= 2.0;
        if k > 0.0 {
            even_sum += current;
        }
        if current.abs() > RESCALE {
            current /= RESCALE;
            above /= RESCALE;
            even_sum /= RESCALE;
        }
    }
    current / (current + 2.0 * even_sum)
}

fn j0_asymptotic(x: f64) -> f64 {
    // a_k = Π_{j=1..k} (-(2j-1)²) / (k! 8^k); term_k = a_k / x^k.
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= -(odd * odd) / (8.0 * k as f64 * x);
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Laguerre polynomial `Lₙ(x)`, which equals Kummer's `F(-n, 1, x)`.
pub fn laguerre(n: i64, x: f64) -> Result<f64, SpecFunError> {
    if n < 0 {
        return Err(domain("laguerre", format!("n = {n}")));
    }
    if !x.is_finite() {
        return Err(domain("laguerre", format!("x = {x}")));
    }
    Ok(laguerre_unchecked(n as u32, x))
}

/// Three-term recurrence `(k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1}`.
pub fn laguerre_unchecked(n: u32, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => 1.0 - x,
        _ => {
            let mut prev = 1.0;
            let mut cur = 1.0 - x;
            for k in 1..n {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection keeps the series in its accurate half-plane.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const BETA_CF_EPS: f64 = 1e-14;
const BETA_CF_MAX_ITER: usize = 300;

/// Regularized incomplete beta function `Iₓ(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64, SpecFunError> {
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(domain("reg_inc_beta", format!("a = {a}, b = {b}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(domain("reg_inc_beta", format!("x = {x}")));
    }
    Ok(reg_inc_beta_unchecked(a, b, x))
}

pub fn reg_inc_beta_unchecked(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b
    }
}

/// Continued fraction for the incomplete beta function, modified Lentz.
fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < BETA_CF_EPS {
            break;
        }
    }
    h
}

/// Bisection for the `y` in `[0, 1]` with `f(y) = target`, `f` nondecreasing.
fn bisect_unit(target: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_prob(func: &'static str, p: f64) -> Result<(), SpecFunError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(domain(func, format!("probability {p} outside (0, 1)")))
    }
}

/// Two-sided tail `P(|T| > t)` of Student's t with `df` degrees of freedom.
pub fn student_t_two_sided_tail(t: f64, df: u32) -> f64 {
    let n = df as f64;
    let t = t.abs();
    if t.is_infinite() {
        return 0.0;
    }
    reg_inc_beta_unchecked(0.5 * n, 0.5, n / (n + t * t))
}

/// Student-t cumulative distribution function.
pub fn student_t_cdf(t: f64, df: u32) -> Result<f64, SpecFunError> {
    if df < 1 {
        return Err(domain("student_t_cdf", "df must be >= 1"));
    }
    if t.is_nan() {
        return Err(domain("student_t_cdf", "t is NaN"));
    }
    let half_tail = 0.5 * student_t_two_sided_tail(t, df);
    Ok(if t >= 0.0 { 1.0 - half_tail } else { half_tail })
}

/// Lower-tail quantile of Student's t.
pub fn student_t_quantile(p: f64, df: u32) -> Result<f64, SpecFunError> {
    if df < 1 {
        return Err(domain("student_t_quantile", "df must be >= 1"));
    }
    check_prob("student_t_quantile", p)?;
    if p == 0.5 {
        return Ok(0.0);
    }
    let tail = if p > 0.5 { 2.0 * (1.0 - p) } else { 2.0 * p };
    let t = t_from_two_sided_tail(tail, df);
    Ok(if p > 0.5 { t } else { -t })
}

fn t_from_two_sided_tail(alpha: f64, df: u32) -> f64 {
    let n = df as f64;
    // P(|T| > t) = I_y(n/2, 1/2) with y = n / (n + t²), increasing in y.
    let y = bisect_unit(alpha, |y| reg_inc_beta_unchecked(0.5 * n, 0.5, y));
    (n * (1.0 - y) / y).sqrt()
}

/// Critical value `t*` with `P(|T| > t*) = alpha_two_sided`.
pub fn student_t_critical(alpha_two_sided: f64, df: u32) -> Result<f64, SpecFunError> {
    if df < 1 {
        return Err(domain("student_t_critical", "df must be >= 1"));
    }
    check_prob("student_t_critical", alpha_two_sided)?;
    Ok(t_from_two_sided_tail(alpha_two_sided, df))
}

/// F-distribution cumulative distribution function.
pub fn f_cdf(f: f64, d1: u32, d2: u32) -> Result<f64, SpecFunError> {
    if d1 < 1 || d2 < 1 {
        return Err(domain("f_cdf", format!("d1 = {d1}, d2 = {d2}")));
    }
    if f.is_nan() {
        return Err(domain("f_cdf", "f is NaN"));
    }
    if f <= 0.0 {
        return Ok(0.0);
    }
    if f.is_infinite() {
        return Ok(1.0);
    }
    let (a, b) = (d1 as f64, d2 as f64);
    Ok(reg_inc_beta_unchecked(0.5 * a, 0.5 * b, a * f / (a * f + b)))
}

/// Lower-tail quantile of F(d1, d2).
pub fn f_quantile(p: f64, d1: u32, d2: u32) -> Result<f64, SpecFunError> {
    if d1 < 1 || d2 < 1 {
        return Err(domain("f_quantile", format!("d1 = {d1}, d2 = {d2}")));
    }
    check_prob("f_quantile", p)?;
    let (a, b) = (d1 as f64, d2 as f64);
    let y = bisect_unit(p, |y| reg_inc_beta_unchecked(0.5 * a, 0.5 * b, y));
    Ok(b * y / (a * (1.0 - y)))
}

/// Upper-`alpha` critical value of F(d1, d2).
pub fn f_critical(alpha: f64, d1: u32, d2: u32) -> Result<f64, SpecFunError> {
    check_prob("f_critical", alpha)?;
    f_quantile(1.0 - alpha, d1, d2)
        .map_err(|_| domain("f_critical", format!("d1 = {d1}, d2 = {d2}")))
}

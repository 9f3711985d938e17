//! Test-only oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

const FRAC_BITS: u32 = 256;

/// Exact dyadic decomposition `x = m * 2^e`.
fn dyadic(x: f64) -> (BigInt, i32) {
    if x == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    let m = BigInt::from(mant);
    (if x < 0.0 { -m } else { m }, e)
}

/// `x * 2^FRAC_BITS` truncated toward zero.
fn to_fixed(x: f64) -> BigInt {
    let (m, e) = dyadic(x);
    let shift = FRAC_BITS as i32 + e;
    if shift >= 0 {
        m << shift as usize
    } else {
        m >> (-shift) as usize
    }
}

fn from_fixed(v: &BigInt) -> f64 {
    let keep = 64u32;
    let bits = v.bits() as u32;
    if bits <= keep {
        return v.to_f64().unwrap() * 2f64.powi(-(FRAC_BITS as i32));
    }
    let drop = bits - keep;
    let top = (v.abs() >> drop as usize).to_f64().unwrap();
    let signed = if v.is_negative() { -top } else { top };
    signed * 2f64.powi(drop as i32 - FRAC_BITS as i32)
}

/// J0 from its power series in 256-bit fixed point.
pub fn j0_series(x: f64) -> f64 {
    let x2 = to_fixed(x * 0.5);
    let q = (&x2 * &x2) >> FRAC_BITS as usize;
    let mut term = BigInt::one() << FRAC_BITS as usize;
    let mut sum = term.clone();
    let mut k: u64 = 1;
    loop {
        term = -((&term * &q) >> FRAC_BITS as usize) / BigInt::from(k * k);
        if term.is_zero() {
            break;
        }
        sum += &term;
        k += 1;
    }
    from_fixed(&sum)
}

/// `L_n(x) = sum_k C(n,k) (-x)^k / k!` in 256-bit fixed point.
pub fn laguerre_exact(n: u32, x: f64) -> f64 {
    let xf = to_fixed(x);
    let mut term = BigInt::one() << FRAC_BITS as usize;
    let mut sum = term.clone();
    for k in 1..=n as u64 {
        term = -((&term * &xf) >> FRAC_BITS as usize) * BigInt::from(n as u64 - k + 1) / BigInt::from(k * k);
        sum += &term;
    }
    from_fixed(&sum)
}

/// Regularised incomplete beta by composite Simpson after `t = sin^2 θ`,
/// which leaves a smooth integrand `sin^{2a-1} θ cos^{2b-1} θ` for
/// half-integer shapes.
pub fn beta_quadrature(x: f64, a: f64, b: f64) -> f64 {
    let f = |th: f64| th.sin().powf(2.0 * a - 1.0) * th.cos().powf(2.0 * b - 1.0);
    let simpson = |hi: f64| {
        let m = 20_000;
        let h = hi / m as f64;
        let mut s = f(0.0) + f(hi);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0
    };
    simpson(x.sqrt().asin()) / simpson(std::f64::consts::FRAC_PI_2)
}

//! Arbitrary-precision helpers on top of `astro-float`.
//!
//! Results of `ln`/`exp` chains are treated as accurate to a relative
//! `2^-(p - 16)` at working precision `p`; callers widen intervals by that
//! amount before deciding anything.

use std::cell::RefCell;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

use crate::context::ExactExponent;
use crate::dd::Dd;

pub(crate) const RM: RoundingMode = RoundingMode::ToEven;

/// Bits of slack assumed lost in an `exp(e * ln x)` evaluation.
pub(crate) const SLACK_BITS: usize = 16;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constant cache"));
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

pub(crate) fn from_i128(v: i128, p: usize) -> BigFloat {
    BigFloat::from_i128(v, p)
}

pub(crate) fn exponent_big(e: ExactExponent, p: usize) -> BigFloat {
    from_i128(e.num, p + 64).div(&from_i128(e.den, p + 64), p, RM)
}

/// `n^e` for a positive integer `n`.
pub(crate) fn pow_u64(n: u64, e: ExactExponent, p: usize) -> BigFloat {
    if n == 1 {
        return BigFloat::from_u64(1, p);
    }
    let x = BigFloat::from_u64(n, p);
    let eb = exponent_big(e, p);
    with_consts(|cc| x.ln(p, RM, cc).mul(&eb, p, RM).exp(p, RM, cc))
}

pub(crate) fn from_f64(x: f64, p: usize) -> BigFloat {
    BigFloat::from_f64(x, p.max(64))
}

/// Relative error bound `2^-(p - SLACK_BITS)` as a big float.
pub(crate) fn rel_err(p: usize) -> BigFloat {
    let mut one = BigFloat::from_u64(1, 64);
    let e = one.exponent().unwrap_or(1);
    one.set_exponent(e - (p - SLACK_BITS) as i32);
    one
}

/// Enclosure `[v (1 - r), v (1 + r)]` of a positive value.
pub(crate) fn widen(v: &BigFloat, p: usize) -> (BigFloat, BigFloat) {
    let r = rel_err(p);
    let d = v.mul(&r, p, RM).abs();
    (v.sub(&d, p, RM), v.add(&d, p, RM))
}

/// Top 128 bits of the mantissa and the binary exponent, so that the value
/// is `m * 2^(e - 128)`.
fn top_bits(x: &BigFloat) -> Option<(u128, i32, bool)> {
    let (words, _n, sign, e, _) = x.as_raw_parts()?;
    if words.iter().all(|w| *w == 0) {
        return Some((0, 0, false));
    }
    let k = words.len();
    let hi = words[k - 1] as u128;
    let lo = if k >= 2 { words[k - 2] as u128 } else { 0 };
    Some(((hi << 64) | lo, e, sign == Sign::Neg))
}

fn u64_to_dd(w: u64) -> Dd {
    let a = ((w >> 32) as f64) * 4294967296.0;
    let b = (w & 0xffff_ffff) as f64;
    Dd::new(a, b)
}

pub(crate) fn to_dd(x: &BigFloat) -> Dd {
    match top_bits(x) {
        None => Dd::from_f64(f64::NAN),
        Some((0, _, _)) => Dd::ZERO,
        Some((m, e, neg)) => {
            let hi = u64_to_dd((m >> 64) as u64).ldexp(e - 64);
            let lo = u64_to_dd(m as u64).ldexp(e - 128);
            let v = hi + lo;
            if neg {
                -v
            } else {
                v
            }
        }
    }
}

pub(crate) fn to_f64(x: &BigFloat) -> f64 {
    to_dd(x).to_f64()
}

/// `floor(x)` as an integer, if it fits in `i128`.
pub(crate) fn floor_i128(x: &BigFloat) -> Option<i128> {
    let f = x.floor();
    let (m, e, neg) = top_bits(&f)?;
    if m == 0 {
        return Some(0);
    }
    if e > 127 || e <= 0 {
        return if e <= 0 { Some(0) } else { None };
    }
    let v = (m >> (128 - e)) as i128;
    Some(if neg { -v } else { v })
}

pub(crate) fn ceil_i128(x: &BigFloat) -> Option<i128> {
    floor_i128(&x.neg()).map(|v| -v)
}

/// `x * 2^k`, exact.
pub(crate) fn scale2(x: &BigFloat, k: i32) -> BigFloat {
    let mut y = x.clone();
    if let Some(e) = y.exponent() {
        if !y.is_zero() {
            y.set_exponent(e + k);
        }
    }
    y
}

/// Centered fractional part of `scale * n^e` for an exact `scale`.
pub(crate) fn frac_scaled_pow(n: u64, e: ExactExponent, scale: f64, p: usize) -> f64 {
    let v = pow_u64(n, e, p).mul(&from_f64(scale, p), p, RM);
    let f = v.sub(&v.floor(), p, RM);
    let r = to_f64(&f);
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

pub(crate) fn is_below(a: &BigFloat, b: &BigFloat) -> bool {
    matches!(a.cmp(b), Some(c) if c < 0)
}

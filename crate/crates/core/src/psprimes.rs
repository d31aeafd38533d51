//! Membership, enumeration and counting for the Piatetski-Shapiro sequence
//! `N_gamma = { floor(m^(1/gamma)) : m >= 1 }` and its primes.
//!
//! Every floor decision is certified. The fast path evaluates `n^gamma` in
//! `f64` and accepts the result when it is farther than the boundary guard
//! from an integer. Otherwise exact integer values are detected through an
//! integer root, and everything else is re-evaluated with `astro-float` at
//! doubling precision until the enclosing interval contains no integer.

use num_integer::Roots;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::is_prime;
use crate::big;
use crate::context::{ExactExponent, PSContext};
use crate::error::{Error, Result};

const M_CHUNK: u64 = 4096;

/// `ceil(n^gamma)`, certified.
pub fn ceil_pow_gamma(n: u64, ctx: &PSContext) -> Result<u64> {
    ceil_pow(n, ctx.gamma, ctx.gamma_exact(), ctx)
}

fn ceil_pow(n: u64, e: f64, eq: ExactExponent, ctx: &PSContext) -> Result<u64> {
    if n < (1 << 53) {
        let nf = n as f64;
        let v = nf.powf(e);
        let err = v * 8.0 * f64::EPSILON * (1.0 + nf.ln());
        let width = err.max(ctx.boundary_guard * v.max(1.0));
        if (v - v.round()).abs() > width {
            return Ok(v.ceil() as u64);
        }
    }
    if let Some(r) = exact_root(n, eq.den) {
        return r
            .checked_pow(eq.num as u32)
            .ok_or_else(|| Error::invalid("n", "power overflows u64"));
    }
    let mut p = ctx.precision_bits.max(64);
    while p <= ctx.max_precision_bits {
        let v = big::pow_u64(n, eq, p);
        let (lo, hi) = big::widen(&v, p);
        match (big::floor_i128(&lo), big::floor_i128(&hi)) {
            (Some(a), Some(b)) if a == b => return Ok(a as u64 + 1),
            _ => p *= 2,
        }
    }
    Err(Error::PrecisionExhausted {
        what: format!("certifying ceil({n}^{e})"),
        bits: ctx.max_precision_bits,
    })
}

/// `Some(r)` when `n = r^q`.
pub(crate) fn exact_root(n: u64, q: i128) -> Option<u64> {
    if n <= 1 {
        return Some(n);
    }
    if q >= 64 {
        return None;
    }
    let r = n.nth_root(q as u32);
    (r.checked_pow(q as u32) == Some(n)).then_some(r)
}

/// `floor(-n^gamma) - floor(-(n+1)^gamma)`, which is 1 exactly on members.
pub fn indicator(n: u64, ctx: &PSContext) -> Result<u8> {
    if n == 0 || n == u64::MAX {
        return Err(Error::invalid("n", format!("{n} is outside [1, 2^64 - 2]")));
    }
    let a = ceil_pow_gamma(n, ctx)?;
    let b = ceil_pow_gamma(n + 1, ctx)?;
    match b - a {
        0 => Ok(0),
        1 => Ok(1),
        d => Err(Error::Inconsistent(format!("indicator({n}) = {d}"))),
    }
}

pub fn is_ps_member(n: u64, ctx: &PSContext) -> Result<bool> {
    Ok(indicator(n, ctx)? == 1)
}

/// Sawtooth `psi(x) = x - floor(x) - 1/2`.
#[inline]
pub fn psi(x: f64) -> f64 {
    x - x.floor() - 0.5
}

/// `(n+1)^gamma - n^gamma` without cancellation.
pub fn gamma_increment(n: u64, ctx: &PSContext) -> f64 {
    let nf = n as f64;
    nf.powf(ctx.gamma) * (ctx.gamma * (1.0 / nf).ln_1p()).exp_m1()
}

/// `Psi_gamma(n) = psi(-(n+1)^gamma) - psi(-n^gamma)`.
///
/// Evaluated as `indicator(n) - gamma_increment(n)`, so
/// `indicator(n) == gamma_increment(n) + psi_gamma(n)` holds in floating point.
pub fn psi_gamma(n: u64, ctx: &PSContext) -> Result<f64> {
    Ok(indicator(n, ctx)? as f64 - gamma_increment(n, ctx))
}

/// Largest `n` with `n^gamma <= m`, i.e. `floor(m^(1/gamma))`.
fn floor_root(m: u64, ctx: &PSContext) -> Result<u64> {
    let mut n = ((m as f64).powf(1.0 / ctx.gamma).floor() as u64).max(1);
    while ceil_pow_gamma(n + 1, ctx)? <= m {
        n += 1;
    }
    while n > 1 && ceil_pow_gamma(n, ctx)? > m {
        n -= 1;
    }
    Ok(n)
}

/// Members `floor(m^(1/gamma))` for `m` in `[m_lo, m_hi]`, ascending.
fn members_from_m(m_lo: u64, m_hi: u64, ctx: &PSContext) -> Result<Vec<u64>> {
    if m_hi < m_lo {
        return Ok(Vec::new());
    }
    let chunks = (m_hi - m_lo) / M_CHUNK + 1;
    let parts: Vec<Result<Vec<u64>>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let a = m_lo + k * M_CHUNK;
            let b = (a + M_CHUNK - 1).min(m_hi);
            (a..=b).map(|m| floor_root(m, ctx)).collect()
        })
        .collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    out.dedup();
    Ok(out)
}

/// The dyadic window `N_gamma ∩ (X/2, X]` with its primes.
#[derive(Clone, Debug, Serialize)]
pub struct PSWindow {
    pub x: f64,
    #[serde(skip)]
    pub ctx: PSContext,
    pub members: Vec<u64>,
    pub primes: Vec<u64>,
    pub log_weights: Vec<f64>,
}

impl PSWindow {
    /// Integers `n` with `X/2 < n <= X`.
    pub fn int_range(&self) -> std::ops::RangeInclusive<u64> {
        window_int_range(self.x)
    }

    pub fn prime_weight_total(&self) -> f64 {
        crate::reduce::tree_sum(&self.log_weights, 0.0)
    }
}

pub(crate) fn window_int_range(x: f64) -> std::ops::RangeInclusive<u64> {
    ((x / 2.0).floor() as u64 + 1)..=(x.floor() as u64)
}

pub fn build_window(x: f64, ctx: &PSContext) -> Result<PSWindow> {
    if !(x >= 4.0) || !x.is_finite() {
        return Err(Error::invalid("X", format!("{x} is below 4")));
    }
    if x > 2f64.powi(52) {
        return Err(Error::invalid("X", format!("{x} exceeds 2^52")));
    }
    let range = window_int_range(x);
    let m_lo = ((x / 2.0).powf(ctx.gamma).ceil() as u64).saturating_sub(2).max(1);
    let m_hi = x.powf(ctx.gamma).floor() as u64 + 2;
    let members: Vec<u64> = members_from_m(m_lo, m_hi, ctx)?
        .into_iter()
        .filter(|n| range.contains(n))
        .collect();
    for &n in &members {
        if !is_ps_member(n, ctx)? {
            return Err(Error::Inconsistent(format!("enumerated {n} fails the membership test")));
        }
    }
    let primes: Vec<u64> = members.iter().copied().filter(|&n| is_prime(n)).collect();
    let log_weights = primes.iter().map(|&p| (p as f64).ln()).collect();
    Ok(PSWindow {
        x,
        ctx: *ctx,
        members,
        primes,
        log_weights,
    })
}

/// Primes of `N_gamma` in `(lo, hi]`.
pub fn ps_primes_in(lo: u64, hi: u64, ctx: &PSContext) -> Result<Vec<u64>> {
    if hi as f64 > 2f64.powi(52) {
        return Err(Error::invalid("range", format!("{hi} exceeds 2^52")));
    }
    if hi <= lo {
        return Ok(Vec::new());
    }
    let m_lo = ((lo.max(1) as f64).powf(ctx.gamma).floor() as u64).saturating_sub(2).max(1);
    let m_hi = (hi as f64).powf(ctx.gamma).ceil() as u64 + 2;
    Ok(members_from_m(m_lo, m_hi, ctx)?
        .into_iter()
        .filter(|&n| n > lo && n <= hi && is_prime(n))
        .collect())
}

/// All members in `[1, N]`.
pub fn members_up_to(n_max: f64, ctx: &PSContext) -> Result<Vec<u64>> {
    if !(n_max >= 1.0) || n_max > 2f64.powi(52) {
        return Err(Error::invalid("N", format!("{n_max} is outside [1, 2^52]")));
    }
    let top = n_max.floor() as u64;
    let m_hi = n_max.powf(ctx.gamma).floor() as u64 + 2;
    Ok(members_from_m(1, m_hi, ctx)?
        .into_iter()
        .filter(|&n| n <= top)
        .collect())
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct PiGamma {
    pub count: u64,
    pub predicted: f64,
    pub ratio: f64,
}

/// Number of Piatetski-Shapiro primes up to `N` against `N^gamma / log N`.
pub fn pi_gamma(n_max: f64, ctx: &PSContext) -> Result<PiGamma> {
    if !(n_max >= 10.0) {
        return Err(Error::invalid("N", format!("{n_max} is below 10")));
    }
    let members = members_up_to(n_max, ctx)?;
    let count = members.par_iter().filter(|&&n| is_prime(n)).count() as u64;
    let predicted = n_max.powf(ctx.gamma) / n_max.ln();
    Ok(PiGamma {
        count,
        predicted,
        ratio: count as f64 / predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(g: f64) -> PSContext {
        PSContext::new(g, 1.5).unwrap()
    }

    #[test]
    fn trivial_members() {
        assert!(is_ps_member(1, &ctx(0.9)).unwrap());
        assert!(is_ps_member(4, &ctx(0.5)).unwrap());
        assert!(!is_ps_member(5, &ctx(0.5)).unwrap());
        assert!(!is_ps_member(6, &ctx(0.9)).unwrap());
    }

    #[test]
    fn squares_for_half() {
        let c = ctx(0.5);
        for n in 1..5000u64 {
            let r = n.sqrt();
            assert_eq!(is_ps_member(n, &c).unwrap(), r * r == n, "n = {n}");
        }
    }

    #[test]
    fn exact_integer_powers_take_the_root_path() {
        // 2^20 has 19/20-th power 2^19 exactly.
        let c = ctx(0.95);
        assert_eq!(ceil_pow_gamma(1 << 20, &c).unwrap(), 1 << 19);
        assert_eq!(exact_root(1 << 20, 20), Some(2));
        assert_eq!(exact_root(1_000_001, 20), None);
    }

    #[test]
    fn escalation_agrees_with_fast_path() {
        // A wide guard forces most decisions through astro-float.
        let wide = ctx(0.9).with_boundary_guard(1e-3).unwrap();
        let narrow = ctx(0.9);
        for n in 1..400u64 {
            assert_eq!(
                ceil_pow_gamma(n, &wide).unwrap(),
                ceil_pow_gamma(n, &narrow).unwrap(),
                "n = {n}"
            );
        }
    }

    #[test]
    fn sawtooth_values() {
        assert_eq!(psi(0.5), 0.0);
        for k in -3..4 {
            assert_eq!(psi(k as f64), -0.5);
        }
    }

    #[test]
    fn psi_gamma_six() {
        let c = ctx(0.9);
        let expect = -(7f64.powf(0.9) - 6f64.powf(0.9));
        assert!((psi_gamma(6, &c).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn indicator_identity_is_exact() {
        for g in [0.5, 0.75, 0.9, 0.95] {
            let c = ctx(g);
            for n in 1..=10_000u64 {
                let k = indicator(n, &c).unwrap() as f64;
                let r = k - (gamma_increment(n, &c) + psi_gamma(n, &c).unwrap());
                assert_eq!(r, 0.0, "gamma = {g}, n = {n}");
            }
        }
    }

    #[test]
    fn window_examples() {
        let w = build_window(100.0, &ctx(0.5)).unwrap();
        assert!(w.primes.is_empty());
        assert_eq!(w.members, vec![64, 81, 100]);

        let c = ctx(0.9);
        let w = build_window(100.0, &c).unwrap();
        let oracle: Vec<u64> = (51..=100).filter(|&n| is_ps_member(n, &c).unwrap()).collect();
        assert_eq!(w.members, oracle);

        let w = build_window(4.0, &c).unwrap();
        assert!(w.members.iter().all(|n| [3, 4].contains(n)));
        for n in [3u64, 4] {
            assert_eq!(w.members.contains(&n), is_ps_member(n, &c).unwrap());
        }
    }

    #[test]
    fn degenerate_window_rejected() {
        assert!(build_window(3.9, &ctx(0.9)).is_err());
    }

    #[test]
    fn pi_gamma_small() {
        let c = ctx(0.9);
        let r = pi_gamma(10.0, &c).unwrap();
        let oracle = (1..=10u64).filter(|&n| is_prime(n) && is_ps_member(n, &c).unwrap()).count();
        assert_eq!(r.count as usize, oracle);
        assert_eq!(pi_gamma(100.0, &ctx(0.5)).unwrap().count, 0);
    }
}

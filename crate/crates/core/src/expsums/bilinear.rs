//! Double sums `sum_{m ~ M} sum_{X/2 < mk <= X} a_m b_k e(f(mk))`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PhaseEval, PhaseSpec};
use crate::arith::{mangoldt, mobius, spf_table};
use crate::context::PSContext;
use crate::error::{Error, Result};
use crate::psprimes::window_int_range;
use crate::reduce::{det_sum_c, NeumaierC};

const MAX_X: f64 = (1u64 << 28) as f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoeffA {
    One,
    Mobius,
    Mangoldt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoeffB {
    One,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coeffs {
    pub a: CoeffA,
    pub b: CoeffB,
}

/// `m` runs over `(M/2, M]`, `n = mk` over `(X/2, X]`.
pub fn eval_bilinear(phase: &PhaseSpec, m_size: f64, x: f64, coeffs: Coeffs, ctx: &PSContext) -> Result<Complex64> {
    if !(m_size >= 2.0) || !(m_size <= x) {
        return Err(Error::invalid("M", format!("{m_size} is not in [2, X]")));
    }
    if !(x <= MAX_X) {
        return Err(Error::invalid("X", format!("{x} exceeds 2^28")));
    }
    if phase.exponent_gamma != ctx.gamma {
        return Err(Error::GammaMismatch {
            window: ctx.gamma,
            phase: phase.exponent_gamma,
        });
    }
    let pe = PhaseEval::new(phase, x)?;
    let r = window_int_range(x);
    let (n_lo, n_hi) = (*r.start(), *r.end());
    let table: Vec<Complex64> = (n_lo..=n_hi).into_par_iter().map(|n| pe.e(n)).collect();

    let m_lo = (m_size / 2.0).floor() as u64 + 1;
    let m_hi = m_size.floor() as u64;
    let spf = match coeffs.a {
        CoeffA::One => Vec::new(),
        _ => spf_table(m_hi as usize),
    };
    let a_of = |m: u64| -> f64 {
        match coeffs.a {
            CoeffA::One => 1.0,
            CoeffA::Mobius => mobius(m as usize, &spf) as f64,
            CoeffA::Mangoldt => mangoldt(m as usize, &spf),
        }
    };
    let count = (m_hi + 1).saturating_sub(m_lo) as usize;
    Ok(det_sum_c(count, |i| {
        let m = m_lo + i as u64;
        let a = a_of(m);
        if a == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut acc = NeumaierC::default();
        for k in n_lo.div_ceil(m)..=n_hi / m {
            let b = match coeffs.b {
                CoeffB::One => 1.0,
                CoeffB::Log => (k as f64).ln(),
            };
            acc.add(table[(m * k - n_lo) as usize] * b);
        }
        acc.value() * a
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_phase_divisor_count() {
        let ctx = PSContext::new(0.9, 1.5).unwrap();
        let ph = PhaseSpec::new(0.0, &ctx);
        let ones = Coeffs {
            a: CoeffA::One,
            b: CoeffB::One,
        };
        let (x, m) = (3000.0f64, 40.0f64);
        let v = eval_bilinear(&ph, m, x, ones, &ctx).unwrap();
        let y = (x / 2.0).floor() as u64;
        let expect: u64 = (21..=40u64).map(|m| x as u64 / m - y / m).sum();
        assert_eq!(v.re, expect as f64);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn range_validation() {
        let ctx = PSContext::new(0.9, 1.5).unwrap();
        let ph = PhaseSpec::new(0.1, &ctx);
        let c = Coeffs {
            a: CoeffA::Mangoldt,
            b: CoeffB::Log,
        };
        assert!(eval_bilinear(&ph, 1.0, 100.0, c, &ctx).is_err());
        assert!(eval_bilinear(&ph, 200.0, 100.0, c, &ctx).is_err());
    }
}

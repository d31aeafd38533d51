//! Weighted exponential sums over a dyadic window and their relatives.
//!
//! | kind | index set              | weight              |
//! |------|------------------------|---------------------|
//! | S    | primes in `N_gamma(X)` | `log p`             |
//! | T    | `N_gamma(X)`           | 1                   |
//! | S0   | primes in `(X/2, X]`   | `gamma p^(gamma-1) log p` |
//! | T0   | integers in `(X/2, X]` | `gamma n^(gamma-1)` |
//! | S1   | primes in `(X/2, X]`   | `Psi_gamma(p) log p` |
//! | T1   | integers in `(X/2, X]` | `Psi_gamma(n)`      |
//!
//! Phases are `f(n) = theta n^c + h (n + u)^gamma` reduced modulo 1 in
//! double-double arithmetic, switching to `astro-float` once `|theta| X^c`
//! is too large for 106 bits to leave a clean fractional part.

mod audit;
mod bilinear;
mod integral;
mod mean_square;

pub use audit::{bound_audit, AuditRow, AuditSpec, AuditReport, LemmaId, Sensitivity, ThetaPoint, XSummary, DEFAULT_SLACK, SENSITIVITY_SLACKS};
pub use bilinear::{eval_bilinear, CoeffA, CoeffB, Coeffs};
pub use integral::{eval_v, eval_v_with, VRule, DEFAULT_MAX_PANELS};
pub use mean_square::{mean_square, MeanSquare};

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::is_prime;
use crate::big;
use crate::context::{ExactExponent, PSContext};
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::psprimes::{build_window, psi_gamma, window_int_range, PSWindow};
use crate::reduce::det_sum_c;

/// Above this `|scale| X^e` the phase is reduced with big floats.
const DD_PHASE_LIMIT: f64 = 1e15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SumKind {
    S,
    T,
    S0,
    T0,
    S1,
    T1,
}

impl SumKind {
    pub const ALL: [SumKind; 6] = [SumKind::S, SumKind::T, SumKind::S0, SumKind::T0, SumKind::S1, SumKind::T1];

    /// Summation over primes rather than all integers.
    pub fn over_primes(self) -> bool {
        matches!(self, SumKind::S | SumKind::S0 | SumKind::S1)
    }
}

impl fmt::Display for SumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for SumKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "S" => SumKind::S,
            "T" => SumKind::T,
            "S0" => SumKind::S0,
            "T0" => SumKind::T0,
            "S1" => SumKind::S1,
            "T1" => SumKind::T1,
            _ => return Err(Error::UnknownId(s.to_string())),
        })
    }
}

/// `f(n) = theta n^c + h (n + shift_u)^gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub theta: f64,
    pub h: f64,
    pub shift_u: u8,
    pub exponent_c: f64,
    pub exponent_gamma: f64,
}

impl PhaseSpec {
    /// `theta n^c` with the context exponents and `h = 0`.
    pub fn new(theta: f64, ctx: &PSContext) -> Self {
        PhaseSpec {
            theta,
            h: 0.0,
            shift_u: 0,
            exponent_c: ctx.c,
            exponent_gamma: ctx.gamma,
        }
    }

    pub fn with_h(mut self, h: f64, shift_u: u8) -> Self {
        self.h = h;
        self.shift_u = shift_u;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.shift_u > 1 {
            return Err(Error::invalid("shift_u", format!("{} is not 0 or 1", self.shift_u)));
        }
        if !self.theta.is_finite() || !self.h.is_finite() {
            return Err(Error::invalid("phase", "theta and h must be finite"));
        }
        if !(self.exponent_c > 0.0) || !self.exponent_c.is_finite() {
            return Err(Error::invalid("exponent_c", format!("{} is not positive", self.exponent_c)));
        }
        if !(self.exponent_gamma > 0.0 && self.exponent_gamma < 1.0) {
            return Err(Error::invalid("exponent_gamma", format!("{} is not in (0, 1)", self.exponent_gamma)));
        }
        Ok(())
    }
}

/// One monomial `scale * m^e` reduced modulo 1.
#[derive(Clone, Copy, Debug)]
struct Monomial {
    scale: f64,
    e: Dd,
    eq: ExactExponent,
    /// Working precision when double-double is not enough.
    big_bits: Option<usize>,
}

impl Monomial {
    fn new(scale: f64, e: f64, m_max: f64) -> Result<Self> {
        let eq = ExactExponent::from_f64(e)?;
        let size = scale.abs() * m_max.powf(e);
        let big_bits = (size > DD_PHASE_LIMIT).then(|| 96 + size.log2().ceil() as usize);
        Ok(Monomial {
            scale,
            e: eq.to_dd(),
            eq,
            big_bits,
        })
    }

    #[inline]
    fn frac(&self, m: u64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        match self.big_bits {
            None => Dd::from_f64(m as f64).powd(self.e).mul_f64(self.scale).frac_centered(),
            Some(p) => big::frac_scaled_pow(m, self.eq, self.scale, p),
        }
    }
}

/// Prepared phase for indices up to a known maximum.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PhaseEval {
    main: Monomial,
    shift: Monomial,
    u: u64,
}

impl PhaseEval {
    pub(crate) fn new(phase: &PhaseSpec, n_max: f64) -> Result<Self> {
        phase.validate()?;
        Ok(PhaseEval {
            main: Monomial::new(phase.theta, phase.exponent_c, n_max)?,
            shift: Monomial::new(phase.h, phase.exponent_gamma, n_max + 1.0)?,
            u: phase.shift_u as u64,
        })
    }

    /// `f(n)` modulo 1, in `[-1, 1)`.
    #[inline]
    pub(crate) fn frac(&self, n: u64) -> f64 {
        self.main.frac(n) + self.shift.frac(n + self.u)
    }

    #[inline]
    pub(crate) fn e(&self, n: u64) -> Complex64 {
        e_frac(self.frac(n))
    }
}

/// `e(r) = exp(2 pi i r)`.
#[inline]
pub fn e_frac(r: f64) -> Complex64 {
    let (s, c) = (TAU * r).sin_cos();
    Complex64::new(c, s)
}

/// Index set and weights of one sum kind.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SumTerms {
    pub ns: Vec<u64>,
    pub weights: Vec<f64>,
}

impl SumTerms {
    pub fn len(&self) -> usize {
        self.ns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ns.is_empty()
    }

    pub fn abs_weight_total(&self) -> f64 {
        crate::reduce::det_sum(self.weights.len(), |i| self.weights[i].abs())
    }
}

pub fn sum_terms(kind: SumKind, window: &PSWindow) -> Result<SumTerms> {
    let ctx = &window.ctx;
    let g = ctx.gamma;
    let all = || -> Vec<u64> { window.int_range().collect() };
    let primes_all = || -> Vec<u64> { window.int_range().into_par_iter().filter(|&n| is_prime(n)).collect() };
    let psi_all = |ns: &[u64]| -> Result<Vec<f64>> { ns.par_iter().map(|&n| psi_gamma(n, ctx)).collect() };
    let smooth = |n: u64| g * (n as f64).powf(g - 1.0);
    Ok(match kind {
        SumKind::S => SumTerms {
            ns: window.primes.clone(),
            weights: window.log_weights.clone(),
        },
        SumKind::T => SumTerms {
            ns: window.members.clone(),
            weights: vec![1.0; window.members.len()],
        },
        SumKind::S0 => {
            let ns = primes_all();
            let weights = ns.iter().map(|&p| smooth(p) * (p as f64).ln()).collect();
            SumTerms { ns, weights }
        }
        SumKind::T0 => {
            let ns = all();
            let weights = ns.iter().map(|&n| smooth(n)).collect();
            SumTerms { ns, weights }
        }
        SumKind::S1 => {
            let ns = primes_all();
            let weights = psi_all(&ns)?
                .into_iter()
                .zip(&ns)
                .map(|(s, &p)| s * (p as f64).ln())
                .collect();
            SumTerms { ns, weights }
        }
        SumKind::T1 => {
            let ns = all();
            let weights = psi_all(&ns)?;
            SumTerms { ns, weights }
        }
    })
}

/// `sum_i w_i e(f(n_i))`, deterministic for any thread count.
pub fn eval_terms(phase: &PhaseSpec, terms: &SumTerms) -> Result<Complex64> {
    let n_max = terms.ns.last().copied().unwrap_or(1) as f64;
    let pe = PhaseEval::new(phase, n_max)?;
    Ok(det_sum_c(terms.len(), |i| pe.e(terms.ns[i]) * terms.weights[i]))
}

fn check_gamma(window: &PSWindow, phase: &PhaseSpec) -> Result<()> {
    if window.ctx.gamma != phase.exponent_gamma {
        return Err(Error::GammaMismatch {
            window: window.ctx.gamma,
            phase: phase.exponent_gamma,
        });
    }
    Ok(())
}

pub fn eval_sum(kind: SumKind, phase: &PhaseSpec, window: &PSWindow) -> Result<Complex64> {
    check_gamma(window, phase)?;
    eval_terms(phase, &sum_terms(kind, window)?)
}

/// Unweighted `sum_{X/2 < n <= X} e(f(n))` over all integers.
pub fn eval_integer_sum(phase: &PhaseSpec, x: f64) -> Result<Complex64> {
    if !(x >= 2.0) || !x.is_finite() {
        return Err(Error::invalid("X", format!("{x} is below 2")));
    }
    let r = window_int_range(x);
    let start = *r.start();
    let len = (r.end() + 1).saturating_sub(start) as usize;
    let pe = PhaseEval::new(phase, x)?;
    Ok(det_sum_c(len, |i| pe.e(start + i as u64)))
}

/// `(|S - S0 - S1|, |T - T0 - T1|)` at `h = 0`.
pub fn decomposition_residual(theta: f64, x: f64, ctx: &PSContext) -> Result<(f64, f64)> {
    if !(x >= 16.0) {
        return Err(Error::invalid("X", format!("{x} is below 16")));
    }
    let w = build_window(x, ctx)?;
    let ph = PhaseSpec::new(theta, ctx);
    let v = |k| eval_sum(k, &ph, &w);
    let rs = (v(SumKind::S)? - v(SumKind::S0)? - v(SumKind::S1)?).norm();
    let rt = (v(SumKind::T)? - v(SumKind::T0)? - v(SumKind::T1)?).norm();
    Ok((rs, rt))
}

use num_integer::Integer;
use serde::Serialize;

use crate::dd::Dd;
use crate::error::{Error, Result};

pub const DEFAULT_PRECISION_BITS: usize = 128;
pub const DEFAULT_MAX_PRECISION_BITS: usize = 4096;
pub const DEFAULT_BOUNDARY_GUARD: f64 = 1e-12;

/// A real exponent held as the exact rational `num/den` in lowest terms.
///
/// The rational is read off the shortest decimal string that round-trips the
/// `f64`, so `0.9` means exactly `9/10` rather than the nearest binary double.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ExactExponent {
    pub num: i128,
    pub den: i128,
}

impl ExactExponent {
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::invalid("exponent", format!("{x} is not finite")));
        }
        let s = format!("{}", x.abs());
        let (int, frac) = s.split_once('.').unwrap_or((s.as_str(), ""));
        let decimal = if frac.len() <= 30 {
            let den = 10i128.checked_pow(frac.len() as u32);
            let digits: Option<i128> = format!("{int}{frac}").parse().ok();
            den.zip(digits)
        } else {
            None
        };
        let (num, den) = match decimal {
            Some((den, num)) => (num, den),
            None => binary_ratio(x.abs())
                .ok_or_else(|| Error::invalid("exponent", format!("{x} has no compact rational form")))?,
        };
        let g = num.gcd(&den);
        let sign = if x < 0.0 { -1 } else { 1 };
        Ok(ExactExponent {
            num: sign * num / g,
            den: den / g,
        })
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn to_dd(self) -> Dd {
        let split = |v: i128| {
            let hi = (v >> 53) as f64 * 2f64.powi(53);
            Dd::new(hi, (v & ((1 << 53) - 1)) as f64)
        };
        split(self.num) / split(self.den)
    }
}

fn binary_ratio(x: f64) -> Option<(i128, i128)> {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let mant = (bits & ((1 << 52) - 1)) | if exp == 0 { 0 } else { 1 << 52 };
    let e = exp.max(1) - 1075;
    if e >= 0 {
        Some(((mant as i128).checked_shl(e as u32)?, 1))
    } else if -e < 126 {
        Some((mant as i128, 1i128 << (-e)))
    } else {
        None
    }
}

/// Exponent pair `(gamma, c)` plus the precision policy used for every
/// certified floor decision.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PSContext {
    pub gamma: f64,
    pub c: f64,
    pub precision_bits: usize,
    pub max_precision_bits: usize,
    pub boundary_guard: f64,
    #[serde(skip)]
    gamma_q: ExactExponent,
    #[serde(skip)]
    c_q: ExactExponent,
}

impl PSContext {
    pub fn new(gamma: f64, c: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::invalid("gamma", format!("{gamma} is not in (0, 1)")));
        }
        if !(c > 1.0) || !c.is_finite() {
            return Err(Error::invalid("c", format!("{c} is not > 1")));
        }
        if (c - c.round()).abs() < 1e-12 {
            return Err(Error::invalid("c", format!("{c} is an integer")));
        }
        Ok(PSContext {
            gamma,
            c,
            precision_bits: DEFAULT_PRECISION_BITS,
            max_precision_bits: DEFAULT_MAX_PRECISION_BITS,
            boundary_guard: DEFAULT_BOUNDARY_GUARD,
            gamma_q: ExactExponent::from_f64(gamma)?,
            c_q: ExactExponent::from_f64(c)?,
        })
    }

    pub fn with_precision_bits(mut self, bits: usize) -> Result<Self> {
        if bits < 64 {
            return Err(Error::invalid("precision_bits", format!("{bits} < 64")));
        }
        self.precision_bits = bits;
        self.max_precision_bits = self.max_precision_bits.max(bits);
        Ok(self)
    }

    pub fn with_max_precision_bits(mut self, bits: usize) -> Result<Self> {
        if bits < self.precision_bits {
            return Err(Error::invalid(
                "max_precision_bits",
                format!("{bits} < precision_bits {}", self.precision_bits),
            ));
        }
        self.max_precision_bits = bits;
        Ok(self)
    }

    pub fn with_boundary_guard(mut self, guard: f64) -> Result<Self> {
        if !(guard > 0.0 && guard <= 1e-3) {
            return Err(Error::invalid("boundary_guard", format!("{guard} is not in (0, 1e-3]")));
        }
        self.boundary_guard = guard;
        Ok(self)
    }

    /// Same precision policy, different exponents.
    pub fn with_exponents(&self, gamma: f64, c: f64) -> Result<Self> {
        let mut next = PSContext::new(gamma, c)?;
        next.precision_bits = self.precision_bits;
        next.max_precision_bits = self.max_precision_bits;
        next.boundary_guard = self.boundary_guard;
        Ok(next)
    }

    pub fn gamma_exact(&self) -> ExactExponent {
        self.gamma_q
    }

    pub fn c_exact(&self) -> ExactExponent {
        self.c_q
    }
}

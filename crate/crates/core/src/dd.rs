//! Double-double arithmetic (about 106 significant bits).
//!
//! Only the operations needed for accurate powers `n^c` and phase reduction
//! modulo 1 are provided.

use std::ops::{Add, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact for integers below 2^106.
    pub fn from_u128(n: u128) -> Self {
        let hi = n as f64;
        let rest = n as i128 - hi as i128;
        Dd::new(hi, rest as f64)
    }

    /// `p / q` correctly to double-double accuracy.
    pub fn ratio(p: i64, q: i64) -> Self {
        Dd::from_f64(p as f64) / Dd::from_f64(q as f64)
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, b: f64) -> Self {
        let (s, e) = two_sum(self.hi, b);
        let e = e + self.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn recip(self) -> Self {
        Dd::ONE / self
    }

    pub fn ldexp(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        Dd { hi: self.hi * f, lo: self.lo * f }
    }

    pub fn exp(self) -> Self {
        if self.hi == 0.0 {
            return Dd::ONE;
        }
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2.mul_f64(k);
        const SQUARINGS: i32 = 10;
        let r = r.ldexp(-SQUARINGS);
        // expm1(r) by Taylor series; |r| < 4e-4 so 9 terms reach 1e-33.
        let mut term = r;
        let mut s = r;
        for i in 2..=9 {
            term = (term * r) / Dd::from_f64(i as f64);
            s = s + term;
        }
        for _ in 0..SQUARINGS {
            s = s.mul_f64(2.0) + s * s;
        }
        (s + Dd::ONE).ldexp(k as i32)
    }

    /// Natural logarithm by one Newton step on `exp`.
    pub fn ln(self) -> Self {
        assert!(self.hi > 0.0, "ln of non-positive value");
        let l0 = Dd::from_f64(self.hi.ln());
        l0 + self * (-l0).exp() - Dd::ONE
    }

    /// `x^e` for `x > 0`.
    pub fn powd(self, e: Dd) -> Self {
        (self.ln() * e).exp()
    }

    pub fn floor(self) -> Self {
        let fh = self.hi.floor();
        if fh == self.hi {
            let fl = self.lo.floor();
            Dd::new(fh, fl)
        } else {
            Dd { hi: fh, lo: 0.0 }
        }
    }

    /// Fractional part reduced to `[-1/2, 1/2)`.
    pub fn frac_centered(self) -> f64 {
        let rh = self.hi - self.hi.round();
        let r = rh + (self.lo - self.lo.round());
        r - r.round()
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let e = e + t;
        let (s, e) = quick_two_sum(s, e);
        let e = e + f;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl std::ops::Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add_f64(q3)
    }
}

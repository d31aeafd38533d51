//! Reference implementations for the integration tests. Nothing here calls
//! into `pslab`: integer questions are answered exactly with `BigUint`, real
//! ones with `astro-float` at `P` bits.
#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};
use num_bigint::{BigInt, BigUint};

pub const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

/// The rational exponent `num / den`.
#[derive(Clone, Copy, Debug)]
pub struct Q(pub u32, pub u32);

impl Q {
    pub fn f64(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

fn big(n: u64) -> BigUint {
    BigUint::from(n)
}

/// `ceil(n^g)`: the least `m` with `m^den >= n^num`.
pub fn ceil_pow(n: u64, g: Q) -> u64 {
    let t = big(n).pow(g.0);
    let r = t.nth_root(g.1);
    let r = if r.pow(g.1) < t { r + 1u32 } else { r };
    u64::try_from(r).unwrap()
}

/// `floor(m^(1/g))`: the largest `n` with `n^num <= m^den`.
pub fn floor_inv_pow(m: u64, g: Q) -> u64 {
    u64::try_from(big(m).pow(g.1).nth_root(g.0)).unwrap()
}

/// Some integer lies in `[n^g, (n+1)^g)`.
pub fn member(n: u64, g: Q) -> bool {
    big(ceil_pow(n, g)).pow(g.1) < big(n + 1).pow(g.0)
}

/// `floor(m^(1/g))` for `m = 1, 2, ...` up to `n_max`, deduplicated.
pub fn m_scan(n_max: u64, g: Q) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    for m in 1.. {
        let n = floor_inv_pow(m, g);
        if n > n_max {
            break;
        }
        if out.last() != Some(&n) {
            out.push(n);
        }
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// `floor(-n^g) - floor(-(n+1)^g)`.
pub fn indicator(n: u64, g: Q) -> i64 {
    ceil_pow(n + 1, g) as i64 - ceil_pow(n, g) as i64
}

/// Integers in `(x/2, x]`.
pub fn window(x: f64) -> std::ops::RangeInclusive<u64> {
    ((x / 2.0).floor() as u64 + 1)..=(x.floor() as u64)
}

pub fn mobius(n: u64) -> i64 {
    let (mut n, mut sign, mut d) = (n, 1, 2);
    while d * d <= n {
        if n % d == 0 {
            n /= d;
            if n % d == 0 {
                return 0;
            }
            sign = -sign;
        }
        d += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

pub fn mangoldt(n: u64) -> f64 {
    for p in 2..=n {
        if n % p == 0 {
            let mut m = n;
            while m % p == 0 {
                m /= p;
            }
            return if m == 1 { (p as f64).ln() } else { 0.0 };
        }
    }
    0.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    S,
    T,
    S0,
    T0,
    S1,
    T1,
    /// Every integer with unit weight.
    Z,
}

pub const KINDS: [Kind; 6] = [Kind::S, Kind::T, Kind::S0, Kind::T0, Kind::S1, Kind::T1];

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::S => "S",
            Kind::T => "T",
            Kind::S0 => "S0",
            Kind::T0 => "T0",
            Kind::S1 => "S1",
            Kind::T1 => "T1",
            Kind::Z => "Z",
        }
    }
}

pub struct Big {
    cc: Consts,
}

impl Default for Big {
    fn default() -> Self {
        Big {
            cc: Consts::new().unwrap(),
        }
    }
}

impl Big {
    pub fn int(n: u64) -> BigFloat {
        BigFloat::from_u64(n, P)
    }

    pub fn real(x: f64) -> BigFloat {
        BigFloat::from_f64(x, P)
    }

    pub fn f64(x: &BigFloat) -> f64 {
        format!("{x}").parse().unwrap()
    }

    /// `n^e` for an exact rational `e`.
    pub fn pow(&mut self, n: u64, e: Q) -> BigFloat {
        let q = Self::int(e.0 as u64).div(&Self::int(e.1 as u64), P, RM);
        Self::int(n).pow(&q, P, RM, &mut self.cc)
    }

    pub fn ln(&mut self, n: u64) -> BigFloat {
        Self::int(n).ln(P, RM, &mut self.cc)
    }

    /// `(cos, sin)` of `2 pi x`, reduced modulo 1 first.
    pub fn e(&mut self, x: &BigFloat) -> (BigFloat, BigFloat) {
        let f = x.sub(&x.floor(), P, RM);
        let pi = self.cc.pi(P, RM);
        let a = f.mul(&pi, P, RM).mul(&Self::int(2), P, RM);
        (a.cos(P, RM, &mut self.cc), a.sin(P, RM, &mut self.cc))
    }

    /// `Psi_gamma(n) = indicator(n) - ((n+1)^g - n^g)`.
    pub fn psi_gamma(&mut self, n: u64, g: Q) -> BigFloat {
        let d = self.pow(n + 1, g).sub(&self.pow(n, g), P, RM);
        BigFloat::from_i64(indicator(n, g), P).sub(&d, P, RM)
    }

    /// `sum w(n) e(theta n^c + h (n+u)^g)` over the index set of `kind`.
    pub fn direct_sum(&mut self, kind: Kind, theta: f64, h: f64, u: u64, x: f64, g: Q, c: Q) -> (f64, f64) {
        let (mut re, mut im) = (BigFloat::from_u64(0, P), BigFloat::from_u64(0, P));
        let (tb, hb) = (Self::real(theta), Self::real(h));
        let gb = Self::int(g.0 as u64).div(&Self::int(g.1 as u64), P, RM);
        for n in window(x) {
            let keep = match kind {
                Kind::S => is_prime(n) && member(n, g),
                Kind::T => member(n, g),
                Kind::S0 | Kind::S1 => is_prime(n),
                Kind::T0 | Kind::T1 | Kind::Z => true,
            };
            if !keep {
                continue;
            }
            let w = match kind {
                Kind::S => self.ln(n),
                Kind::T | Kind::Z => Self::int(1),
                Kind::S0 => gb.mul(&self.pow(n, g), P, RM).div(&Self::int(n), P, RM).mul(&self.ln(n), P, RM),
                Kind::T0 => gb.mul(&self.pow(n, g), P, RM).div(&Self::int(n), P, RM),
                Kind::S1 => self.psi_gamma(n, g).mul(&self.ln(n), P, RM),
                Kind::T1 => self.psi_gamma(n, g),
            };
            let mut phase = tb.mul(&self.pow(n, c), P, RM);
            if h != 0.0 {
                phase = phase.add(&hb.mul(&self.pow(n + u, g), P, RM), P, RM);
            }
            let (cs, sn) = self.e(&phase);
            re = re.add(&w.mul(&cs, P, RM), P, RM);
            im = im.add(&w.mul(&sn, P, RM), P, RM);
        }
        (Self::f64(&re), Self::f64(&im))
    }

    /// `sum |(n+1)^g - n^g - g n^(g-1)| w(n)` over the window, with `w = log n`
    /// on primes or `w = 1` on all integers.
    pub fn decomposition_envelope(&mut self, x: f64, g: Q, primes: bool) -> f64 {
        let gb = div(&Self::int(g.0 as u64), &Self::int(g.1 as u64));
        let mut total = 0.0;
        for n in window(x) {
            if primes && !is_prime(n) {
                continue;
            }
            let inc = sub(&self.pow(n + 1, g), &self.pow(n, g));
            let smooth = div(&mul(&gb, &self.pow(n, g)), &Self::int(n));
            let gap = Self::f64(&sub(&inc, &smooth)).abs();
            total += gap * if primes { (n as f64).ln() } else { 1.0 };
        }
        total
    }

    /// `p^c` for each `p`, exactly rounded to `P` bits.
    pub fn powers(&mut self, ps: &[u64], c: Q) -> Vec<BigFloat> {
        ps.iter().map(|&p| self.pow(p, c)).collect()
    }
}

pub fn add(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.add(b, P, RM)
}

pub fn sub(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.sub(b, P, RM)
}

/// `|v| < eps` in `P`-bit arithmetic.
pub fn within(v: &BigFloat, eps: f64) -> bool {
    matches!(v.abs().cmp(&Big::real(eps)), Some(o) if o < 0)
}

/// PS primes of index `g` in `(lo, hi]`.
pub fn ps_primes(lo: u64, hi: u64, g: Q) -> Vec<u64> {
    (lo + 1..=hi).filter(|&n| member(n, g) && is_prime(n)).collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn mul(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.mul(b, P, RM)
}

pub fn div(a: &BigFloat, b: &BigFloat) -> BigFloat {
    a.div(b, P, RM)
}

/// Ordered `s`-tuples from `primes` with `|sum p^c - n| < eps`.
///
/// Sums are screened in double precision; anything within `1e-7` of the
/// boundary is recomputed with `P` bits.
pub struct TupleOracle {
    primes: Vec<u64>,
    powers: Vec<f64>,
    exact: Vec<BigFloat>,
}

impl TupleOracle {
    pub fn new(primes: Vec<u64>, c: Q) -> Self {
        let mut b = Big::default();
        let exact = b.powers(&primes, c);
        let powers = exact.iter().map(Big::f64).collect();
        TupleOracle { primes, powers, exact }
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    fn hit(&self, idx: &[usize], n: f64, eps: f64) -> bool {
        let s: f64 = idx.iter().map(|&i| self.powers[i]).sum();
        let d = (s - n).abs();
        if d < eps - 1e-7 {
            return true;
        }
        if d > eps + 1e-7 {
            return false;
        }
        let mut acc = Big::real(-n);
        for &i in idx {
            acc = add(&acc, &self.exact[i]);
        }
        within(&acc, eps)
    }

    fn walk(&self, idx: &mut Vec<usize>, s: usize, n: f64, eps: f64, partial: f64, out: &mut Vec<Vec<u64>>, first: bool) {
        if first && !out.is_empty() {
            return;
        }
        if idx.len() == s {
            if self.hit(idx, n, eps) {
                out.push(idx.iter().map(|&i| self.primes[i]).collect());
            }
            return;
        }
        let left = (s - idx.len() - 1) as f64;
        for i in 0..self.len() {
            let p = partial + self.powers[i];
            if p + left * self.powers[0] > n + eps + 1.0 {
                break;
            }
            if p + left * self.powers[self.len() - 1] < n - eps - 1.0 {
                continue;
            }
            idx.push(i);
            self.walk(idx, s, n, eps, p, out, first);
            idx.pop();
        }
    }

    pub fn tuples(&self, s: usize, n: f64, eps: f64) -> Vec<Vec<u64>> {
        let mut out = Vec::new();
        if !self.primes.is_empty() {
            self.walk(&mut Vec::new(), s, n, eps, 0.0, &mut out, false);
        }
        out
    }

    pub fn soluble(&self, s: usize, n: f64, eps: f64) -> bool {
        let mut out = Vec::new();
        if !self.primes.is_empty() {
            self.walk(&mut Vec::new(), s, n, eps, 0.0, &mut out, true);
        }
        !out.is_empty()
    }
}

/// Ordered `(x1, x2, x3, x4)` with `x1, x2` from `a`, `x3, x4` from `z` and
/// `|x1^c - x2^c + x3^c - x4^c| < bound`.
pub fn diagonal_solutions(a: &[u64], z: &[u64], c: Q, bound: f64) -> u128 {
    let mut b = Big::default();
    let pa = b.powers(a, c);
    let pz = b.powers(z, c);
    let reach = bound + 2.0 * pz.iter().map(Big::f64).fold(0.0, f64::max);
    let mut count = 0;
    for x1 in &pa {
        for x2 in &pa {
            let d12 = sub(x1, x2);
            if Big::f64(&d12).abs() > reach {
                continue;
            }
            for x3 in &pz {
                for x4 in &pz {
                    count += within(&sub(&add(&d12, x3), x4), bound) as u128;
                }
            }
        }
    }
    count
}

/// Exact rational `n / d` with `d > 0`.
#[derive(Clone, Debug)]
pub struct Frac(pub BigInt, pub BigInt);

impl Frac {
    pub fn int(n: i64) -> Self {
        Frac(n.into(), 1.into())
    }

    pub fn add(&self, o: &Frac) -> Frac {
        Frac(&self.0 * &o.1 + &o.0 * &self.1, &self.1 * &o.1)
    }

    pub fn sub(&self, o: &Frac) -> Frac {
        self.add(&Frac(-o.0.clone(), o.1.clone()))
    }

    pub fn mul(&self, o: &Frac) -> Frac {
        Frac(&self.0 * &o.0, &self.1 * &o.1)
    }

    pub fn recip(&self) -> Frac {
        if self.0 < BigInt::from(0) {
            Frac(-self.1.clone(), -self.0.clone())
        } else {
            Frac(self.1.clone(), self.0.clone())
        }
    }

    pub fn f64(&self) -> f64 {
        // 30 significant digits survive the integer quotient.
        let shift = BigInt::from(10).pow(30);
        let q = (&self.0 * &shift) / &self.1;
        q.to_string().parse::<f64>().unwrap() / 1e30
    }
}

/// `Delta = (7c/3 + 7) rho + 1/c - (4c/3 + 5) nu` at `c = p/q`, exactly.
pub fn exact_delta(p: i64, q: i64) -> f64 {
    let c = Frac(p.into(), q.into());
    let k = Frac::int;
    let third = Frac(1.into(), 3.into());
    let rho = c.mul(&c).mul(&k(8)).add(&c.mul(&k(12))).add(&k(12)).recip();
    let nu = c.mul(&c).add(&c.mul(&k(3))).add(&k(2)).recip();
    let a = c.mul(&k(7)).mul(&third).add(&k(7)).mul(&rho);
    let b = c.mul(&k(4)).mul(&third).add(&k(5)).mul(&nu);
    a.add(&c.recip()).sub(&b).f64()
}

//! Certified meet-in-the-middle search for `|sum_j s_j n_j^c - target| < eps`.
//!
//! Every coordinate `n_j` ranges over its own slot list and carries a sign.
//! Powers are enclosed in `i128` fixed point with `f_bits` fractional bits;
//! candidate pairs whose enclosure straddles a boundary are settled with
//! big-float interval arithmetic at doubling precision.

use astro_float::{BigFloat, RoundingMode};
use rayon::prelude::*;

use crate::big;
use crate::context::{ExactExponent, PSContext};
use crate::error::{Error, Result};
use crate::psprimes::exact_root;

/// Headroom kept free in the `i128` range.
const TOP_BITS: i32 = 124;
const MIN_F_BITS: i32 = 16;
const CHUNK: usize = 2048;

#[derive(Clone, Debug)]
pub(crate) struct Slot {
    pub values: Vec<u64>,
    pub negative: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    First,
    Count,
    All,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Outcome {
    pub count: u128,
    /// Values in slot order.
    pub tuples: Vec<Vec<u64>>,
    /// Candidates that needed big-float arithmetic.
    pub escalated: u64,
}

struct Half {
    slots: Vec<usize>,
    entries: Vec<(i128, i128, u64)>,
    width: i128,
}

enum Verdict {
    Inside,
    Outside,
}

/// `n^c` exactly when it is an integer.
fn exact_power(n: u64, c: ExactExponent) -> Option<u128> {
    if c.num < 0 || c.num > 64 {
        return None;
    }
    let r = if c.den == 1 { n } else { exact_root(n, c.den)? };
    let mut v: u128 = 1;
    for _ in 0..c.num {
        v = v.checked_mul(r as u128)?;
    }
    Some(v)
}

/// Enclosure `[lo, hi]` of `n^c` at precision `p`.
fn power_interval(n: u64, c: ExactExponent, p: usize) -> (BigFloat, BigFloat) {
    if let Some(v) = exact_power(n, c) {
        let b = BigFloat::from_u128(v, p.max(128));
        return (b.clone(), b);
    }
    big::widen(&big::pow_u64(n, c, p), p)
}

pub(crate) struct Search<'a> {
    pub slots: &'a [Slot],
    pub target: f64,
    pub eps: f64,
    pub exponent: ExactExponent,
    pub max_half: usize,
}

impl Search<'_> {
    fn validate(&self) -> Result<()> {
        if self.slots.is_empty() {
            return Err(Error::invalid("slots", "no coordinates"));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::invalid("eps", format!("{} is not > 0", self.eps)));
        }
        if !self.target.is_finite() {
            return Err(Error::invalid("target", "not finite"));
        }
        Ok(())
    }

    fn f_bits(&self) -> Result<i32> {
        let c = self.exponent.to_f64();
        let mut bound = self.target.abs() + self.eps + 1.0;
        for s in self.slots {
            let top = s.values.iter().copied().max().unwrap_or(0) as f64;
            bound += top.powf(c) * (1.0 + 1e-9) + 1.0;
        }
        let f = TOP_BITS - bound.log2().ceil() as i32;
        if f < MIN_F_BITS {
            return Err(Error::invalid("target", format!("sums near {bound:e} exceed the fixed-point range")));
        }
        Ok(f)
    }

    /// Greedy split into two halves of roughly equal enumeration size.
    fn split(&self) -> (Vec<usize>, Vec<usize>) {
        let mut order: Vec<usize> = (0..self.slots.len()).collect();
        order.sort_by(|&a, &b| self.slots[b].values.len().cmp(&self.slots[a].values.len()).then(a.cmp(&b)));
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let (mut la, mut lb) = (0.0f64, 0.0f64);
        for i in order {
            let l = (self.slots[i].values.len().max(1) as f64).ln();
            if la <= lb {
                a.push(i);
                la += l;
            } else {
                b.push(i);
                lb += l;
            }
        }
        a.sort_unstable();
        b.sort_unstable();
        (a, b)
    }

    fn half_size(&self, slots: &[usize]) -> f64 {
        slots.iter().map(|&i| self.slots[i].values.len() as f64).product()
    }

    fn enumerate(&self, slots: Vec<usize>, table: &[Vec<(i128, i128)>]) -> Half {
        let mut entries: Vec<(i128, i128, u64)> = vec![(0, 0, 0)];
        let mut radix: u64 = 1;
        for &s in &slots {
            let vals = &table[s];
            let neg = self.slots[s].negative;
            let mut next = Vec::with_capacity(entries.len() * vals.len());
            for &(lo, hi, code) in &entries {
                for (k, &(vl, vh)) in vals.iter().enumerate() {
                    let (dl, dh) = if neg { (-vh, -vl) } else { (vl, vh) };
                    next.push((lo + dl, hi + dh, code + k as u64 * radix));
                }
            }
            radix *= vals.len() as u64;
            entries = next;
        }
        let width = entries.iter().map(|e| e.1 - e.0).max().unwrap_or(0);
        Half { slots, entries, width }
    }

    fn decode(&self, half: &Half, code: u64, out: &mut [u64]) {
        let mut rest = code;
        for &s in &half.slots {
            let n = self.slots[s].values.len() as u64;
            out[s] = self.slots[s].values[(rest % n) as usize];
            rest /= n;
        }
    }

    /// Decides `|sum - target| < eps` for one tuple by interval arithmetic,
    /// doubling precision until the enclosure clears both boundaries.
    fn decide_big(&self, tuple: &[u64], start_bits: usize, max_bits: usize) -> Result<Verdict> {
        let mut p = start_bits.max(128);
        loop {
            let mut lo = BigFloat::from_u64(0, p);
            let mut hi = BigFloat::from_u64(0, p);
            for (s, &n) in self.slots.iter().zip(tuple) {
                let (a, b) = power_interval(n, self.exponent, p);
                if s.negative {
                    lo = lo.sub(&b, p, RoundingMode::Down);
                    hi = hi.sub(&a, p, RoundingMode::Up);
                } else {
                    lo = lo.add(&a, p, RoundingMode::Down);
                    hi = hi.add(&b, p, RoundingMode::Up);
                }
            }
            let t = big::from_f64(self.target, 64);
            let e = big::from_f64(self.eps, 64);
            let dlo = lo.sub(&t, p, RoundingMode::Down);
            let dhi = hi.sub(&t, p, RoundingMode::Up);
            let neg_e = e.neg();
            let le = |a: &BigFloat, b: &BigFloat| matches!(a.cmp(b), Some(k) if k <= 0);
            if big::is_below(&neg_e, &dlo) && big::is_below(&dhi, &e) {
                return Ok(Verdict::Inside);
            }
            if le(&dhi, &neg_e) || le(&e, &dlo) {
                return Ok(Verdict::Outside);
            }
            if p >= max_bits {
                return Err(Error::PrecisionExhausted {
                    what: "deciding a meet-in-the-middle boundary".into(),
                    bits: p,
                });
            }
            p = (2 * p).min(max_bits);
        }
    }

    pub(crate) fn run(&self, mode: Mode, ctx: &PSContext) -> Result<Outcome> {
        self.validate()?;
        let f = self.f_bits()?;
        let (sa, sb) = self.split();
        for half in [&sa, &sb] {
            let size = self.half_size(half);
            if size > self.max_half as f64 {
                return Err(Error::BudgetExceeded {
                    what: "meet-in-the-middle half",
                    needed: size,
                    limit: self.max_half as f64,
                });
            }
        }

        let p = ctx.precision_bits.max(128);
        let table: Vec<Vec<(i128, i128)>> = self
            .slots
            .par_iter()
            .map(|s| {
                s.values
                    .iter()
                    .map(|&n| {
                        let (a, b) = power_interval(n, self.exponent, p);
                        let lo = big::floor_i128(&big::scale2(&a, f)).expect("fits by f_bits");
                        let hi = big::ceil_i128(&big::scale2(&b, f)).expect("fits by f_bits");
                        (lo, hi)
                    })
                    .collect()
            })
            .collect();

        let a = self.enumerate(sa, &table);
        let mut b = self.enumerate(sb, &table);
        b.entries.sort_unstable_by(|x, y| x.0.cmp(&y.0).then(x.2.cmp(&y.2)));

        let big_p = p + 64;
        let t = big::from_f64(self.target, 64);
        let e = big::from_f64(self.eps, 64);
        let lower = big::scale2(&t.sub(&e, big_p + 2048, RoundingMode::None), f);
        let upper = big::scale2(&t.add(&e, big_p + 2048, RoundingMode::None), f);
        let floor_lo = big::floor_i128(&lower).expect("fits by f_bits");
        let ceil_lo = big::ceil_i128(&lower).expect("fits by f_bits");
        let floor_hi = big::floor_i128(&upper).expect("fits by f_bits");
        let ceil_hi = big::ceil_i128(&upper).expect("fits by f_bits");

        let nslots = self.slots.len();
        let scan = |chunk: &[(i128, i128, u64)], stop_at_first: bool| -> Result<Outcome> {
            let mut out = Outcome::default();
            let mut tuple = vec![0u64; nslots];
            for &(alo, ahi, acode) in chunk {
                let from = floor_lo - ahi - b.width;
                let start = b.entries.partition_point(|x| x.0 < from);
                for &(blo, bhi, bcode) in &b.entries[start..] {
                    let slo = alo + blo;
                    if slo >= ceil_hi {
                        break;
                    }
                    let shi = ahi + bhi;
                    if shi <= floor_lo {
                        continue;
                    }
                    let inside = if slo > ceil_lo && shi < floor_hi {
                        true
                    } else {
                        out.escalated += 1;
                        self.decode(&a, acode, &mut tuple);
                        self.decode(&b, bcode, &mut tuple);
                        matches!(self.decide_big(&tuple, 2 * p, ctx.max_precision_bits)?, Verdict::Inside)
                    };
                    if inside {
                        out.count += 1;
                        if mode != Mode::Count {
                            self.decode(&a, acode, &mut tuple);
                            self.decode(&b, bcode, &mut tuple);
                            out.tuples.push(tuple.clone());
                            if stop_at_first {
                                return Ok(out);
                            }
                        }
                    }
                }
            }
            Ok(out)
        };

        let chunks: Vec<&[(i128, i128, u64)]> = a.entries.chunks(CHUNK).collect();
        let mut total = Outcome::default();
        match mode {
            Mode::First => {
                // Batches keep the answer the first hit in enumeration order.
                let batch = rayon::current_num_threads().max(1) * 2;
                for group in chunks.chunks(batch) {
                    let parts: Vec<Outcome> = group.par_iter().map(|c| scan(c, true)).collect::<Result<_>>()?;
                    for part in parts {
                        total.escalated += part.escalated;
                        if total.tuples.is_empty() && !part.tuples.is_empty() {
                            total.tuples = part.tuples;
                            total.count = 1;
                        }
                    }
                    if !total.tuples.is_empty() {
                        break;
                    }
                }
            }
            _ => {
                let parts: Vec<Outcome> = chunks.par_iter().map(|c| scan(c, false)).collect::<Result<_>>()?;
                for part in parts {
                    total.count += part.count;
                    total.escalated += part.escalated;
                    total.tuples.extend(part.tuples);
                }
            }
        }

        // Re-check every reported tuple at four times the working precision.
        let check_bits = (4 * ctx.precision_bits).min(ctx.max_precision_bits).max(p);
        for tup in &total.tuples {
            if let Verdict::Outside = self.decide_big(tup, check_bits, ctx.max_precision_bits)? {
                return Err(Error::Inconsistent(format!("tuple {tup:?} failed high-precision re-verification")));
            }
        }
        Ok(total)
    }
}

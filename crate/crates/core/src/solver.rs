//! Solutions of `|p_1^c + ... + p_s^c - N| < eps` in primes of `N_gamma`,
//! `2 <= s <= 5`, and the sampled exceptional set for `s = 2`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circle::SolutionTuple;
use crate::context::PSContext;
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::mitm::{Mode, Search, Slot};
use crate::psprimes::ps_primes_in;

pub const DEFAULT_MAX_HALF: usize = 1 << 25;
pub const MIN_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    First,
    Count,
    All,
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchMode::First => "first",
            SearchMode::Count => "count",
            SearchMode::All => "all",
        })
    }
}

impl FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(SearchMode::First),
            "count" => Ok(SearchMode::Count),
            "all" => Ok(SearchMode::All),
            _ => Err(Error::UnknownId(s.to_string())),
        }
    }
}

/// Range parameter `X` for `s` variables: `(2N/3)^(1/c)` for `s = 2`,
/// `(N/2)^(1/c)` for `s = 3, 4` and `(2N/5)^(1/c)` for `s = 5`.
pub fn default_x(n: f64, s: usize, c: f64) -> f64 {
    let share = match s {
        2 => 2.0 / 3.0,
        3 | 4 => 0.5,
        _ => 2.0 / s as f64,
    };
    (share * n).powf(1.0 / c)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchTask {
    pub n: f64,
    pub s: usize,
    pub epsilon: f64,
    /// Primes satisfy `prime_floor < p <= prime_ceiling`.
    pub prime_floor: u64,
    pub prime_ceiling: u64,
    pub mode: SearchMode,
    pub max_half: usize,
}

impl SearchTask {
    /// Range `(X/2, X]` with `X = default_x(N, s, c)`.
    pub fn new(n: f64, s: usize, epsilon: f64, ctx: &PSContext) -> Self {
        let x = default_x(n, s, ctx.c);
        SearchTask {
            n,
            s,
            epsilon,
            prime_floor: (x / 2.0).floor() as u64,
            prime_ceiling: x.floor() as u64,
            mode: SearchMode::Count,
            max_half: DEFAULT_MAX_HALF,
        }
    }

    pub fn with_range(mut self, floor: u64, ceiling: u64) -> Self {
        self.prime_floor = floor;
        self.prime_ceiling = ceiling;
        self
    }

    pub fn with_mode(mut self, mode: SearchMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=5).contains(&self.s) {
            return Err(Error::invalid("s", format!("{} is not in [2, 5]", self.s)));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid("epsilon", format!("{} is not > 0", self.epsilon)));
        }
        if !(self.n > 0.0) || !self.n.is_finite() {
            return Err(Error::invalid("N", format!("{} is not > 0", self.n)));
        }
        if self.prime_ceiling <= self.prime_floor {
            return Err(Error::invalid(
                "range",
                format!("({}, {}] is empty", self.prime_floor, self.prime_ceiling),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub task: SearchTask,
    /// Ordered tuples; at most 1 in `first` mode.
    pub count: u128,
    pub solutions: Vec<SolutionTuple>,
    pub primes_in_range: usize,
    /// Candidates decided by big-float interval arithmetic.
    pub escalated: u64,
}

fn tuple_of(primes: Vec<u64>, n: f64, ctx: &PSContext) -> SolutionTuple {
    let cq = ctx.c_exact().to_dd();
    let sum = primes.iter().fold(Dd::ZERO, |a, &p| a + Dd::from_f64(p as f64).powd(cq));
    SolutionTuple {
        weight: primes.iter().map(|&p| (p as f64).ln()).product(),
        defect: sum.add_f64(-n).to_f64(),
        primes,
    }
}

pub fn find_solutions(task: &SearchTask, ctx: &PSContext) -> Result<SearchResult> {
    task.validate()?;
    let primes = ps_primes_in(task.prime_floor, task.prime_ceiling, ctx)?;
    let mut result = SearchResult {
        task: task.clone(),
        count: 0,
        solutions: Vec::new(),
        primes_in_range: primes.len(),
        escalated: 0,
    };
    if primes.is_empty() {
        return Ok(result);
    }
    let slots = vec![
        Slot {
            values: primes,
            negative: false,
        };
        task.s
    ];
    let search = Search {
        slots: &slots,
        target: task.n,
        eps: task.epsilon,
        exponent: ctx.c_exact(),
        max_half: task.max_half,
    };
    let mode = match task.mode {
        SearchMode::First => Mode::First,
        SearchMode::Count => Mode::Count,
        SearchMode::All => Mode::All,
    };
    let out = search.run(mode, ctx)?;
    result.count = out.count;
    result.escalated = out.escalated;
    result.solutions = out.tuples.into_iter().map(|t| tuple_of(t, task.n, ctx)).collect();
    Ok(result)
}

/// Sorted tuple -> number of ordered solutions with that multiset.
pub fn multiset_counts(solutions: &[SolutionTuple]) -> BTreeMap<Vec<u64>, u128> {
    let mut out = BTreeMap::new();
    for s in solutions {
        let mut key = s.primes.clone();
        key.sort_unstable();
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

/// Number of distinct orderings of a sorted multiset.
pub fn multinomial(sorted: &[u64]) -> u128 {
    let fact = |k: usize| (1..=k as u128).product::<u128>();
    let mut denom: u128 = 1;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        denom *= fact(j);
        i += j;
    }
    fact(sorted.len()) / denom
}

/// `eps` as a function of `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum EpsilonRule {
    /// `scale / log N`.
    LogInverse(f64),
    Fixed(f64),
}

impl EpsilonRule {
    pub fn eval(&self, n: f64) -> f64 {
        match *self {
            EpsilonRule::LogInverse(k) => k / n.ln(),
            EpsilonRule::Fixed(e) => e,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            EpsilonRule::LogInverse(k) => EpsilonRule::LogInverse(k * factor),
            EpsilonRule::Fixed(e) => EpsilonRule::Fixed(e * factor),
        }
    }
}

/// `N_i = Z/2 + (Z/2)(1 - frac(x_0 + i phi))` with `x_0` from a seeded
/// ChaCha stream and `phi` the golden-ratio conjugate.
pub fn exceptional_samples(z: f64, samples: usize, seed: u64) -> Vec<f64> {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let x0: f64 = ChaCha8Rng::seed_from_u64(seed).gen();
    (0..samples)
        .map(|i| {
            let u = (x0 + i as f64 * phi).fract();
            z / 2.0 + z / 2.0 * (1.0 - u)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleOutcome {
    pub n: f64,
    pub epsilon: f64,
    pub soluble: bool,
    /// `min |p_1^c + p_2^c - N|` over the window, in double precision.
    pub min_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    /// Bin is `[10^lo, 10^hi)` in `min_defect`; open ends at the extremes.
    pub lo: i32,
    pub hi: i32,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExceptionalScan {
    pub z: f64,
    pub x: f64,
    pub seed: u64,
    pub rule: EpsilonRule,
    pub primes_in_window: usize,
    pub insoluble_fraction: f64,
    pub evaluated: usize,
    pub outcomes: Vec<SampleOutcome>,
    /// `(N, error)` for samples that could not be decided.
    pub failures: Vec<(f64, String)>,
    pub histogram: Vec<HistogramBin>,
}

const HIST_LO: i32 = -6;
const HIST_HI: i32 = 3;

fn histogram(values: impl Iterator<Item = f64>) -> Vec<HistogramBin> {
    let mut bins: Vec<HistogramBin> = (HIST_LO - 1..HIST_HI)
        .map(|lo| HistogramBin { lo, hi: lo + 1, count: 0 })
        .collect();
    for v in values {
        let d = if v > 0.0 { v.log10().floor() as i32 } else { i32::MIN };
        let idx = (d.clamp(HIST_LO - 1, HIST_HI - 1) - (HIST_LO - 1)) as usize;
        bins[idx].count += 1;
    }
    bins
}

fn min_pair_defect(powers: &[f64], n: f64) -> f64 {
    let (mut i, mut j) = (0usize, powers.len() - 1);
    let mut best = f64::INFINITY;
    loop {
        let d = powers[i] + powers[j] - n;
        best = best.min(d.abs());
        if d < 0.0 {
            if i == j {
                break;
            }
            i += 1;
        } else {
            if j == i {
                break;
            }
            j -= 1;
        }
    }
    best
}

pub fn exceptional_scan(z: f64, samples: usize, rule: EpsilonRule, ctx: &PSContext, seed: u64) -> Result<ExceptionalScan> {
    if samples < MIN_SAMPLES {
        return Err(Error::invalid("samples", format!("{samples} < {MIN_SAMPLES}")));
    }
    if !(z > 4.0) || !z.is_finite() {
        return Err(Error::invalid("Z", format!("{z} is not > 4")));
    }
    let x = default_x(z, 2, ctx.c);
    let (floor, ceiling) = ((x / 2.0).floor() as u64, x.floor() as u64);
    let primes = ps_primes_in(floor, ceiling, ctx)?;
    let cq = ctx.c_exact().to_dd();
    let powers: Vec<f64> = primes.iter().map(|&p| Dd::from_f64(p as f64).powd(cq).to_f64()).collect();
    let ns = exceptional_samples(z, samples, seed);
    let results: Vec<std::result::Result<SampleOutcome, (f64, String)>> = ns
        .par_iter()
        .map(|&n| {
            let eps = rule.eval(n);
            let task = SearchTask::new(n, 2, eps, ctx)
                .with_range(floor, ceiling)
                .with_mode(SearchMode::First);
            match find_solutions(&task, ctx) {
                Ok(r) => Ok(SampleOutcome {
                    n,
                    epsilon: eps,
                    soluble: r.count > 0,
                    min_defect: if powers.is_empty() { f64::INFINITY } else { min_pair_defect(&powers, n) },
                }),
                Err(e) => Err((n, e.to_string())),
            }
        })
        .collect();
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(f) => failures.push(f),
        }
    }
    let insoluble = outcomes.iter().filter(|o| !o.soluble).count();
    let evaluated = outcomes.len();
    Ok(ExceptionalScan {
        z,
        x,
        seed,
        rule,
        primes_in_window: primes.len(),
        insoluble_fraction: if evaluated == 0 { f64::NAN } else { insoluble as f64 / evaluated as f64 },
        evaluated,
        histogram: histogram(outcomes.iter().map(|o| o.min_defect)),
        outcomes,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_epsilon_accepts_any_triple() {
        let ctx = PSContext::new(0.9, 1.5).unwrap();
        let task = SearchTask::new(30.0, 3, 40.0, &ctx).with_range(2, 30).with_mode(SearchMode::First);
        let r = find_solutions(&task, &ctx).unwrap();
        assert_eq!(r.solutions.len(), 1);
        assert!(r.solutions[0].defect.abs() < 40.0);
    }

    #[test]
    fn no_ps_primes_at_one_half() {
        let ctx = PSContext::new(0.5, 1.5).unwrap();
        for n in [100.0, 5e3, 1e5] {
            let r = find_solutions(&SearchTask::new(n, 2, 0.1, &ctx), &ctx).unwrap();
            assert_eq!((r.count, r.primes_in_range), (0, 0));
        }
    }

    #[test]
    fn s_out_of_range() {
        let ctx = PSContext::new(0.9, 1.5).unwrap();
        for s in [1, 6, 7] {
            let t = SearchTask::new(1e3, s, 0.1, &ctx);
            assert!(matches!(find_solutions(&t, &ctx), Err(Error::InvalidParameter { .. })));
        }
    }

    #[test]
    fn multinomials() {
        assert_eq!(multinomial(&[2, 3, 5]), 6);
        assert_eq!(multinomial(&[3, 3, 5]), 3);
        assert_eq!(multinomial(&[7, 7, 7, 7]), 1);
        assert_eq!(multinomial(&[1, 1, 2, 2, 3]), 30);
    }

    #[test]
    fn samples_in_half_open_interval() {
        let ns = exceptional_samples(1e4, 1000, 7);
        assert!(ns.iter().all(|&n| n > 5e3 && n <= 1e4));
        assert_eq!(ns, exceptional_samples(1e4, 1000, 7));
        assert_ne!(ns, exceptional_samples(1e4, 1000, 8));
    }

    #[test]
    fn closest_pair() {
        let p = [1.0, 4.0, 9.0, 16.0];
        assert_eq!(min_pair_defect(&p, 13.0), 0.0);
        assert_eq!(min_pair_defect(&p, 11.5), 1.5);
        assert_eq!(min_pair_defect(&p, 100.0), 68.0);
    }

    #[test]
    fn histogram_edges() {
        let h = histogram([1e-9, 0.5, 5.0, 1e6].into_iter());
        assert_eq!(h.first().unwrap().count, 1);
        assert_eq!(h.last().unwrap().count, 1);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 4);
    }
}

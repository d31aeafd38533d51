//! The Davenport-Heilbronn pipeline at desk scale.
//!
//! `R(N) = sum prod(log p_j) K_tau(p_1^c + ... + p_s^c - N)` with
//! `p_1..p_{2u+1}` from the window at `X_0` and one pair from each window at
//! `X_1..X_t`. It is computed twice: by sorted partial sums, and as
//! `int F_1(theta) e(-N theta) K^_tau(theta) dtheta`.
//!
//! The Fourier side runs on the trapezoid grid `h = 1/(2 Lambda)`, where
//! `Lambda` bounds `|sum p^c - N| + tau` over the whole box. By Poisson
//! summation the aliases of `K_tau`, which is supported in `(-tau, tau)`, then
//! miss every tuple. The only error left is the truncation at `Theta`.

mod grid;

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::context::PSContext;
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::expsums::{eval_sum, eval_v, PhaseSpec, SumKind, VRule, DEFAULT_MAX_PANELS};
use crate::kernel::{SmoothKernel, HAT_T_MAX};
use crate::mitm::{Mode, Search, Slot};
use crate::psprimes::build_window;
use crate::reduce::{tree_sum, Neumaier};
use grid::{sweep, Factor, GridSpec};

/// Relative gap between the `h` and `h/2` rules that counts as failure.
pub const CONVERGENCE_TOL: f64 = 1e-3;

/// Knobs with conservative defaults; none of them truncates silently.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircleOptions {
    /// `tau = tau_scale / log N`.
    pub tau_scale: f64,
    /// Smallest admissible `X_j`.
    pub min_range: f64,
    /// Spacing is `1/(oversample * Lambda)`; 1 is the aliasing limit.
    pub oversample: f64,
    /// Truncation tail of `R` relative to the expected main term.
    pub tail_tol: f64,
    /// Truncation tail of the main term relative to `Xi`.
    pub main_tail_tol: f64,
    pub max_grid_points: u64,
    /// Entries per half in the sorted partial-sum lists.
    pub max_half: usize,
    pub max_panels: usize,
}

impl Default for CircleOptions {
    fn default() -> Self {
        CircleOptions {
            tau_scale: 1.0,
            min_range: 4.0,
            oversample: 2.0,
            tail_tol: 1e-3,
            main_tail_tol: 1e-8,
            max_grid_points: 1 << 32,
            max_half: 1 << 25,
            max_panels: DEFAULT_MAX_PANELS,
        }
    }
}

/// A named small configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub gamma: f64,
    pub c: f64,
    pub t: usize,
    pub u: usize,
    pub n: f64,
    pub delta: f64,
}

pub const PRESETS: [Preset; 3] = [
    Preset {
        name: "desk",
        gamma: 0.9,
        c: 1.5,
        t: 2,
        u: 1,
        n: 1e5,
        delta: 0.05,
    },
    Preset {
        name: "desk-small",
        gamma: 0.9,
        c: 1.5,
        t: 2,
        u: 1,
        n: 3e4,
        delta: 0.05,
    },
    Preset {
        name: "desk-large",
        gamma: 0.9,
        c: 1.5,
        t: 2,
        u: 1,
        n: 1e6,
        delta: 0.05,
    },
];

pub fn preset(name: &str) -> Result<Preset> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .copied()
        .ok_or_else(|| Error::UnknownId(name.to_string()))
}

impl Preset {
    pub fn context(&self) -> Result<PSContext> {
        PSContext::new(self.gamma, self.c)
    }

    pub fn with_n(mut self, n: f64) -> Self {
        self.n = n;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircleConfig {
    pub n: f64,
    pub gamma: f64,
    pub c: f64,
    pub depth_t: usize,
    pub depth_u: usize,
    pub s: usize,
    pub tau: f64,
    pub delta: f64,
    pub x: f64,
    /// `X_0, X_1, ..., X_t`.
    pub ranges: Vec<f64>,
    /// How many coordinates each range carries: `2u+1, 2, ..., 2`.
    pub multiplicities: Vec<u32>,
    pub eta: f64,
    pub xi: f64,
    /// `X^(gamma - c - delta)`.
    pub major_edge: f64,
    /// `X^delta`.
    pub minor_edge: f64,
    /// `Lambda`, bounding `|sum p^c - N| + tau` over the box.
    pub frequency_span: f64,
    pub quad_spacing: f64,
    pub theta_truncation: f64,
    pub hat_tail_order: usize,
    /// `F_1(0)`, which bounds `|F_1|` everywhere.
    pub trivial_bound: f64,
    /// Bound on `int_{|theta| > Theta} |F_1| K^_tau`.
    pub tail_bound: f64,
    /// The main term from `V`; `Theta` keeps the tail below `tail_tol` of it.
    pub expected_main: f64,
    pub options: CircleOptions,
}

pub fn build_config(
    n: f64,
    ctx: &PSContext,
    depth_t: usize,
    depth_u: usize,
    delta: f64,
    kernel: &SmoothKernel,
) -> Result<CircleConfig> {
    build_config_with(n, ctx, depth_t, depth_u, delta, kernel, &CircleOptions::default())
}

pub fn build_config_with(
    n: f64,
    ctx: &PSContext,
    depth_t: usize,
    depth_u: usize,
    delta: f64,
    kernel: &SmoothKernel,
    opts: &CircleOptions,
) -> Result<CircleConfig> {
    if !(n > 3.0) || !n.is_finite() {
        return Err(Error::invalid("N", format!("{n} is not > 3")));
    }
    if depth_t < 1 || depth_u < 1 {
        return Err(Error::invalid("t, u", "both must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", format!("{delta} is not in (0, 1)")));
    }
    if !(opts.tau_scale > 0.0) || !(opts.oversample >= 1.0) || !(opts.tail_tol > 0.0) || !(opts.main_tail_tol > 0.0) {
        return Err(Error::invalid("options", "tau_scale, tail tolerances > 0 and oversample >= 1 required"));
    }
    let (g, c) = (ctx.gamma, ctx.c);
    let tau = opts.tau_scale / n.ln();
    let x = n.powf(1.0 / c);
    let mut ranges = vec![x / (3.0 * depth_u as f64), x];
    for _ in 2..=depth_t {
        let prev = *ranges.last().unwrap();
        ranges.push(0.5 * prev.powf(1.0 - 1.0 / c));
    }
    for (index, &value) in ranges.iter().enumerate() {
        if value < opts.min_range {
            return Err(Error::RangeCollapse {
                index,
                value,
                min: opts.min_range,
            });
        }
    }
    let mut multiplicities = vec![2 * depth_u as u32 + 1];
    multiplicities.extend(std::iter::repeat(2).take(depth_t));
    let s = 2 * depth_t + 2 * depth_u + 1;

    let log_xi = tau.ln() + g * (2.0 * ranges[1..].iter().map(|v| v.ln()).sum::<f64>() + (2 * depth_u + 1) as f64 * x.ln()) - c * x.ln();
    let xi = log_xi.exp();

    let (lo, hi) = ranges.iter().zip(&multiplicities).fold((-n, -n), |(lo, hi), (&r, &k)| {
        (lo + k as f64 * (r / 2.0).powf(c), hi + k as f64 * r.powf(c))
    });
    let frequency_span = lo.abs().max(hi.abs()) + tau;
    let quad_spacing = 1.0 / (opts.oversample * frequency_span);

    let mut trivial_bound = 1.0;
    for (&r, &k) in ranges.iter().zip(&multiplicities) {
        let total = if r >= 4.0 {
            build_window(r, ctx)?.prime_weight_total()
        } else {
            r.powf(g) * r.max(std::f64::consts::E).ln()
        };
        trivial_bound *= total.powi(k as i32);
    }

    let j = ((c + 1.0) / delta).ceil() as usize;
    let mut cfg = CircleConfig {
        n,
        gamma: g,
        c,
        depth_t,
        depth_u,
        s,
        tau,
        delta,
        x,
        ranges,
        multiplicities,
        eta: x.ln().powf(-0.75),
        xi,
        major_edge: x.powf(g - c - delta),
        minor_edge: x.powf(delta),
        frequency_span,
        quad_spacing,
        theta_truncation: 0.0,
        hat_tail_order: j,
        trivial_bound,
        tail_bound: 0.0,
        expected_main: 0.0,
        options: opts.clone(),
    };
    // The tail is measured against the main term from `V`, which can sit far
    // below `Xi` when `N` is near a corner of the box.
    cfg.expected_main = main_term_and_xi(&cfg, ctx, kernel)?.main;
    let target = opts.tail_tol * cfg.expected_main.abs().min(xi);
    let (t_cut, tail) = truncation_point(kernel, j, 2.0 * trivial_bound, target);
    cfg.theta_truncation = t_cut / tau;
    cfg.tail_bound = tail;
    Ok(cfg)
}

pub fn build_preset(p: &Preset, kernel: &SmoothKernel, opts: &CircleOptions) -> Result<(CircleConfig, PSContext)> {
    let ctx = p.context()?;
    let cfg = build_config_with(p.n, &ctx, p.t, p.u, p.delta, kernel, opts)?;
    Ok((cfg, ctx))
}

/// Smallest `T` on a `1/64` grid with `scale * int_T^inf K^ <= target`,
/// and the bound reached there.
fn truncation_point(kernel: &SmoothKernel, j: usize, scale: f64, target: f64) -> (f64, f64) {
    let ok = |t: f64| scale * kernel.hat_tail(t, j) <= target;
    if scale == 0.0 || ok(0.0) {
        return (1.0, scale * kernel.hat_tail(1.0, j));
    }
    if !ok(HAT_T_MAX) {
        return (HAT_T_MAX, scale * kernel.hat_tail(HAT_T_MAX, j));
    }
    let step = 1.0 / 64.0;
    let (mut a, mut b) = (0usize, (HAT_T_MAX / step) as usize);
    while b - a > 1 {
        let m = (a + b) / 2;
        if ok(m as f64 * step) {
            b = m;
        } else {
            a = m;
        }
    }
    let t = b as f64 * step;
    (t, scale * kernel.hat_tail(t, j))
}

impl CircleConfig {
    fn check_ctx(&self, ctx: &PSContext) -> Result<()> {
        if ctx.gamma != self.gamma || ctx.c != self.c {
            return Err(Error::invalid(
                "context",
                format!("exponents ({}, {}) differ from the configuration ({}, {})", ctx.gamma, ctx.c, self.gamma, self.c),
            ));
        }
        Ok(())
    }

    /// Primes with their `c`-th powers, one list per range.
    fn windows(&self, ctx: &PSContext) -> Result<Vec<(Vec<u64>, Vec<Dd>, Vec<f64>)>> {
        let cq = ctx.c_exact().to_dd();
        self.ranges
            .iter()
            .map(|&r| {
                let w = build_window(r, ctx)?;
                let pw = w.primes.iter().map(|&p| Dd::from_f64(p as f64).powd(cq)).collect();
                Ok((w.primes, pw, w.log_weights))
            })
            .collect()
    }

    fn grid_spec(&self, theta_max: f64) -> Result<GridSpec> {
        let h = self.quad_spacing / 2.0;
        let k_max = 2 * (theta_max / (2.0 * h)).ceil() as i64;
        let points = 2 * k_max as u64 + 1;
        if points > self.options.max_grid_points {
            return Err(Error::BudgetExceeded {
                what: "theta grid points",
                needed: points as f64,
                limit: self.options.max_grid_points as f64,
            });
        }
        Ok(GridSpec {
            h,
            k_max,
            tau: self.tau,
            major: self.major_edge,
            minor: self.minor_edge,
        })
    }

    fn shift_factor(&self) -> Factor {
        Factor {
            freqs: vec![Dd::from_f64(-self.n)],
            weights: vec![1.0],
            power: 1,
        }
    }
}

/// A tuple `p_1..p_s` in range order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionTuple {
    pub primes: Vec<u64>,
    /// `prod log p_j`.
    pub weight: f64,
    /// `sum p_j^c - N`.
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectReport {
    pub value: f64,
    /// Tuples with `|defect| < tau`.
    pub near_tuples: u64,
    pub raw_tuples: f64,
    pub max_log_weight: f64,
}

struct Partial {
    sum: f64,
    weight: f64,
}

fn enumerate_half(coords: &[usize], wins: &[(Vec<u64>, Vec<Dd>, Vec<f64>)]) -> Vec<Partial> {
    let mut acc = vec![(Dd::ZERO, 1.0)];
    for &w in coords {
        let (_, pw, lw) = &wins[w];
        let mut next = Vec::with_capacity(acc.len() * pw.len());
        for &(s, wt) in &acc {
            for (p, l) in pw.iter().zip(lw) {
                next.push((s + *p, wt * l));
            }
        }
        acc = next;
    }
    acc.into_iter()
        .map(|(s, weight)| Partial { sum: s.to_f64(), weight })
        .collect()
}

/// `R(N)` from sorted partial sums of the two coordinate halves.
pub fn r_direct(config: &CircleConfig, ctx: &PSContext, kernel: &SmoothKernel) -> Result<DirectReport> {
    config.check_ctx(ctx)?;
    let wins = config.windows(ctx)?;
    let mut coords: Vec<usize> = Vec::with_capacity(config.s);
    for (i, &k) in config.multiplicities.iter().enumerate() {
        coords.extend(std::iter::repeat(i).take(k as usize));
    }
    let size = |w: usize| wins[w].0.len().max(1) as f64;
    let raw: f64 = coords.iter().map(|&w| wins[w].0.len() as f64).product();
    let max_log_weight = wins
        .iter()
        .flat_map(|w| w.2.iter().copied())
        .fold(0.0, f64::max);

    // Balance the halves by enumeration size.
    let mut order = coords.clone();
    order.sort_by(|a, b| size(*b).total_cmp(&size(*a)));
    let (mut ha, mut hb) = (Vec::new(), Vec::new());
    let (mut la, mut lb) = (0.0, 0.0);
    for w in order {
        if la <= lb {
            la += size(w).ln();
            ha.push(w);
        } else {
            lb += size(w).ln();
            hb.push(w);
        }
    }
    for h in [&ha, &hb] {
        let n: f64 = h.iter().map(|&w| wins[w].0.len() as f64).product();
        if n > config.options.max_half as f64 {
            return Err(Error::BudgetExceeded {
                what: "partial-sum list (raw tuples in `needed`)",
                needed: raw,
                limit: config.options.max_half as f64,
            });
        }
    }
    let a = enumerate_half(&ha, &wins);
    let mut b = enumerate_half(&hb, &wins);
    b.sort_by(|x, y| x.sum.total_cmp(&y.sum));

    let (n, tau) = (config.n, config.tau);
    let parts: Vec<(f64, u64)> = a
        .par_chunks(4096)
        .map(|chunk| {
            let mut acc = Neumaier::default();
            let mut near = 0u64;
            for pa in chunk {
                let from = b.partition_point(|pb| pb.sum <= n - tau - pa.sum);
                for pb in &b[from..] {
                    let d = pa.sum + pb.sum - n;
                    if d >= tau {
                        break;
                    }
                    near += 1;
                    acc.add(pa.weight * pb.weight * kernel.k_tau(d, tau));
                }
            }
            (acc.value(), near)
        })
        .collect();
    let values: Vec<f64> = parts.iter().map(|p| p.0).collect();
    Ok(DirectReport {
        value: tree_sum(&values, 0.0),
        near_tuples: parts.iter().map(|p| p.1).sum(),
        raw_tuples: raw,
        max_log_weight,
    })
}

/// Partial integrals over the three regions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionBreakdown {
    /// `int |F_1| K^_tau` over `Theta >= |theta| > X^delta`.
    pub trivial: f64,
    /// `int |F_1| K^_tau` over the minor arcs.
    pub minor: f64,
    /// `Re int F_1 e(-N theta) K^_tau` over the major arc.
    pub major: f64,
    pub trivial_signed: f64,
    pub minor_signed: f64,
    pub major_abs: f64,
    /// `trivial_signed + minor_signed + major`.
    pub reconciled: f64,
    /// Bound on the part beyond `|theta| = Theta`.
    pub tail_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegralReport {
    pub value: f64,
    pub imag: f64,
    /// Same sum on the grid of twice the spacing.
    pub coarse: f64,
    pub rel_change: f64,
    /// Spacing of the reported (fine) rule.
    pub spacing: f64,
    pub grid_points: u64,
    pub theta_truncation: f64,
    pub regions: RegionBreakdown,
}

fn relative_change(fine: f64, coarse: f64) -> f64 {
    if fine == 0.0 && coarse == 0.0 {
        0.0
    } else {
        (fine - coarse).abs() / fine.abs()
    }
}

fn converged(fine: f64, coarse: f64, what: &'static str) -> Result<f64> {
    let rel = relative_change(fine, coarse);
    if !(rel <= CONVERGENCE_TOL) {
        return Err(Error::NonConvergence {
            what,
            achieved: rel,
            target: CONVERGENCE_TOL,
        });
    }
    Ok(rel)
}

/// `R(N)` as the truncated Fourier integral; fails when halving the spacing
/// moves the value by more than `CONVERGENCE_TOL` relative.
pub fn r_integral(config: &CircleConfig, ctx: &PSContext, kernel: &SmoothKernel) -> Result<IntegralReport> {
    let rep = fourier_integral(config, ctx, kernel)?;
    converged(rep.value, rep.coarse, "Fourier integral for R(N)")?;
    Ok(rep)
}

/// The same integral without the convergence verdict, for diagnostics.
pub fn fourier_integral(config: &CircleConfig, ctx: &PSContext, kernel: &SmoothKernel) -> Result<IntegralReport> {
    config.check_ctx(ctx)?;
    let wins = config.windows(ctx)?;
    let spec = config.grid_spec(config.theta_truncation)?;
    let mut factors: Vec<Factor> = wins
        .iter()
        .zip(&config.multiplicities)
        .map(|((_, pw, lw), &k)| Factor {
            freqs: pw.clone(),
            weights: lw.clone(),
            power: k,
        })
        .collect();
    factors.push(config.shift_factor());
    let sums = sweep(&factors, &spec, kernel);
    let h = spec.h;
    let total = sums.total() * h;
    let coarse = sums.coarse.re * 2.0 * h;
    let rel_change = relative_change(total.re, coarse);
    let regions = RegionBreakdown {
        trivial: sums.abs[0] * h,
        minor: sums.abs[1] * h,
        major: sums.signed[2].re * h,
        trivial_signed: sums.signed[0].re * h,
        minor_signed: sums.signed[1].re * h,
        major_abs: sums.abs[2] * h,
        reconciled: (sums.signed[0].re + sums.signed[1].re + sums.signed[2].re) * h,
        tail_bound: config.tail_bound,
    };
    Ok(IntegralReport {
        value: total.re,
        imag: total.im,
        coarse,
        rel_change,
        spacing: h,
        grid_points: 2 * spec.k_max as u64 + 1,
        theta_truncation: config.theta_truncation,
        regions,
    })
}

pub fn region_breakdown(config: &CircleConfig, ctx: &PSContext, kernel: &SmoothKernel) -> Result<RegionBreakdown> {
    Ok(r_integral(config, ctx, kernel)?.regions)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MainTerm {
    pub main: f64,
    pub imag: f64,
    pub xi: f64,
    pub ratio: f64,
    pub theta_cut: f64,
    pub spacing: f64,
    pub grid_points: u64,
    pub rel_change: f64,
}

/// `int_Theta^inf prod_j min(V_j(0), a_j/theta)^k_j dtheta` for the bound
/// `|V(theta; X)| <= min(V(0; X), sqrt2 (gamma/c) (X/2)^(gamma-c) / (pi |theta|))`.
fn v_product_tail(theta: f64, caps: &[(f64, f64, u32)]) -> f64 {
    // Breakpoints where a factor switches from its cap to the decay.
    let mut breaks: Vec<f64> = caps.iter().map(|&(v0, a, _)| a / v0).filter(|&b| b > theta).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.push(f64::INFINITY);
    let mut lo = theta;
    let mut total = 0.0;
    for hi in breaks {
        let mid = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo };
        // On (lo, hi) the bound is A theta^-m.
        let (mut log_a, mut m) = (0.0, 0.0);
        for &(v0, a, k) in caps {
            if a / v0 < mid {
                log_a += k as f64 * a.ln();
                m += k as f64;
            } else {
                log_a += k as f64 * v0.ln();
            }
        }
        let piece = if m == 1.0 {
            log_a.exp() * (hi / lo).ln()
        } else {
            let f = |t: f64| if t.is_finite() { t.powf(1.0 - m) } else { 0.0 };
            log_a.exp() * (f(lo) - f(hi)) / (m - 1.0)
        };
        total += piece;
        lo = hi;
    }
    total
}

/// `main = int F*(theta) e(-N theta) K^_tau dtheta` with `F*` built from `V`,
/// and `Xi`.
pub fn main_term_and_xi(config: &CircleConfig, ctx: &PSContext, kernel: &SmoothKernel) -> Result<MainTerm> {
    config.check_ctx(ctx)?;
    let (g, c) = (ctx.gamma, ctx.c);
    let caps: Vec<(f64, f64, u32)> = config
        .ranges
        .iter()
        .zip(&config.multiplicities)
        .map(|(&r, &k)| {
            let v0 = r.powf(g) - (r / 2.0).powf(g);
            let a = SQRT_2 * (g / c) * (r / 2.0).powf(g - c) / PI;
            (v0, a, k)
        })
        .collect();
    let scale = 2.0 * config.tau * kernel.hat_at_zero();
    let target = config.options.main_tail_tol * config.xi;
    let ok = |th: f64| scale * v_product_tail(th, &caps) <= target;
    let mut hi = config.quad_spacing;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NonConvergence {
                what: "main-term truncation",
                achieved: scale * v_product_tail(hi, &caps) / config.xi,
                target: config.options.main_tail_tol,
            });
        }
    }
    let mut lo = hi / 2.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta_cut = hi;

    let mut factors = Vec::with_capacity(config.ranges.len() + 1);
    for (&r, &k) in config.ranges.iter().zip(&config.multiplicities) {
        let rule = VRule::new(r, ctx, theta_cut, config.options.max_panels)?;
        factors.push(Factor {
            freqs: rule.nodes().iter().map(|&v| Dd::from_f64(v)).collect(),
            weights: rule.weights().to_vec(),
            power: k,
        });
    }
    factors.push(config.shift_factor());
    let mut spec = config.grid_spec(theta_cut)?;
    spec.major = f64::INFINITY;
    let sums = sweep(&factors, &spec, kernel);
    let total = sums.total() * spec.h;
    let coarse = sums.coarse.re * 2.0 * spec.h;
    let rel_change = converged(total.re, coarse, "main-term integral")?;
    Ok(MainTerm {
        main: total.re,
        imag: total.im,
        xi: config.xi,
        ratio: total.re / config.xi,
        theta_cut,
        spacing: spec.h,
        grid_points: 2 * spec.k_max as u64 + 1,
        rel_change,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagonalCount {
    pub diagonal: u128,
    pub offdiagonal: u128,
    /// The bound `4 tau`.
    pub bound: f64,
}

/// Ordered solutions of `|x_1^c - x_2^c + ... - x_{2t}^c| < 4 tau` with
/// `x_{2j-1}, x_{2j}` in the members of the window at `X_j`, `j >= 1`.
pub fn diagonal_count(config: &CircleConfig, ctx: &PSContext) -> Result<DiagonalCount> {
    config.check_ctx(ctx)?;
    let mut slots = Vec::new();
    let mut diagonal: u128 = 1;
    for &r in &config.ranges[1..] {
        let w = build_window(r, ctx)?;
        diagonal *= w.members.len() as u128;
        slots.push(Slot {
            values: w.members.clone(),
            negative: false,
        });
        slots.push(Slot {
            values: w.members,
            negative: true,
        });
    }
    let bound = 4.0 * config.tau;
    let search = Search {
        slots: &slots,
        target: 0.0,
        eps: bound,
        exponent: ctx.c_exact(),
        max_half: config.options.max_half,
    };
    let total = search.run(Mode::Count, ctx)?.count;
    if total < diagonal {
        return Err(Error::Inconsistent(format!("{total} solutions but {diagonal} diagonal tuples")));
    }
    Ok(DiagonalCount {
        diagonal,
        offdiagonal: total - diagonal,
        bound,
    })
}

/// `max |S - V|` over the major arc for one range.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MajorArcGap {
    pub x: f64,
    pub max_gap: f64,
    /// `X^gamma`.
    pub ceiling: f64,
    /// `max_gap / X^(gamma - 2 eta)`.
    pub scaled: f64,
}

pub fn major_arc_gap(config: &CircleConfig, ctx: &PSContext, samples: usize) -> Result<Vec<MajorArcGap>> {
    config.check_ctx(ctx)?;
    let samples = samples.max(2);
    config
        .ranges
        .iter()
        .map(|&r| {
            let w = build_window(r, ctx)?;
            let gaps: Vec<f64> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let th = config.major_edge * i as f64 / (samples - 1) as f64;
                    let s = eval_sum(SumKind::S, &PhaseSpec::new(th, ctx), &w)?;
                    let v = eval_v(th, r, ctx)?;
                    Ok((s - v).norm())
                })
                .collect::<Result<_>>()?;
            let max_gap = gaps.iter().copied().fold(0.0, f64::max);
            Ok(MajorArcGap {
                x: r,
                max_gap,
                ceiling: r.powf(ctx.gamma),
                scaled: max_gap / r.powf(ctx.gamma - 2.0 * config.eta),
            })
        })
        .collect()
}

/// `max |V(theta; X)| |theta| X^(c - gamma)` over the given frequencies.
pub fn v_decay_constant(x: f64, ctx: &PSContext, thetas: &[f64]) -> Result<f64> {
    let scale = x.powf(ctx.c - ctx.gamma);
    let vals: Vec<f64> = thetas
        .par_iter()
        .map(|&th| Ok(eval_v(th, x, ctx)?.norm() * th.abs() * scale))
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// `|S(theta; X)| / S(0; X)` sampled over the minor arcs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinorArcProfile {
    pub x: f64,
    pub samples: usize,
    pub max_ratio: f64,
    pub rms_ratio: f64,
}

/// Samples `theta` on `[X^(gamma-c-delta), X^delta]` at the golden-ratio
/// sequence, log-uniformly.
pub fn minor_arc_profile(x: f64, ctx: &PSContext, delta: f64, samples: usize) -> Result<MinorArcProfile> {
    let w = build_window(x, ctx)?;
    let s0 = w.prime_weight_total();
    let (lo, hi) = ((ctx.gamma - ctx.c - delta) * x.ln(), delta * x.ln());
    if !(lo < hi) || s0 == 0.0 {
        return Err(Error::invalid("X", "empty minor arcs or no primes in the window"));
    }
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let ratios: Vec<f64> = (1..=samples)
        .into_par_iter()
        .map(|i| {
            let u = (i as f64 * golden).fract();
            let th = (lo + (hi - lo) * u).exp();
            Ok(eval_sum(SumKind::S, &PhaseSpec::new(th, ctx), &w)?.norm() / s0)
        })
        .collect::<Result<_>>()?;
    let sq: Vec<f64> = ratios.iter().map(|r| r * r).collect();
    Ok(MinorArcProfile {
        x,
        samples,
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        rms_ratio: (tree_sum(&sq, 0.0) / samples as f64).sqrt(),
    })
}

/// `F_1(theta)` and `F*(theta)` at one point, for spot checks.
pub fn integrands_at(config: &CircleConfig, ctx: &PSContext, theta: f64) -> Result<(Complex64, Complex64)> {
    config.check_ctx(ctx)?;
    let mut f1 = Complex64::new(1.0, 0.0);
    let mut fs = Complex64::new(1.0, 0.0);
    for (&r, &k) in config.ranges.iter().zip(&config.multiplicities) {
        let w = build_window(r, ctx)?;
        f1 *= eval_sum(SumKind::S, &PhaseSpec::new(theta, ctx), &w)?.powu(k);
        fs *= VRule::new(r, ctx, theta.abs(), config.options.max_panels)?.eval(theta).powu(k);
    }
    Ok((f1, fs))
}

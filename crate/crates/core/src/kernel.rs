//! The smooth kernel `K = Kt * Kt` (self-convolution) and its transform.
//!
//! `Kt` is even, equal to 1 on `|x| <= 1/4`, 0 on `|x| >= 1/2`, and follows the
//! smooth step `s(t) = f(t) / (f(t) + f(1 - t))`, `f(t) = exp(-a / t)`, across
//! the transition bands. Hence `K` is supported on `[-1, 1]`,
//! `K >= 1/4` on `|x| <= 1/4`, and `K^(t) = Kt^(t)^2 >= 0`.
//!
//! Transform convention: `K^(t) = int K(x) e(-t x) dx`, so the scaled kernel
//! `K_tau(x) = K(x / tau)` has transform `tau K^(tau theta)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::gl16;
use crate::reduce::Neumaier;

pub const DEFAULT_SHARPNESS: f64 = 1.0;
pub const DEFAULT_GRID_POINTS: usize = 16_385;
/// Largest tabulated frequency; `K^` is below `1e-24` beyond it.
pub const HAT_T_MAX: f64 = 256.0;
pub const HAT_STEP: f64 = 1.0 / 64.0;
pub const DEFAULT_TAIL_ORDER: usize = 8;
const SANDWICH_TOL: f64 = 1e-10;
/// Sub-panels per smooth piece in the convolution.
const CONV_SUBPANELS: usize = 6;

#[inline]
fn smooth_step(t: f64, a: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let g = a / t - a / (1.0 - t);
        1.0 / (1.0 + g.exp())
    }
}

#[inline]
fn smooth_step_deriv(t: f64, a: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        let g = a / t - a / (1.0 - t);
        let gp = a / (t * t) + a / ((1.0 - t) * (1.0 - t));
        gp / (2.0 + 2.0 * g.cosh())
    }
}

/// Cubic Hermite on one cell; `d0`, `d1` are derivatives times cell width.
#[inline]
fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1
}

/// Fritsch-Carlson limiting of endpoint slopes for a monotone cell.
#[inline]
fn limit_monotone(y0: f64, y1: f64, mut d0: f64, mut d1: f64) -> (f64, f64) {
    let delta = y1 - y0;
    if delta == 0.0 {
        return (0.0, 0.0);
    }
    if d0 * delta < 0.0 {
        d0 = 0.0;
    }
    if d1 * delta < 0.0 {
        d1 = 0.0;
    }
    let (a, b) = (d0 / delta, d1 / delta);
    let r = a * a + b * b;
    if r > 9.0 {
        let k = 3.0 / r.sqrt();
        d0 = k * a * delta;
        d1 = k * b * delta;
    }
    (d0, d1)
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothKernel {
    pub transition_sharpness: f64,
    pub hat_tail_order: usize,
    x_step: f64,
    k_vals: Vec<f64>,
    k_ders: Vec<f64>,
    kt_hat: Vec<f64>,
    kt_hat_ders: Vec<f64>,
}

impl SmoothKernel {
    /// `Kt(x)`.
    pub fn k_tilde(&self, x: f64) -> f64 {
        k_tilde(x, self.transition_sharpness)
    }

    /// `K(x)` by monotone-limited Hermite interpolation of the tabulation.
    pub fn k(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax >= 1.0 {
            return 0.0;
        }
        // The table is exactly even; reading it at |x| keeps K(x) == K(-x).
        let pos = (ax + 1.0) / self.x_step;
        let i = (pos.floor() as usize).min(self.k_vals.len() - 2);
        let s = pos - i as f64;
        let (y0, y1) = (self.k_vals[i], self.k_vals[i + 1]);
        let (d0, d1) = limit_monotone(y0, y1, self.k_ders[i] * self.x_step, self.k_ders[i + 1] * self.x_step);
        hermite(y0, y1, d0, d1, s).max(0.0)
    }

    /// `Kt^(t) = int Kt(x) cos(2 pi t x) dx`; zero beyond the table.
    pub fn k_tilde_hat(&self, t: f64) -> f64 {
        let at = t.abs();
        if at >= HAT_T_MAX {
            return 0.0;
        }
        let pos = at / HAT_STEP;
        let i = (pos.floor() as usize).min(self.kt_hat.len() - 2);
        let s = pos - i as f64;
        let v = hermite(
            self.kt_hat[i],
            self.kt_hat[i + 1],
            self.kt_hat_ders[i] * HAT_STEP,
            self.kt_hat_ders[i + 1] * HAT_STEP,
            s,
        );
        v.min(self.kt_hat[0])
    }

    /// `K^(t) = Kt^(t)^2`.
    #[inline]
    pub fn k_hat(&self, t: f64) -> f64 {
        let v = self.k_tilde_hat(t);
        v * v
    }

    pub fn k_tau(&self, x: f64, tau: f64) -> f64 {
        self.k(x / tau)
    }

    pub fn k_tau_hat(&self, theta: f64, tau: f64) -> f64 {
        tau * self.k_hat(tau * theta)
    }

    pub fn k_at_zero(&self) -> f64 {
        self.k_vals[self.k_vals.len() / 2]
    }

    pub fn hat_at_zero(&self) -> f64 {
        self.kt_hat[0] * self.kt_hat[0]
    }

    /// Tabulated `(x, K(x))` on `[-1, 1]`.
    pub fn k_table(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.k_vals
            .iter()
            .enumerate()
            .map(|(i, &v)| (-1.0 + i as f64 * self.x_step, v))
    }

    /// Tabulated `(t, K^(t))` on `[-HAT_T_MAX, HAT_T_MAX]`.
    pub fn hat_table(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.kt_hat.len();
        (0..2 * n - 1).map(move |k| {
            let i = k as isize - (n as isize - 1);
            let v = self.kt_hat[i.unsigned_abs()];
            (i as f64 * HAT_STEP, v * v)
        })
    }

    pub fn grid_points(&self) -> usize {
        self.k_vals.len()
    }

    /// `ln C_j` with `C_j = max_t K^(t) (1 + t)^j` over the tabulated range.
    pub fn log_tail_constant(&self, j: usize) -> f64 {
        self.kt_hat
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| 2.0 * v.abs().ln() + j as f64 * (1.0 + i as f64 * HAT_STEP).ln())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `int_T^inf K^(t) dt` from the table, plus `C_j (1+t)^-j` past its end.
    pub fn hat_tail(&self, t0: f64, j: usize) -> f64 {
        let t0 = t0.max(0.0);
        let beyond = {
            let lc = self.log_tail_constant(j);
            let jf = j as f64;
            (lc + (1.0 - jf) * (1.0 + HAT_T_MAX.max(t0)).ln()).exp() / (jf - 1.0)
        };
        if t0 >= HAT_T_MAX {
            return beyond;
        }
        let panels = ((HAT_T_MAX - t0) / HAT_STEP).ceil() as usize;
        gl16().composite(t0, HAT_T_MAX, panels, |t| self.k_hat(t)) + beyond
    }

    /// `int K^ dt` over the table, which equals `K(0)` by inversion.
    pub fn hat_integral(&self) -> f64 {
        2.0 * trapezoid_even(&self.kt_hat.iter().map(|v| v * v).collect::<Vec<_>>(), HAT_STEP)
    }

    /// `(int K^2 dx, int K^2 dt)` for the Parseval check.
    pub fn parseval(&self) -> (f64, f64) {
        let mut acc = Neumaier::default();
        for v in &self.k_vals {
            acc.add(v * v);
        }
        let space = acc.value() * self.x_step;
        let freq = 2.0 * trapezoid_even(&self.kt_hat.iter().map(|v| v.powi(4)).collect::<Vec<_>>(), HAT_STEP);
        (space, freq)
    }
}

/// Trapezoid on `[0, T]` for samples of an even function.
fn trapezoid_even(v: &[f64], h: f64) -> f64 {
    let mut acc = Neumaier::default();
    acc.add(0.5 * v[0]);
    for x in &v[1..v.len() - 1] {
        acc.add(*x);
    }
    acc.add(0.5 * v[v.len() - 1]);
    acc.value() * h
}

pub fn k_tilde(x: f64, a: f64) -> f64 {
    let ax = x.abs();
    if ax <= 0.25 {
        1.0
    } else if ax >= 0.5 {
        0.0
    } else {
        smooth_step(4.0 * (0.5 - ax), a)
    }
}

fn k_tilde_deriv(x: f64, a: f64) -> f64 {
    let ax = x.abs();
    if ax <= 0.25 || ax >= 0.5 {
        0.0
    } else {
        -x.signum() * 4.0 * smooth_step_deriv(4.0 * (0.5 - ax), a)
    }
}

/// `(K(x), K'(x))` by piecewise Gauss-Legendre over the smooth pieces of
/// `Kt(y) Kt(x - y)`.
fn convolve(x: f64, a: f64) -> (f64, f64) {
    let lo = (-0.5f64).max(x - 0.5);
    let hi = 0.5f64.min(x + 0.5);
    if hi <= lo {
        return (0.0, 0.0);
    }
    let mut cuts = vec![lo, hi];
    for b in [-0.25, 0.25, x - 0.25, x + 0.25] {
        if b > lo && b < hi {
            cuts.push(b);
        }
    }
    cuts.sort_by(|p, q| p.total_cmp(q));
    let g = gl16();
    let (mut v, mut d) = (Neumaier::default(), Neumaier::default());
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q - p <= 0.0 {
            continue;
        }
        let mid = 0.5 * (p + q);
        if mid.abs() <= 0.25 && (x - mid).abs() <= 0.25 {
            v.add(q - p);
            continue;
        }
        let h = (q - p) / CONV_SUBPANELS as f64;
        for k in 0..CONV_SUBPANELS {
            let (s, e) = (p + k as f64 * h, p + (k + 1) as f64 * h);
            v.add(g.integrate(s, e, |y| k_tilde(y, a) * k_tilde(x - y, a)));
            d.add(g.integrate(s, e, |y| k_tilde(y, a) * k_tilde_deriv(x - y, a)));
        }
    }
    (v.value(), d.value())
}

/// Nodes and weights of `2 int_{1/4}^{1/2} Kt(x) (...) dx`, half-cycle panels at
/// the largest tabulated frequency.
fn band_rule(a: f64) -> (Vec<f64>, Vec<f64>) {
    let panels = (0.25 * 2.0 * HAT_T_MAX).ceil() as usize;
    let h = 0.25 / panels as f64;
    let g = gl16();
    let mut xs = Vec::with_capacity(panels * 16);
    let mut ws = Vec::with_capacity(panels * 16);
    for k in 0..panels {
        let m = 0.25 + (k as f64 + 0.5) * h;
        for (x, w) in g.nodes.iter().zip(&g.weights) {
            let y = m + 0.5 * h * x;
            xs.push(y);
            ws.push(2.0 * 0.5 * h * w * k_tilde(y, a));
        }
    }
    (xs, ws)
}

/// `(Kt^(t), Kt^'(t))`.
fn hat_pair(t: f64, xs: &[f64], ws: &[f64]) -> (f64, f64) {
    // Plateau part 2 int_0^{1/4} cos(2 pi t x) dx and its t-derivative.
    let (p, dp) = if t.abs() < 1e-4 {
        let u = PI * PI * t * t;
        (0.5 - u / 48.0, -PI * PI * t / 24.0)
    } else {
        let s = (0.5 * PI * t).sin();
        let c = (0.5 * PI * t).cos();
        (s / (PI * t), c / (2.0 * t) - s / (PI * t * t))
    };
    let (mut v, mut d) = (Neumaier::default(), Neumaier::default());
    for (x, w) in xs.iter().zip(ws) {
        let (sn, cs) = (2.0 * PI * t * x).sin_cos();
        v.add(w * cs);
        d.add(-w * 2.0 * PI * x * sn);
    }
    (p + v.value(), dp + d.value())
}

/// Build and certify the kernel tabulations.
pub fn make_kernel(transition_sharpness: f64, grid_points: usize) -> Result<SmoothKernel> {
    if !(transition_sharpness > 0.0) || !transition_sharpness.is_finite() {
        return Err(Error::invalid("transition_sharpness", format!("{transition_sharpness} is not positive")));
    }
    if grid_points < 1 << 10 {
        return Err(Error::invalid("grid_points", format!("{grid_points} < 1024")));
    }
    let a = transition_sharpness;
    let x_step = 2.0 / (grid_points - 1) as f64;
    let pairs: Vec<(f64, f64)> = (0..grid_points)
        .into_par_iter()
        .map(|i| {
            // Evaluate at |x| and mirror so the table is exactly even.
            let x = -1.0 + i as f64 * x_step;
            let j = grid_points - 1 - i;
            let xm = if x < 0.0 { -(-1.0 + j as f64 * x_step) } else { x };
            let (v, d) = convolve(xm.abs(), a);
            (v, if x < 0.0 { -d } else { d })
        })
        .collect();
    let (k_vals, k_ders): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();

    let (xs, ws) = band_rule(a);
    let n_hat = (HAT_T_MAX / HAT_STEP).round() as usize + 1;
    let hats: Vec<(f64, f64)> = (0..n_hat)
        .into_par_iter()
        .map(|i| hat_pair(i as f64 * HAT_STEP, &xs, &ws))
        .collect();
    let (kt_hat, kt_hat_ders): (Vec<f64>, Vec<f64>) = hats.into_iter().unzip();

    let kernel = SmoothKernel {
        transition_sharpness: a,
        hat_tail_order: DEFAULT_TAIL_ORDER,
        x_step,
        k_vals,
        k_ders,
        kt_hat,
        kt_hat_ders,
    };
    certify(&kernel)?;
    Ok(kernel)
}

/// Default kernel (sharpness 1, 16385 samples).
pub fn default_kernel() -> Result<SmoothKernel> {
    make_kernel(DEFAULT_SHARPNESS, DEFAULT_GRID_POINTS)
}

/// Sandwich `1/4 1_I(4x) <= K(x) <= 1_I(x)` at every sample, finite transform.
fn certify(k: &SmoothKernel) -> Result<()> {
    for (x, v) in k.k_table() {
        let lower = if x.abs() <= 0.25 { 0.25 } else { 0.0 };
        let upper = if x.abs() <= 1.0 { 1.0 } else { 0.0 };
        if v < lower - SANDWICH_TOL || v > upper + SANDWICH_TOL {
            return Err(Error::SandwichViolation {
                x,
                detail: format!("K = {v}, bounds [{lower}, {upper}]"),
            });
        }
    }
    if let Some(i) = k.kt_hat.iter().position(|v| !v.is_finite()) {
        return Err(Error::SandwichViolation {
            x: i as f64 * HAT_STEP,
            detail: "non-finite transform sample".into(),
        });
    }
    Ok(())
}

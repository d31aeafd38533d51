//! `V(theta; X) = gamma int_{X/2}^X u^(gamma-1) e(theta u^c) du`.
//!
//! After `v = u^c` this is `(gamma/c) int v^(gamma/c - 1) e(theta v) dv` over
//! `[(X/2)^c, X^c]`. That range is cut into geometric pieces of ratio at most
//! 2, so the power weight stays well resolved, and every piece into panels on
//! which the phase advances by at most half a cycle.

use num_complex::Complex64;

use super::e_frac;
use crate::context::PSContext;
use crate::dd::two_prod;
use crate::error::{Error, Result};
use crate::quad::gl16;
use crate::reduce::det_sum_c;

pub const DEFAULT_MAX_PANELS: usize = 1 << 24;
const MIN_PANELS_PER_PIECE: usize = 2;

/// Fixed nodes for `V(theta; X)` valid for every `|theta| <= theta_max`.
#[derive(Clone, Debug)]
pub struct VRule {
    pub x: f64,
    pub theta_max: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl VRule {
    pub fn new(x: f64, ctx: &PSContext, theta_max: f64, max_panels: usize) -> Result<Self> {
        Self::with_density(x, ctx, theta_max, 1.0, max_panels)
    }

    /// `density` multiplies the panel count of every piece. Any `X > 0` is
    /// accepted here; [`eval_v`] keeps the window convention `X >= 4`.
    pub fn with_density(x: f64, ctx: &PSContext, theta_max: f64, density: f64, max_panels: usize) -> Result<Self> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::invalid("X", format!("{x} is not positive")));
        }
        if !(theta_max >= 0.0) || !theta_max.is_finite() {
            return Err(Error::invalid("theta", format!("{theta_max} is not finite")));
        }
        if !(density >= 1.0) {
            return Err(Error::invalid("density", format!("{density} < 1")));
        }
        let (g, c) = (ctx.gamma, ctx.c);
        let a = (x / 2.0).powf(c);
        let b = x.powf(c);
        let mut pieces = vec![a];
        while pieces.last().unwrap() * 2.0 < b {
            let next = pieces.last().unwrap() * 2.0;
            pieces.push(next);
        }
        pieces.push(b);

        let counts: Vec<f64> = pieces
            .windows(2)
            .map(|w| (density * (2.0 * theta_max * (w[1] - w[0])).ceil()).max(MIN_PANELS_PER_PIECE as f64))
            .collect();
        let needed: f64 = counts.iter().sum();
        if needed > max_panels as f64 {
            return Err(Error::PanelOverflow {
                needed,
                limit: max_panels,
            });
        }

        let rule = gl16();
        let scale = g / c;
        let pw = g / c - 1.0;
        let total = needed as usize * rule.nodes.len();
        let mut nodes = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for (w, &k) in pieces.windows(2).zip(&counts) {
            let k = k as usize;
            let h = (w[1] - w[0]) / k as f64;
            for j in 0..k {
                let m = w[0] + (j as f64 + 0.5) * h;
                for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                    let v = m + 0.5 * h * t;
                    nodes.push(v);
                    weights.push(scale * 0.5 * h * wt * v.powf(pw));
                }
            }
        }
        Ok(VRule {
            x,
            theta_max,
            nodes,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in `v = u^c`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `V(theta; X)`; `|theta|` must not exceed `theta_max`.
    pub fn eval(&self, theta: f64) -> Complex64 {
        debug_assert!(theta.abs() <= self.theta_max * (1.0 + 1e-12));
        det_sum_c(self.nodes.len(), |i| {
            // theta * v exactly as hi + lo, so the reduction loses nothing.
            let (p, e) = two_prod(theta, self.nodes[i]);
            e_frac((p - p.round()) + e) * self.weights[i]
        })
    }
}

pub fn eval_v(theta: f64, x: f64, ctx: &PSContext) -> Result<Complex64> {
    eval_v_with(theta, x, ctx, DEFAULT_MAX_PANELS)
}

pub fn eval_v_with(theta: f64, x: f64, ctx: &PSContext, max_panels: usize) -> Result<Complex64> {
    if !(x >= 4.0) {
        return Err(Error::invalid("X", format!("{x} is below 4")));
    }
    Ok(VRule::new(x, ctx, theta.abs(), max_panels)?.eval(theta))
}

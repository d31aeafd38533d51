//! `int_{-A}^{A} |sum(theta)|^2 dtheta`, by quadrature and by expanding the
//! square into `sum w_1 w_2 2A sinc(2 pi A (n_1^c - n_2^c))`.

use std::f64::consts::PI;

use serde::Serialize;

use super::{e_frac, sum_terms, SumKind};
use crate::context::PSContext;
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::psprimes::build_window;
use crate::quad::gl16;
use crate::reduce::{det_sum, Neumaier, NeumaierC};

/// Below this `|x|`, `sin(x)/x` is replaced by `1 - x^2/6`.
const SINC_TAYLOR: f64 = 1e-4;
/// Relative gap between the fine and the coarse rule that counts as failure.
const QUAD_TOL: f64 = 1e-7;

#[derive(Clone, Debug, Serialize)]
pub struct MeanSquare {
    pub kind: SumKind,
    pub halfwidth: f64,
    pub x: f64,
    pub numeric: f64,
    pub closed_form: f64,
    /// `None` for kinds without a stated mean-square bound.
    pub envelope: Option<f64>,
    /// `|fine - coarse|` with the coarse rule at half the panels.
    pub error_estimate: f64,
    pub panels: usize,
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < SINC_TAYLOR {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn envelope(kind: SumKind, a: f64, x: f64, g: f64, c: f64) -> Option<f64> {
    let l = x.ln();
    let i = 2.0 * a;
    let tail = x.powf(2.0 * g - c);
    match kind {
        SumKind::S => Some(i * x.powf(g) * l * l + tail * l * l * l),
        SumKind::T => Some(i * x.powf(g) + tail * l),
        SumKind::S0 => Some(i * x.powf(2.0 * g - 1.0) * l + tail * l * l),
        _ => None,
    }
}

fn quadrature(powers: &[Dd], weights: &[f64], a: f64, panels: usize) -> f64 {
    let rule = gl16();
    let h = a / panels as f64;
    let abs2 = |theta: f64| {
        let mut acc = NeumaierC::default();
        for (p, w) in powers.iter().zip(weights) {
            acc.add(e_frac(p.mul_f64(theta).frac_centered()) * *w);
        }
        acc.value().norm_sqr()
    };
    // The integrand is even because the weights are real.
    2.0 * det_sum(panels, |k| {
        let lo = k as f64 * h;
        rule.integrate(lo, lo + h, abs2)
    })
}

/// `(diagonal, off-diagonal)` parts of the expanded square.
fn closed_form_parts(powers: &[Dd], weights: &[f64], a: f64) -> (f64, f64) {
    let n = powers.len();
    let scale = 2.0 * PI * a;
    let diag = det_sum(n, |i| 2.0 * a * weights[i] * weights[i]);
    let off = det_sum(n, |i| {
        let mut row = Neumaier::default();
        for j in i + 1..n {
            let d = (powers[i] - powers[j]).to_f64();
            row.add(weights[j] * sinc(scale * d));
        }
        4.0 * a * weights[i] * row.value()
    });
    (diag, off)
}

pub fn mean_square(kind: SumKind, halfwidth: f64, x: f64, ctx: &PSContext) -> Result<MeanSquare> {
    if !(halfwidth >= 0.0 && halfwidth <= 1.0) {
        return Err(Error::invalid("A", format!("{halfwidth} is not in [0, 1]")));
    }
    let w = build_window(x, ctx)?;
    let terms = sum_terms(kind, &w)?;
    let env = envelope(kind, halfwidth, x, ctx.gamma, ctx.c);
    let mut out = MeanSquare {
        kind,
        halfwidth,
        x,
        numeric: 0.0,
        closed_form: 0.0,
        envelope: env,
        error_estimate: 0.0,
        panels: 0,
    };
    if halfwidth == 0.0 || terms.is_empty() {
        return Ok(out);
    }
    let cq = ctx.c_exact().to_dd();
    let powers: Vec<Dd> = terms.ns.iter().map(|&n| Dd::from_f64(n as f64).powd(cq)).collect();
    let spread = (powers[powers.len() - 1] - powers[0]).to_f64();
    // At most one cycle of the fastest frequency per panel.
    let panels = ((halfwidth * spread).ceil() as usize).max(4);
    let fine = quadrature(&powers, &terms.weights, halfwidth, panels);
    let coarse = quadrature(&powers, &terms.weights, halfwidth, panels.div_ceil(2));
    let est = (fine - coarse).abs();
    if est > QUAD_TOL * fine.abs() {
        return Err(Error::NonConvergence {
            what: "mean-square quadrature",
            achieved: est / fine.abs(),
            target: QUAD_TOL,
        });
    }
    out.numeric = fine;
    let (diag, off) = closed_form_parts(&powers, &terms.weights, halfwidth);
    out.closed_form = diag + off;
    out.error_estimate = est;
    out.panels = panels;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_interval() {
        let ctx = PSContext::new(0.9, 1.5).unwrap();
        let m = mean_square(SumKind::S, 0.0, 512.0, &ctx).unwrap();
        assert_eq!((m.numeric, m.closed_form), (0.0, 0.0));
    }

    #[test]
    fn diagonal_of_t() {
        let ctx = PSContext::new(0.9, 1.5).unwrap();
        let w = build_window(512.0, &ctx).unwrap();
        let terms = sum_terms(SumKind::T, &w).unwrap();
        let powers: Vec<Dd> = terms.ns.iter().map(|&n| Dd::from_f64(n as f64).powd(ctx.c_exact().to_dd())).collect();
        let (diag, off) = closed_form_parts(&powers, &terms.weights, 0.1);
        let expect = 0.2 * w.members.len() as f64;
        assert!((diag - expect).abs() < 1e-13 * expect);
        assert!(off.abs() > 0.0);
    }

    #[test]
    fn numeric_matches_closed_form() {
        let ctx = PSContext::new(0.9, 1.5).unwrap();
        let m = mean_square(SumKind::S, 0.1, 512.0, &ctx).unwrap();
        assert!((m.numeric - m.closed_form).abs() <= 1e-6 * m.closed_form);
        assert!(m.envelope.unwrap() > 0.0);
    }

    #[test]
    fn sinc_branches_meet() {
        let x = SINC_TAYLOR;
        assert!((sinc(x * (1.0 - 1e-9)) - sinc(x)).abs() < 1e-15);
        assert_eq!(sinc(0.0), 1.0);
    }
}

//! Ratios of measured sums to stated power-of-`X` envelopes.
//!
//! `epsilon` and `delta` in the envelopes and hypothesis ranges are both the
//! audit slack. Points outside a hypothesis region get a flag and no
//! measurement. Ratios are reported, never judged: the implied constants are
//! unknown.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{eval_integer_sum, eval_terms, sum_terms, PhaseSpec, SumKind, SumTerms};
use crate::context::PSContext;
use crate::error::{Error, Result};
use crate::params::{check_admissible, nu, rho, TheoremId};
use crate::psprimes::build_window;

pub const DEFAULT_SLACK: f64 = 0.05;
pub const SENSITIVITY_SLACKS: [f64; 2] = [0.01, 0.10];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LemmaId {
    /// Unweighted integer sum with the `h (n+u)^gamma` term.
    Lemma5,
    /// `T`.
    CorT,
    /// `S`, saving `rho(c)`.
    S1a,
    /// `S` against `X^(2 gamma - c - 2 delta)`.
    CorS,
    /// `S` against `X^((3 gamma - c)/2 - delta)`.
    CorSa,
    /// `S0`.
    S0,
}

impl LemmaId {
    pub const ALL: [LemmaId; 6] = [
        LemmaId::Lemma5,
        LemmaId::CorT,
        LemmaId::S1a,
        LemmaId::CorS,
        LemmaId::CorSa,
        LemmaId::S0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::Lemma5 => "lemma5",
            LemmaId::CorT => "cor-t",
            LemmaId::S1a => "s1a",
            LemmaId::CorS => "cor-s",
            LemmaId::CorSa => "cor-sa",
            LemmaId::S0 => "s0",
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LemmaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|ch| ch.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "lemma5" | "l5" => LemmaId::Lemma5,
            "cort" => LemmaId::CorT,
            "s1a" => LemmaId::S1a,
            "cors" => LemmaId::CorS,
            "corsa" => LemmaId::CorSa,
            "s0" => LemmaId::S0,
            _ => return Err(Error::UnknownId(s.to_string())),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ThetaPoint {
    Absolute(f64),
    /// `k X^(gamma - c)`.
    Scaled(f64),
}

impl ThetaPoint {
    fn resolve(self, x: f64, gamma: f64, c: f64) -> f64 {
        match self {
            ThetaPoint::Absolute(t) => t,
            ThetaPoint::Scaled(k) => k * x.powf(gamma - c),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditSpec {
    pub lemma: LemmaId,
    pub x_grid: Vec<f64>,
    pub theta_grid: Vec<ThetaPoint>,
    pub h_grid: Vec<f64>,
    /// Phase exponent; may differ from the context's (integers allowed).
    pub c: f64,
    pub slack: f64,
    /// `rho` in the `S0` envelope; defaults to `c - gamma + 3 slack`.
    pub s0_rho: Option<f64>,
}

impl AuditSpec {
    pub fn new(lemma: LemmaId, x_grid: Vec<f64>, theta_grid: Vec<ThetaPoint>, h_grid: Vec<f64>, ctx: &PSContext) -> Self {
        AuditSpec {
            lemma,
            x_grid,
            theta_grid,
            h_grid,
            c: ctx.c,
            slack: DEFAULT_SLACK,
            s0_rho: None,
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self
    }

    fn s0_rho(&self, gamma: f64, slack: f64) -> f64 {
        self.s0_rho.unwrap_or(self.c - gamma + 3.0 * slack)
    }

    /// Exponent of `X` in the envelope at a given slack.
    pub fn envelope_exponent(&self, gamma: f64, slack: f64) -> f64 {
        let c = self.c;
        match self.lemma {
            LemmaId::Lemma5 => 1.0 - nu(c),
            LemmaId::CorT => 1.0 - nu(c) + slack,
            LemmaId::S1a => 1.0 - rho(c) + slack,
            LemmaId::CorS => 2.0 * gamma - c - 2.0 * slack,
            LemmaId::CorSa => (3.0 * gamma - c) / 2.0 - slack,
            LemmaId::S0 => gamma - self.s0_rho(gamma, slack) + slack,
        }
    }

    /// Reasons the exponent pair itself violates the hypotheses.
    fn global_flags(&self, gamma: f64) -> Vec<String> {
        let c = self.c;
        let mut f = Vec::new();
        let mut need = |ok: bool, what: &str| {
            if !ok {
                f.push(what.to_string());
            }
        };
        match self.lemma {
            LemmaId::Lemma5 => need(0.5 < gamma && gamma < 1.0 && 1.0 < c, "needs 1/2 < gamma < 1 < c"),
            LemmaId::CorT => need(1.0 - nu(c) < gamma && gamma < 1.0 && 1.0 < c, "needs 1 - nu < gamma < 1 < c"),
            LemmaId::S1a => need(c > 5.0 && 1.0 - rho(c) < gamma && gamma < 1.0, "needs c > 5 and 1 - rho < gamma < 1"),
            LemmaId::CorS => need(check_admissible(c, gamma, TheoremId::Thm2).ok, "needs 15(c-1) + 28(1-gamma) < 1"),
            LemmaId::CorSa => need(check_admissible(c, gamma, TheoremId::Thm3).ok, "needs 8(c-1) + 21(1-gamma) < 1"),
            LemmaId::S0 => {
                let r = self.s0_rho(gamma, self.slack);
                need(r > 0.0 && r < 1.0 / 12.0, "needs 0 < rho < 1/12");
                need(6.0 * r < gamma && gamma < 1.0, "needs 6 rho < gamma < 1");
                need(1.0 < c && c < 1.5 - 6.0 * r, "needs 1 < c < 3/2 - 6 rho");
            }
        }
        f
    }

    fn point_flags(&self, x: f64, theta: f64, h: f64, gamma: f64) -> Vec<String> {
        let d = self.slack;
        let lower = match self.lemma {
            LemmaId::Lemma5 | LemmaId::CorT => x.powf(gamma - self.c),
            _ => x.powf(gamma - self.c - d),
        };
        let mut f = Vec::new();
        if !(theta.abs() >= lower && theta.abs() <= x.powf(d)) {
            f.push("theta outside hypothesis range".to_string());
        }
        match self.lemma {
            LemmaId::Lemma5 => {
                if h.abs() > x.powf(4.0 / 3.0 - gamma) {
                    f.push("|h| exceeds X^(4/3 - gamma)".to_string());
                }
            }
            _ => {
                if h != 0.0 {
                    f.push("h must be 0".to_string());
                }
            }
        }
        f
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub lemma: LemmaId,
    pub x: f64,
    pub theta: f64,
    pub h: f64,
    pub measured: Option<f64>,
    pub envelope: Option<f64>,
    pub ratio: Option<f64>,
    /// `"ok"` or the violated hypotheses joined by `"; "`.
    pub flag: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XSummary {
    pub x: f64,
    pub max_ratio: Option<f64>,
    pub audited: usize,
    pub flagged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sensitivity {
    pub slack: f64,
    pub envelope_exponent: f64,
    pub per_x: Vec<XSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub lemma_id: LemmaId,
    pub gamma: f64,
    pub c: f64,
    pub slack: f64,
    pub envelope_exponent: f64,
    pub rows: Vec<AuditRow>,
    pub summary: Vec<XSummary>,
    pub sensitivity: Vec<Sensitivity>,
}

impl AuditReport {
    /// Largest per-`X` maximum divided by the one at the smallest audited `X`.
    pub fn max_ratio_growth(&self) -> Option<f64> {
        let maxima: Vec<f64> = self.summary.iter().filter_map(|s| s.max_ratio).collect();
        let first = *maxima.first()?;
        let top = maxima.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(top / first)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "lemma,X,theta,h,measured,envelope,ratio,flag")?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{},{},{},\"{}\"",
                r.lemma,
                r.x,
                r.theta,
                r.h,
                opt(r.measured),
                opt(r.envelope),
                opt(r.ratio),
                r.flag.replace('"', "'")
            )?;
        }
        Ok(())
    }
}

fn summarize(grid: &[f64], rows: &[AuditRow], ratio: impl Fn(&AuditRow) -> Option<f64>) -> Vec<XSummary> {
    grid.iter()
        .map(|&x| {
            let at: Vec<&AuditRow> = rows.iter().filter(|r| r.x == x).collect();
            let ratios: Vec<f64> = at.iter().filter_map(|r| ratio(r)).collect();
            XSummary {
                x,
                max_ratio: ratios.iter().copied().reduce(f64::max),
                audited: ratios.len(),
                flagged: at.len() - ratios.len(),
            }
        })
        .collect()
}

fn measure(spec: &AuditSpec, terms: Option<&SumTerms>, x: f64, phase: PhaseSpec) -> Result<f64> {
    match spec.lemma {
        LemmaId::Lemma5 => {
            let shifts: &[u8] = if phase.h == 0.0 { &[0] } else { &[0, 1] };
            let mut best: f64 = 0.0;
            for &u in shifts {
                best = best.max(eval_integer_sum(&phase.with_h(phase.h, u), x)?.norm());
            }
            Ok(best)
        }
        _ => Ok(eval_terms(&phase, terms.expect("terms prepared"))?.norm()),
    }
}

pub fn bound_audit(spec: &AuditSpec, ctx: &PSContext) -> Result<AuditReport> {
    if !(spec.slack > 0.0 && spec.slack < 0.5) {
        return Err(Error::invalid("slack", format!("{} is not in (0, 1/2)", spec.slack)));
    }
    if !(spec.c > 1.0) || !spec.c.is_finite() {
        return Err(Error::invalid("c", format!("{} is not > 1", spec.c)));
    }
    if spec.x_grid.is_empty() || spec.theta_grid.is_empty() || spec.h_grid.is_empty() {
        return Err(Error::invalid("grid", "every grid needs at least one point"));
    }
    let g = ctx.gamma;
    let kind = match spec.lemma {
        LemmaId::Lemma5 => None,
        LemmaId::CorT => Some(SumKind::T),
        LemmaId::S0 => Some(SumKind::S0),
        _ => Some(SumKind::S),
    };
    let global = spec.global_flags(g);
    let expo = spec.envelope_exponent(g, spec.slack);
    let base = PhaseSpec {
        theta: 0.0,
        h: 0.0,
        shift_u: 0,
        exponent_c: spec.c,
        exponent_gamma: g,
    };

    let mut rows = Vec::new();
    for &x in &spec.x_grid {
        let terms = match kind {
            Some(k) if global.is_empty() => Some(sum_terms(k, &build_window(x, ctx)?)?),
            _ => None,
        };
        let points: Vec<(f64, f64)> = spec
            .theta_grid
            .iter()
            .flat_map(|t| spec.h_grid.iter().map(move |&h| (t.resolve(x, g, spec.c), h)))
            .collect();
        let chunk: Vec<Result<AuditRow>> = points
            .par_iter()
            .map(|&(theta, h)| {
                let mut flags = global.clone();
                flags.extend(spec.point_flags(x, theta, h, g));
                let mut row = AuditRow {
                    lemma: spec.lemma,
                    x,
                    theta,
                    h,
                    measured: None,
                    envelope: None,
                    ratio: None,
                    flag: "ok".into(),
                };
                if !flags.is_empty() {
                    row.flag = flags.join("; ");
                    return Ok(row);
                }
                let m = measure(spec, terms.as_ref(), x, base.with_theta(theta).with_h(h, 0))?;
                let env = x.powf(expo);
                row.measured = Some(m);
                row.envelope = Some(env);
                row.ratio = Some(m / env);
                Ok(row)
            })
            .collect();
        for r in chunk {
            rows.push(r?);
        }
    }

    let summary = summarize(&spec.x_grid, &rows, |r| r.ratio);
    let sensitivity = SENSITIVITY_SLACKS
        .iter()
        .map(|&s| {
            let e = spec.envelope_exponent(g, s);
            Sensitivity {
                slack: s,
                envelope_exponent: e,
                per_x: summarize(&spec.x_grid, &rows, |r| r.measured.map(|m| m / r.x.powf(e))),
            }
        })
        .collect();
    Ok(AuditReport {
        lemma_id: spec.lemma,
        gamma: g,
        c: spec.c,
        slack: spec.slack,
        envelope_exponent: expo,
        rows,
        summary,
        sensitivity,
    })
}

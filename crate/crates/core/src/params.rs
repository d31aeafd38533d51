//! Explicit constants and admissibility conditions.
//!
//! `log` is the natural logarithm: `t = ceil(2 c log c)` changes under any
//! other base.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

pub fn rho(c: f64) -> f64 {
    1.0 / (8.0 * c * c + 12.0 * c + 12.0)
}

pub fn nu(c: f64) -> f64 {
    1.0 / (c * c + 3.0 * c + 2.0)
}

pub fn depth_t(c: f64) -> u64 {
    (2.0 * c * c.ln()).ceil() as u64
}

pub fn depth_u(c: f64) -> u64 {
    (2.0 * c / 3.0 + 0.5).ceil() as u64 + 2
}

/// `Delta` as the rational function of `c`.
pub fn delta_closed_form(c: f64) -> f64 {
    let num = (c - 3.0) * (c * c * c + 21.0 * c * c + 22.0 * c + 24.0);
    let den = 12.0 * c * (c + 1.0) * (c + 2.0) * (2.0 * c * c + 3.0 * c + 3.0);
    -num / den
}

/// `Delta` as `(7c/3 + 7) rho + 1/c - (4c/3 + 5) nu`.
pub fn delta_chain(c: f64) -> f64 {
    (7.0 * c / 3.0 + 7.0) * rho(c) + 1.0 / c - (4.0 * c / 3.0 + 5.0) * nu(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TheoremId {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    CorS,
    CorSa,
    RhoRange,
}

impl TheoremId {
    pub const ALL: [TheoremId; 7] = [
        TheoremId::Thm1,
        TheoremId::Thm2,
        TheoremId::Thm3,
        TheoremId::Thm4,
        TheoremId::CorS,
        TheoremId::CorSa,
        TheoremId::RhoRange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TheoremId::Thm1 => "thm1",
            TheoremId::Thm2 => "thm2",
            TheoremId::Thm3 => "thm3",
            TheoremId::Thm4 => "thm4",
            TheoremId::CorS => "cor-s",
            TheoremId::CorSa => "cor-sa",
            TheoremId::RhoRange => "rho-range",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|ch| ch.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "thm1" | "theorem1" => TheoremId::Thm1,
            "thm2" | "theorem2" => TheoremId::Thm2,
            "thm3" | "theorem3" => TheoremId::Thm3,
            "thm4" | "theorem4" => TheoremId::Thm4,
            "cors" => TheoremId::CorS,
            "corsa" => TheoremId::CorSa,
            "rhorange" => TheoremId::RhoRange,
            _ => return Err(Error::UnknownId(s.to_string())),
        })
    }
}

/// One inequality `lhs < rhs`; `margin = rhs - lhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub satisfied: bool,
}

impl Condition {
    fn lt(lhs: f64, rhs: f64) -> Self {
        Condition {
            lhs,
            rhs,
            margin: rhs - lhs,
            satisfied: lhs < rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Admissibility {
    pub theorem: TheoremId,
    pub ok: bool,
    pub conditions: BTreeMap<String, Condition>,
}

fn linear(a: f64, b: f64, c: f64, gamma: f64) -> f64 {
    a * (c - 1.0) + b * (1.0 - gamma)
}

/// `c + 14 rho < 2`, `2 gamma + 14 rho < 3`, `2c + 12 rho < 3`.
pub fn rho_conditions(c: f64, gamma: f64, rho: f64) -> BTreeMap<String, Condition> {
    BTreeMap::from([
        ("c + 14rho < 2".into(), Condition::lt(c + 14.0 * rho, 2.0)),
        ("2gamma + 14rho < 3".into(), Condition::lt(2.0 * gamma + 14.0 * rho, 3.0)),
        ("2c + 12rho < 3".into(), Condition::lt(2.0 * c + 12.0 * rho, 3.0)),
    ])
}

fn range_conditions(c: f64, gamma: f64) -> BTreeMap<String, Condition> {
    BTreeMap::from([
        ("gamma < 1".into(), Condition::lt(gamma, 1.0)),
        ("1 < c".into(), Condition::lt(1.0, c)),
    ])
}

/// Every inequality attached to `id`, with signed margins.
pub fn check_admissible(c: f64, gamma: f64, id: TheoremId) -> Admissibility {
    let mut conds = BTreeMap::new();
    let mut put = |name: &str, cond: Condition| {
        conds.insert(name.to_string(), cond);
    };
    match id {
        TheoremId::Thm1 => {
            let r = rho(c);
            put("5 < c", Condition::lt(5.0, c));
            put("c not an integer", Condition::lt(0.0, (c - c.round()).abs()));
            put("1 - rho < gamma", Condition::lt(1.0 - r, gamma));
            put("gamma < 1", Condition::lt(gamma, 1.0));
        }
        TheoremId::Thm2 => {
            put("15(c-1) + 28(1-gamma) < 1", Condition::lt(linear(15.0, 28.0, c, gamma), 1.0));
        }
        TheoremId::Thm3 | TheoremId::Thm4 => {
            put("8(c-1) + 21(1-gamma) < 1", Condition::lt(linear(8.0, 21.0, c, gamma), 1.0));
        }
        TheoremId::CorS => {
            put("15(c-1) + 28(1-gamma) < 1", Condition::lt(linear(15.0, 28.0, c, gamma), 1.0));
            put("14(c-1) + 26(1-gamma) < 1", Condition::lt(linear(14.0, 26.0, c, gamma), 1.0));
            put("14(c-1) + 24(1-gamma) < 1", Condition::lt(linear(14.0, 24.0, c, gamma), 1.0));
            put("14(c-1) + 12(1-gamma) < 1", Condition::lt(linear(14.0, 12.0, c, gamma), 1.0));
        }
        TheoremId::CorSa => {
            put("8(c-1) + 6(1-gamma) < 1", Condition::lt(linear(8.0, 6.0, c, gamma), 1.0));
            put("8(c-1) + 21(1-gamma) < 1", Condition::lt(linear(8.0, 21.0, c, gamma), 1.0));
            put("7(c-1) + 19(1-gamma) < 1", Condition::lt(linear(7.0, 19.0, c, gamma), 1.0));
            put("8(c-1) + 18(1-gamma) < 1", Condition::lt(linear(8.0, 18.0, c, gamma), 1.0));
        }
        TheoremId::RhoRange => conds.extend(rho_conditions(c, gamma, rho(c))),
    }
    if id != TheoremId::Thm1 && id != TheoremId::RhoRange {
        conds.extend(range_conditions(c, gamma));
    }
    Admissibility {
        theorem: id,
        ok: conds.values().all(|k| k.satisfied),
        conditions: conds,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamSheet {
    pub c: f64,
    pub gamma: f64,
    pub rho: f64,
    pub nu: f64,
    pub t: u64,
    pub u: u64,
    pub s_constructed: u64,
    pub s_theorem_min: f64,
    pub delta_closed_form: f64,
    pub delta_chain: f64,
    /// `|closed - chain| / max(|closed|, |chain|)`, 0 when both vanish.
    pub delta_rel_diff: f64,
    /// Keyed `"<theorem>: <inequality>"`.
    pub conditions: BTreeMap<String, Condition>,
}

pub fn derive_params(c: f64, gamma: f64) -> Result<ParamSheet> {
    if !(c > 1.0) || !c.is_finite() {
        return Err(Error::invalid("c", format!("{c} is not > 1")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid("gamma", format!("{gamma} is not in (0, 1)")));
    }
    let (t, u) = (depth_t(c), depth_u(c));
    let closed = delta_closed_form(c);
    let chain = delta_chain(c);
    let scale = closed.abs().max(chain.abs());
    let mut conditions = BTreeMap::new();
    for id in TheoremId::ALL {
        for (k, v) in check_admissible(c, gamma, id).conditions {
            conditions.insert(format!("{id}: {k}"), v);
        }
    }
    Ok(ParamSheet {
        c,
        gamma,
        rho: rho(c),
        nu: nu(c),
        t,
        u,
        s_constructed: 2 * t + 2 * u + 1,
        s_theorem_min: 4.0 * c * c.ln() + 4.0 * c / 3.0 + 10.0,
        delta_closed_form: closed,
        delta_chain: chain,
        delta_rel_diff: if scale == 0.0 { 0.0 } else { (closed - chain).abs() / scale },
        conditions,
    })
}

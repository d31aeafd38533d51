use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{ArgGroup, Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use pslab::circle::{
    self, diagonal_count, fourier_integral, main_term_and_xi, major_arc_gap, minor_arc_profile, r_direct,
    v_decay_constant, CircleOptions, CONVERGENCE_TOL,
};
use pslab::expsums::{bound_audit, eval_sum, eval_v, AuditSpec, LemmaId, PhaseSpec, SumKind, ThetaPoint, DEFAULT_SLACK};
use pslab::kernel::{make_kernel, DEFAULT_GRID_POINTS, DEFAULT_SHARPNESS};
use pslab::params::{check_admissible, derive_params, TheoremId};
use pslab::solver::{exceptional_scan, find_solutions, EpsilonRule, SearchMode, SearchTask, DEFAULT_MAX_HALF};
use pslab::{build_window, default_kernel, pi_gamma, PSContext};

use crate::output::Body;
use crate::{Cli, CliError, Command, Format, Global, DEFAULT_C, DEFAULT_GAMMA};

pub struct Done {
    pub config: Value,
    pub body: Body,
    pub default_format: Format,
}

pub fn dispatch(cli: &Cli) -> Result<Done, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Primes(a) => primes(g, a),
        Command::Sums(a) => sums(g, a),
        Command::Kernel(a) => kernel(g, a),
        Command::Circle(a) => circle(g, a),
        Command::Solve(a) => solve(g, a),
        Command::Params(a) => params(g, a),
        Command::Audit(a) => audit(g, a),
    }
}

fn context(g: &Global, gamma: f64, c: f64) -> Result<PSContext, CliError> {
    let ctx = PSContext::new(g.gamma.unwrap_or(gamma), g.c.unwrap_or(c))?;
    Ok(match g.precision_bits {
        Some(b) => ctx.with_precision_bits(b)?,
        None => ctx,
    })
}

/// The header every report starts with.
fn header(g: &Global, command: &str, ctx: Option<&PSContext>, args: &impl Serialize, resolved: Value) -> Value {
    json!({
        "command": command,
        "gamma": ctx.map(|c| c.gamma).or(g.gamma),
        "c": ctx.map(|c| c.c).or(g.c),
        "precision_bits": ctx.map(|c| c.precision_bits).or(g.precision_bits),
        "max_precision_bits": ctx.map(|c| c.max_precision_bits),
        "threads": g.threads,
        "seed": g.seed,
        "format": g.format,
        "args": args,
        "resolved": resolved,
    })
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn invalid(name: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Core(pslab::Error::InvalidParameter {
        name,
        reason: reason.into(),
    })
}

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("what").required(true).args(["x", "count_to"])))]
pub struct PrimesArgs {
    /// Dump the window of N_gamma in (X/2, X] as `n,is_prime,log_weight`
    #[arg(long = "X")]
    pub x: Option<f64>,
    /// Count primes of N_gamma up to N against N^gamma / log N
    #[arg(long)]
    pub count_to: Option<f64>,
}

fn primes(g: &Global, a: &PrimesArgs) -> Result<Done, CliError> {
    let ctx = context(g, DEFAULT_GAMMA, DEFAULT_C)?;
    let config = header(g, "primes", Some(&ctx), a, Value::Null);
    if let Some(n) = a.count_to {
        return Ok(Done {
            config,
            body: Body::Doc(to_value(&pi_gamma(n, &ctx)?)),
            default_format: Format::Json,
        });
    }
    let w = build_window(a.x.expect("clap group"), &ctx)?;
    let mut primes = w.primes.iter().zip(&w.log_weights).peekable();
    let rows = w
        .members
        .iter()
        .map(|&n| match primes.next_if(|(&p, _)| p == n) {
            Some((_, &l)) => vec![json!(n), json!(1), json!(l)],
            None => vec![json!(n), json!(0), json!(0.0)],
        })
        .collect();
    Ok(Done {
        config,
        body: Body::Table {
            columns: vec!["n", "is_prime", "log_weight"],
            rows,
            summary: Some(json!({
                "X": w.x,
                "members": w.members.len(),
                "primes": w.primes.len(),
                "prime_weight_total": w.prime_weight_total(),
            })),
            lines: false,
        },
        default_format: Format::Csv,
    })
}

#[derive(Args, Debug, Serialize)]
pub struct SumsArgs {
    #[arg(long = "X")]
    pub x: f64,
    /// Any of S, T, S0, T0, S1, T1, V
    #[arg(long, value_delimiter = ',', default_value = "S,T,S0,T0,S1,T1,V")]
    pub kinds: Vec<String>,
    /// Absolute frequencies
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    /// Frequencies in units of X^(gamma - c); used when --theta is absent
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "1")]
    pub theta_scaled: Vec<f64>,
    /// Coefficient of the `(n + u)^gamma` phase term
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub h: f64,
    #[arg(long, default_value_t = 0)]
    pub shift_u: u8,
}

fn sums(g: &Global, a: &SumsArgs) -> Result<Done, CliError> {
    let ctx = context(g, DEFAULT_GAMMA, DEFAULT_C)?;
    let thetas: Vec<f64> = if a.theta.is_empty() {
        let unit = a.x.powf(ctx.gamma - ctx.c);
        a.theta_scaled.iter().map(|k| k * unit).collect()
    } else {
        a.theta.clone()
    };
    let kinds: Vec<Option<SumKind>> = a
        .kinds
        .iter()
        .map(|k| if k.eq_ignore_ascii_case("v") { Ok(None) } else { k.parse().map(Some) })
        .collect::<pslab::Result<_>>()?;
    if a.h != 0.0 && kinds.contains(&None) {
        return Err(invalid("kinds", "V has no h term; drop it or set --h 0"));
    }
    let w = build_window(a.x, &ctx)?;
    let mut rows = Vec::new();
    for kind in &kinds {
        for &th in &thetas {
            let (name, z) = match kind {
                Some(k) => (k.to_string(), eval_sum(*k, &PhaseSpec::new(th, &ctx).with_h(a.h, a.shift_u), &w)?),
                None => ("V".to_string(), eval_v(th, a.x, &ctx)?),
            };
            rows.push(vec![json!(name), json!(a.x), json!(th), json!(a.h), json!(z.re), json!(z.im), json!(z.norm())]);
        }
    }
    Ok(Done {
        config: header(g, "sums", Some(&ctx), a, json!({ "theta": thetas })),
        body: Body::Table {
            columns: vec!["kind", "X", "theta", "h", "re", "im", "abs"],
            rows,
            summary: None,
            lines: false,
        },
        default_format: Format::Json,
    })
}

#[derive(Args, Debug, Serialize)]
pub struct KernelArgs {
    #[arg(long, default_value_t = DEFAULT_SHARPNESS)]
    pub sharpness: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    pub grid_points: usize,
    /// Write `k.csv` (x,K) and `khat.csv` (t,Khat) into this directory
    #[arg(long)]
    pub table_dir: Option<PathBuf>,
}

fn kernel(g: &Global, a: &KernelArgs) -> Result<Done, CliError> {
    let k = make_kernel(a.sharpness, a.grid_points)?;
    let (space, freq) = k.parseval();
    let min_hat = k.hat_table().map(|(_, v)| v).fold(f64::INFINITY, f64::min);
    let mut tables = Vec::new();
    if let Some(dir) = &a.table_dir {
        fs::create_dir_all(dir)?;
        let mut write = |name: &str, head: [&str; 2], it: &mut dyn Iterator<Item = (f64, f64)>| -> Result<(), CliError> {
            let path = dir.join(name);
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
            w.write_record(head).map_err(std::io::Error::from)?;
            for (x, v) in it {
                w.write_record([x.to_string(), v.to_string()]).map_err(std::io::Error::from)?;
            }
            w.flush()?;
            tables.push(path.display().to_string());
            Ok(())
        };
        write("k.csv", ["x", "K"], &mut k.k_table())?;
        write("khat.csv", ["t", "Khat"], &mut k.hat_table())?;
    }
    Ok(Done {
        config: header(g, "kernel", None, a, Value::Null),
        body: Body::Doc(json!({
            "transition_sharpness": k.transition_sharpness,
            "grid_points": k.grid_points(),
            "hat_tail_order": k.hat_tail_order,
            "k_at_zero": k.k_at_zero(),
            "hat_at_zero": k.hat_at_zero(),
            "hat_integral": k.hat_integral(),
            "parseval": { "space": space, "frequency": freq, "rel_diff": (space - freq).abs() / space },
            "min_hat": min_hat,
            "tables": tables,
        })),
        default_format: Format::Json,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Direct,
    Integral,
    Main,
    Diagonal,
    Diagnostics,
}

#[derive(Args, Debug, Serialize)]
pub struct CircleArgs {
    /// Named configuration; explicit flags override its fields [default: desk]
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long = "N")]
    pub n: Option<f64>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub u: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// tau = tau_scale / log N
    #[arg(long, default_value_t = 1.0)]
    pub tau_scale: f64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "direct,integral,main,diagonal,diagnostics")]
    pub parts: Vec<Part>,
    /// Frequencies per diagnostic scan
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    #[arg(long)]
    pub oversample: Option<f64>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
    #[arg(long)]
    pub max_grid_points: Option<u64>,
    #[arg(long)]
    pub max_half: Option<usize>,
    #[arg(long)]
    pub min_range: Option<f64>,
}

fn circle(g: &Global, a: &CircleArgs) -> Result<Done, CliError> {
    let p = circle::preset(a.preset.as_deref().unwrap_or("desk"))?;
    let ctx = context(g, p.gamma, p.c)?;
    let d = CircleOptions::default();
    let opts = CircleOptions {
        tau_scale: a.tau_scale,
        min_range: a.min_range.unwrap_or(d.min_range),
        oversample: a.oversample.unwrap_or(d.oversample),
        tail_tol: a.tail_tol.unwrap_or(d.tail_tol),
        max_grid_points: a.max_grid_points.unwrap_or(d.max_grid_points),
        max_half: a.max_half.unwrap_or(d.max_half),
        ..d
    };
    let kern = default_kernel()?;
    let cfg = circle::build_config_with(
        a.n.unwrap_or(p.n),
        &ctx,
        a.t.unwrap_or(p.t),
        a.u.unwrap_or(p.u),
        a.delta.unwrap_or(p.delta),
        &kern,
        &opts,
    )?;
    let want = |part| a.parts.contains(&part);
    let mut out = serde_json::Map::new();
    out.insert("config".into(), to_value(&cfg));
    let direct = want(Part::Direct).then(|| r_direct(&cfg, &ctx, &kern)).transpose()?;
    if want(Part::Integral) {
        let r = fourier_integral(&cfg, &ctx, &kern)?;
        let mut v = to_value(&r);
        v["converged"] = json!(r.rel_change <= CONVERGENCE_TOL);
        if let Some(dr) = direct.as_ref().filter(|dr| dr.value > 0.0) {
            v["rel_error_vs_direct"] = json!((dr.value - r.value).abs() / dr.value);
        }
        out.insert("integral".into(), v);
    }
    if let Some(dr) = direct {
        out.insert("direct".into(), to_value(&dr));
    }
    if want(Part::Main) {
        out.insert("main".into(), to_value(&main_term_and_xi(&cfg, &ctx, &kern)?));
    }
    if want(Part::Diagonal) {
        out.insert("diagonal".into(), to_value(&diagonal_count(&cfg, &ctx)?));
    }
    if want(Part::Diagnostics) {
        let mut minor = Vec::new();
        let mut decay = Vec::new();
        for &x in cfg.ranges.iter().filter(|&&x| x >= 4.0) {
            minor.push(to_value(&minor_arc_profile(x, &ctx, cfg.delta, a.samples)?));
            let (lo, hi) = ((ctx.gamma - ctx.c) * x.ln(), cfg.delta * x.ln());
            let thetas: Vec<f64> = (0..a.samples.max(2))
                .map(|i| (lo + (hi - lo) * i as f64 / (a.samples.max(2) - 1) as f64).exp())
                .collect();
            decay.push(json!({ "x": x, "constant": v_decay_constant(x, &ctx, &thetas)? }));
        }
        out.insert(
            "diagnostics".into(),
            json!({
                "major_arc_gap": major_arc_gap(&cfg, &ctx, a.samples)?,
                "minor_arc_profile": minor,
                "v_decay": decay,
            }),
        );
    }
    Ok(Done {
        config: header(g, "circle", Some(&ctx), a, json!({ "preset": p.name, "options": opts })),
        body: Body::Doc(Value::Object(out)),
        default_format: Format::Json,
    })
}

fn parse_mode(s: &str) -> Result<SearchMode, String> {
    s.parse().map_err(|_| format!("`{s}` is not one of first, count, all"))
}

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("target").required(true).args(["n", "z"])))]
pub struct SolveArgs {
    /// Solve for this N
    #[arg(long = "N")]
    pub n: Option<f64>,
    /// Sample the exceptional set over (Z/2, Z] (s = 2 only)
    #[arg(long = "Z")]
    pub z: Option<f64>,
    /// Number of variables [default: 3, or 2 with --Z]
    #[arg(long)]
    pub s: Option<usize>,
    /// Fixed epsilon [default: 1 / log N]
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_parser = parse_mode, default_value = "count")]
    pub mode: SearchMode,
    /// Sample count with --Z
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Primes satisfy floor < p <= ceiling [default: (X/2, X]]
    #[arg(long)]
    pub floor: Option<u64>,
    #[arg(long)]
    pub ceiling: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_MAX_HALF)]
    pub max_half: usize,
}

fn solve(g: &Global, a: &SolveArgs) -> Result<Done, CliError> {
    let ctx = context(g, DEFAULT_GAMMA, DEFAULT_C)?;
    if let Some(z) = a.z {
        if let Some(s) = a.s.filter(|&s| s != 2) {
            return Err(invalid("s", format!("the exceptional-set scan needs s = 2, got {s}")));
        }
        let rule = a.eps.map_or(EpsilonRule::LogInverse(1.0), EpsilonRule::Fixed);
        let scan = exceptional_scan(z, a.samples, rule, &ctx, g.seed)?;
        let rows = scan
            .outcomes
            .iter()
            .map(|o| vec![json!(o.n), json!(o.epsilon), json!(o.soluble), json!(o.min_defect)])
            .collect();
        let mut summary = to_value(&scan);
        summary.as_object_mut().expect("object").remove("outcomes");
        return Ok(Done {
            config: header(g, "solve", Some(&ctx), a, json!({ "rule": rule })),
            body: Body::Table {
                columns: vec!["n", "epsilon", "soluble", "min_defect"],
                rows,
                summary: Some(summary),
                lines: true,
            },
            default_format: Format::Json,
        });
    }
    let n = a.n.expect("clap group");
    let mut task = SearchTask::new(n, a.s.unwrap_or(3), a.eps.unwrap_or(1.0 / n.ln()), &ctx).with_mode(a.mode);
    task.prime_floor = a.floor.unwrap_or(task.prime_floor);
    task.prime_ceiling = a.ceiling.unwrap_or(task.prime_ceiling);
    task.max_half = a.max_half;
    task.validate()?;
    let res = find_solutions(&task, &ctx)?;
    let rows = res
        .solutions
        .iter()
        .map(|t| vec![json!(t.primes), json!(t.weight), json!(t.defect)])
        .collect();
    Ok(Done {
        config: header(g, "solve", Some(&ctx), a, to_value(&task)),
        body: Body::Table {
            columns: vec!["primes", "weight", "defect"],
            rows,
            summary: Some(json!({
                "count": res.count.to_string(),
                "primes_in_range": res.primes_in_range,
                "escalated": res.escalated,
            })),
            lines: true,
        },
        default_format: Format::Json,
    })
}

#[derive(Args, Debug, Serialize)]
pub struct ParamsArgs {
    /// `c0:c1:step`; one CSV row per c
    #[arg(long)]
    pub sweep: Option<String>,
    /// Report only this theorem's conditions (thm1..thm4, cor-s, cor-sa, rho-range)
    #[arg(long)]
    pub theorem: Option<String>,
}

fn sweep_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| invalid("sweep", format!("`{spec}` is not c0:c1:step")))?;
    let [c0, c1, step] = nums[..] else {
        return Err(invalid("sweep", format!("`{spec}` is not c0:c1:step")));
    };
    if !(step > 0.0) || !(c1 >= c0) || !c0.is_finite() || !c1.is_finite() {
        return Err(invalid("sweep", "needs c0 <= c1 and step > 0"));
    }
    let n = ((c1 - c0) / step + 1e-9).floor() as usize + 1;
    if n > 10_000_000 {
        return Err(invalid("sweep", format!("{n} points exceeds 1e7")));
    }
    Ok((0..n).map(|i| c0 + i as f64 * step).collect())
}

fn params(g: &Global, a: &ParamsArgs) -> Result<Done, CliError> {
    let (c, gamma) = (g.c.unwrap_or(DEFAULT_C), g.gamma.unwrap_or(DEFAULT_GAMMA));
    let resolved = json!({ "c": c, "gamma": gamma });
    let mut config = header(g, "params", None, a, resolved);
    config["c"] = json!(c);
    config["gamma"] = json!(gamma);
    if let Some(spec) = &a.sweep {
        let rows = sweep_grid(spec)?
            .into_iter()
            .map(|c| {
                let s = derive_params(c, gamma)?;
                Ok(vec![
                    json!(s.c),
                    json!(s.gamma),
                    json!(s.rho),
                    json!(s.nu),
                    json!(s.t),
                    json!(s.u),
                    json!(s.s_constructed),
                    json!(s.s_theorem_min),
                    json!(s.delta_closed_form),
                    json!(s.delta_chain),
                    json!(s.delta_rel_diff),
                ])
            })
            .collect::<pslab::Result<_>>()?;
        return Ok(Done {
            config,
            body: Body::Table {
                columns: vec![
                    "c",
                    "gamma",
                    "rho",
                    "nu",
                    "t",
                    "u",
                    "s_constructed",
                    "s_theorem_min",
                    "delta_closed_form",
                    "delta_chain",
                    "delta_rel_diff",
                ],
                rows,
                summary: None,
                lines: false,
            },
            default_format: Format::Csv,
        });
    }
    let body = match &a.theorem {
        Some(id) => {
            let id: TheoremId = id.parse()?;
            derive_params(c, gamma)?;
            to_value(&check_admissible(c, gamma, id))
        }
        None => to_value(&derive_params(c, gamma)?),
    };
    Ok(Done {
        config,
        body: Body::Doc(body),
        default_format: Format::Json,
    })
}

#[derive(Args, Debug, Serialize)]
pub struct AuditArgs {
    /// lemma5, cor-t, s1a, cor-s, cor-sa or s0
    #[arg(long, default_value = "lemma5")]
    pub lemma: String,
    #[arg(long = "X", value_delimiter = ',', default_value = "1024,2048,4096,8192,16384,32768,65536")]
    pub x: Vec<f64>,
    /// Frequencies in units of X^(gamma - c)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "2")]
    pub theta_scaled: Vec<f64>,
    /// Absolute frequencies, audited in addition to the scaled ones
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0")]
    pub h: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_SLACK)]
    pub slack: f64,
}

fn audit(g: &Global, a: &AuditArgs) -> Result<Done, CliError> {
    // `--c` is the phase exponent here and may be an integer; the context
    // only contributes gamma and the precision policy.
    let phase_c = g.c.unwrap_or(DEFAULT_C);
    let mut ctx = PSContext::new(g.gamma.unwrap_or(DEFAULT_GAMMA), DEFAULT_C)?;
    if let Some(b) = g.precision_bits {
        ctx = ctx.with_precision_bits(b)?;
    }
    let lemma: LemmaId = a.lemma.parse()?;
    let thetas: Vec<ThetaPoint> = a
        .theta_scaled
        .iter()
        .map(|&k| ThetaPoint::Scaled(k))
        .chain(a.theta.iter().map(|&t| ThetaPoint::Absolute(t)))
        .collect();
    let spec = AuditSpec::new(lemma, a.x.clone(), thetas, a.h.clone(), &ctx)
        .with_c(phase_c)
        .with_slack(a.slack);
    let report = bound_audit(&spec, &ctx)?;
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                json!(r.lemma.name()),
                json!(r.x),
                json!(r.theta),
                json!(r.h),
                json!(r.measured),
                json!(r.envelope),
                json!(r.ratio),
                json!(r.flag),
            ]
        })
        .collect();
    let summary = json!({
        "lemma": report.lemma_id.name(),
        "envelope_exponent": report.envelope_exponent,
        "per_x": report.summary,
        "max_ratio_growth": report.max_ratio_growth(),
        "sensitivity": report.sensitivity,
    });
    let mut config = header(g, "audit", Some(&ctx), a, to_value(&spec));
    config["c"] = json!(phase_c);
    Ok(Done {
        config,
        body: Body::Table {
            columns: vec!["lemma", "X", "theta", "h", "measured", "envelope", "ratio", "flag"],
            rows,
            summary: Some(summary),
            lines: false,
        },
        default_format: Format::Csv,
    })
}

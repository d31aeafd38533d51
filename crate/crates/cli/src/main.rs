//! `pslab`: command-line front end for the laboratory.
//!
//! Exit codes: 0 success, 1 invalid input (one `error code=... reason=...`
//! line on stderr), 2 budget, precision or convergence exhaustion.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use output::Emitter;

pub const DEFAULT_GAMMA: f64 = 0.9;
pub const DEFAULT_C: f64 = 1.5;

#[derive(Parser, Debug, Serialize)]
#[command(name = "pslab", version, about = "Piatetski-Shapiro primes in Diophantine inequalities", args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Serialize)]
pub struct Global {
    /// Piatetski-Shapiro index in (0, 1) [default: 0.9, or the preset's]
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Power exponent > 1 [default: 1.5, or the preset's]
    #[arg(long, global = true)]
    pub c: Option<f64>,
    /// Starting precision of certified decisions
    #[arg(long, global = true, env = "PSLAB_PRECISION_BITS")]
    pub precision_bits: Option<usize>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Report path [default: stdout]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// [default: csv for primes, audit and params --sweep; json otherwise]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// `key = value` file; typed flags override it
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Omit version, timestamp and timing from the report
    #[arg(long, global = true)]
    #[serde(skip)]
    pub no_meta: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Window dump or prime count of N_gamma
    Primes(commands::PrimesArgs),
    /// Exponential sums S, T, S0, T0, S1, T1 and the integral V
    Sums(commands::SumsArgs),
    /// Kernel summary and tabulation export
    Kernel(commands::KernelArgs),
    /// R(N) by direct count and by Fourier integral, with diagnostics
    Circle(commands::CircleArgs),
    /// Solutions for s = 2..5, or the exceptional-set scan with --Z
    Solve(commands::SolveArgs),
    /// Parameter sheet, admissibility and sweeps
    Params(commands::ParamsArgs),
    /// Measured sums against stated envelopes
    Audit(commands::AuditArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Primes(_) => "primes",
            Command::Sums(_) => "sums",
            Command::Kernel(_) => "kernel",
            Command::Circle(_) => "circle",
            Command::Solve(_) => "solve",
            Command::Params(_) => "params",
            Command::Audit(_) => "audit",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Core(pslab::Error),
    Usage(String),
    Config(String),
    Io(io::Error),
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
        }
    }

    fn exit(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_exhaustion() => 2,
            _ => 1,
        }
    }

    fn reason(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(s) | CliError::Config(s) => s.clone(),
            CliError::Io(e) => e.to_string(),
        }
    }
}

impl From<pslab::Error> for CliError {
    fn from(e: pslab::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

fn usage(e: clap::Error) -> Result<Cli, ExitCode> {
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = e.print();
            Err(ExitCode::SUCCESS)
        }
        _ => {
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
            eprintln!("error code=usage reason={}", serde_json::Value::from(first));
            let _ = e.print();
            Err(ExitCode::from(1))
        }
    }
}

fn parse(argv: &[OsString]) -> Result<Cli, ExitCode> {
    let first = Cli::try_parse_from(argv).or_else(usage)?;
    let Some(path) = first.global.config.clone() else {
        return Ok(first);
    };
    let spliced = config::load(&path).and_then(|e| config::splice(argv, first.command.name(), &e));
    match spliced {
        Ok(args) => Cli::try_parse_from(args).or_else(usage),
        Err(e) => {
            report(&e);
            Err(ExitCode::from(e.exit()))
        }
    }
}

fn report(e: &CliError) {
    eprintln!("error code={} reason={}", e.code(), serde_json::Value::from(e.reason()));
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let (started, wall) = (Instant::now(), SystemTime::now());
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let done = commands::dispatch(cli)?;
    let format = cli.global.format.unwrap_or(done.default_format);
    let emitter = Emitter::new(format, done.config, cli.global.no_meta, started, wall);
    match &cli.global.out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            emitter.write(&done.body, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            emitter.write(&done.body, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let cli = match parse(&argv) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed reader (`pslab ... | head`) is not an error.
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(e.exit())
        }
    }
}

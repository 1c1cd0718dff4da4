//! `entlab`: verification suites, concurrence, shot-noise estimates and
//! resource reports for direct entanglement measurement schemes.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or input error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;
mod statefile;

pub const DEFAULT_SEED: u64 = 42;
const DIM_CAP_ENV: &str = "ENTLAB_DIM_CAP";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Compute(#[from] entlab::Error),
}

#[derive(Parser, Debug)]
#[command(name = "entlab", version, about = "Direct entanglement measurement schemes")]
struct Cli {
    /// Emit the machine-readable JSON report instead of tables.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every random choice; never taken from the clock.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads for shot loops and bootstrap; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Residual and cross-path checks over seeded random states.
    Verify(VerifyArgs),
    /// Spectrum of ρρ̃ and concurrence of a state.
    Concurrence(ConcurrenceArgs),
    /// Finite-shot concurrence estimate with a bootstrap interval.
    Estimate(EstimateArgs),
    /// Pair usage of the sequential protocol.
    Resources(ResourcesArgs),
    /// Write a family state as an explicit-matrix state file.
    State(StateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Lemma1,
    Theorem1,
    Lemma2,
    Theorem2,
    Ppt,
    Realignment,
    All,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub suite: Suite,
    /// Number of random inputs per check.
    #[arg(long, default_value_t = 100)]
    pub seeds: u64,
    /// `VALUE` for every check, or `NAME=VALUE` for checks whose name starts with NAME.
    #[arg(long)]
    pub tolerance: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Oracle,
    Projective,
    Permutation,
    All,
}

#[derive(Args, Debug)]
pub struct ConcurrenceArgs {
    /// State file (`-` for stdin).
    pub state: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::All)]
    pub method: Method,
    /// Allowed gap between a moment-based concurrence and the oracle.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    pub state: PathBuf,
    /// Shots per measurement setting.
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
}

#[derive(Args, Debug)]
pub struct ResourcesArgs {
    pub state: PathBuf,
    /// Highest moment order; settings for m₁..m_k are simulated.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 10_000)]
    pub attempts: u64,
}

#[derive(Args, Debug)]
pub struct StateArgs {
    /// bell, werner, pure or random.
    pub family: String,
    /// Werner mixing parameter.
    #[arg(long)]
    pub p: Option<f64>,
    /// Bell state: phi+, phi-, psi+, psi- or 0..=3.
    #[arg(long)]
    pub which: Option<String>,
    /// Comma-separated real amplitudes for `pure`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub amplitudes: Vec<f64>,
    /// Comma-separated subsystem dimensions for `random`.
    #[arg(long, value_delimiter = ',', default_value = "2,2")]
    pub dims: Vec<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
}

pub struct Context {
    pub seed: u64,
    pub workers: usize,
}

fn apply_dim_cap() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var(DIM_CAP_ENV) {
        let cap: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| CliError::Usage(format!("{DIM_CAP_ENV} must be a positive integer, got `{raw}`")))?;
        entlab::tensor::set_dense_cap(cap);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<report::Report, CliError> {
    apply_dim_cap()?;
    if cli.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let ctx = Context { seed: cli.seed, workers: cli.workers };
    match cli.command {
        Command::Verify(args) => commands::verify(&ctx, &args),
        Command::Concurrence(args) => commands::concurrence(&args),
        Command::Estimate(args) => commands::estimate(&ctx, &args),
        Command::Resources(args) => commands::resources(&ctx, &args),
        Command::State(args) => commands::state(&ctx, &args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    let start = Instant::now();
    let outcome = run(cli);
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    match outcome {
        Ok(report) => {
            if json || report.command == "state" {
                let value = if report.command == "state" { &report.data } else { &serde_json::to_value(&report).expect("serializable") };
                println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
            } else {
                print!("{}", report.render());
            }
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

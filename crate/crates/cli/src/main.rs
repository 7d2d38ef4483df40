//! `herman-lab`: command-line front end for herman-core.
//!
//! Every subcommand writes one JSON document (or a CSV stream) to stdout.
//! Exit codes: 0 success, 1 verification failure, 2 usage or validation error.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{CliError, Output};

#[derive(Parser, Debug)]
#[command(
    name = "herman-lab",
    version,
    about = "Exact and Monte Carlo analysis of Herman's token ring"
)]
struct Cli {
    /// Worker threads for parallel sections (0 = rayon default).
    #[arg(long, global = true, env = "HERMAN_LAB_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate steg on a gap vector together with its bounds.
    Steg(StegArgs),
    /// Monte Carlo estimate of stabilization time and total cost.
    Simulate(SimulateArgs),
    /// Exact expected time and cost from the absorbing chain.
    Exact(ExactArgs),
    /// Check one of the exact identities.
    Verify(VerifyArgs),
    /// Cost and time bounds per token level.
    Bounds(BoundsArgs),
    /// Exact expected time of every start state; where does it peak?
    Sweep(SweepArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Placement {
    Equal,
    Random,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyTarget {
    MoveIdentity,
    Martingale,
    StegBound,
    Telescoping,
    CoinBijection,
    Reduction,
}

#[derive(Args, Debug)]
pub struct StegArgs {
    /// Comma-separated positive gaps, odd count.
    #[arg(long)]
    pub gaps: String,
}

#[derive(Args, Debug, Clone)]
pub struct StartArgs {
    /// Ring size; required with --placement, checked against --gaps otherwise.
    #[arg(long)]
    pub n: Option<u64>,
    /// Comma-separated positive gaps, odd count.
    #[arg(long, conflicts_with = "placement")]
    pub gaps: Option<String>,
    #[arg(long, value_enum, requires = "tokens")]
    pub placement: Option<Placement>,
    /// Token count for --placement.
    #[arg(long)]
    pub tokens: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub start: StartArgs,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, default_value_t = herman_core::ring::DEFAULT_MAX_STEPS)]
    pub max_steps: u64,
    /// State budget for computing the exact reference values alongside.
    #[arg(long, default_value_t = 1_000)]
    pub exact_states: u64,
}

#[derive(Args, Debug)]
pub struct LimitArgs {
    #[arg(long, default_value_t = herman_core::chain::DEFAULT_MAX_STATES)]
    pub max_states: u64,
    /// Largest token count enumerated exhaustively (2^m coin patterns).
    #[arg(long, default_value_t = herman_core::ring::DEFAULT_MAX_EXHAUSTIVE_M)]
    pub max_m: usize,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, conflicts_with = "all")]
    pub gaps: Option<String>,
    /// Solve and list every start state on the ring.
    #[arg(long)]
    pub all: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub limits: LimitArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub target: VerifyTarget,
    /// Token count(s); comma-separated where a list is accepted.
    #[arg(long)]
    pub m: Option<String>,
    /// Fixed ring size.
    #[arg(long)]
    pub n: Option<u64>,
    /// Upper end of the sampled ring-size range when --n is absent.
    #[arg(long)]
    pub n_max: Option<u64>,
    #[arg(long)]
    pub gaps: Option<String>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Enumerate every vector instead of sampling (move-identity).
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long, default_value_t = herman_core::ring::DEFAULT_MAX_EXHAUSTIVE_M)]
    pub max_m: usize,
    #[arg(long, default_value_t = herman_core::ring::DEFAULT_MAX_STEPS)]
    pub max_steps: u64,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 5)]
    pub s_max: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub n: u64,
    #[command(flatten)]
    pub limits: LimitArgs,
}

fn run(cli: Cli) -> Result<Output, CliError> {
    match cli.command {
        Command::Steg(args) => commands::steg(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Exact(args) => commands::exact(&args),
        Command::Verify(args) => commands::verify(&args),
        Command::Bounds(args) => commands::bounds(&args),
        Command::Sweep(args) => commands::sweep(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("warning: could not size thread pool: {e}");
        }
    }
    match run(cli) {
        Ok(output) => {
            print!("{}", output.text);
            if output.verified {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

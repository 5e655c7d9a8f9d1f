//! `hybridsim`: exact and hybrid simulation experiments on a network file.

mod commands;
mod write;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hybridsim::hybrid::LambdaPolicy;
use hybridsim::{NetworkError, SimError};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "hybridsim",
    version,
    about = "Exact and hybrid jump-diffusion simulation of reaction networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact (Gillespie) run, or an ensemble with --replicates > 1
    Ssa(RunOpts),
    /// Hybrid run, or an ensemble with --replicates > 1
    Hybrid(RunOpts),
    /// Both engines on the same seeds, with histograms and a KS report
    Compare(RunOpts),
    /// Coupled strong-convergence study over a list of steps
    Converge(RunOpts),
    /// Wall-clock speedup of the hybrid engine over the exact one
    Bench(RunOpts),
    /// Parse the network and report the partition, without simulating
    Check(RunOpts),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ssa(_) => "ssa",
            Command::Hybrid(_) => "hybrid",
            Command::Compare(_) => "compare",
            Command::Converge(_) => "converge",
            Command::Bench(_) => "bench",
            Command::Check(_) => "check",
        }
    }

    fn opts(&self) -> &RunOpts {
        match self {
            Command::Ssa(o)
            | Command::Hybrid(o)
            | Command::Compare(o)
            | Command::Converge(o)
            | Command::Bench(o)
            | Command::Check(o) => o,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum PolicyArg {
    Fail,
    Retry,
}

impl From<PolicyArg> for LambdaPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Fail => LambdaPolicy::Fail,
            PolicyArg::Retry => LambdaPolicy::RetryDoubled,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct RunOpts {
    /// Network file
    #[arg(long, value_name = "FILE")]
    network: PathBuf,

    /// Final time
    #[arg(long = "T", value_name = "FLOAT", default_value_t = 100.0)]
    #[serde(rename = "T")]
    t_max: f64,

    /// Diffusion step
    #[arg(long, value_name = "FLOAT", default_value_t = 0.1)]
    h: f64,

    /// Intensity of the reference Poisson process (needed when there are jump reactions)
    #[arg(long, value_name = "FLOAT")]
    lambda_max: Option<f64>,

    /// What to do when the jump propensity exceeds --lambda-max
    #[arg(long, value_enum, default_value_t = PolicyArg::Fail)]
    lambda_policy: PolicyArg,

    /// Number of replicates [default: 1 for ssa/hybrid, 1000 for compare, 200 for converge, 100 for bench]
    #[arg(long, value_name = "INT")]
    replicates: Option<usize>,

    /// Master seed
    #[arg(long, value_name = "INT", env = "HYBRIDSIM_SEED", default_value_t = 0)]
    seed: u64,

    /// Sampling interval of single-run trajectories [default: T/1000]
    #[arg(long, value_name = "FLOAT")]
    sample_dt: Option<f64>,

    /// Weight threshold for automatic diffusion assignment and the validity check
    #[arg(long, value_name = "FLOAT", default_value_t = 100.0)]
    h_threshold: f64,

    /// Worker threads
    #[arg(long, value_name = "INT", default_value_t = 1)]
    parallelism: usize,

    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Comma-separated steps for converge and bench [default: h, h/2, ..., h/32 for converge; 0.1,0.5,1,2 for bench]
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    h_list: Option<Vec<f64>>,

    /// Switch the Wiener noise off (hybrid, converge)
    #[arg(long)]
    drift_only: bool,
}

/// Failure of a command, with its exit code.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Parse(NetworkError),
    Input(String),
    Runtime(SimError),
    Io(String),
}

impl CliError {
    fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse(_) | CliError::Input(_) => "parse",
            CliError::Runtime(_) => "runtime",
            CliError::Io(_) => "io",
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Parse(_) | CliError::Input(_) => 3,
            CliError::Runtime(_) | CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Io(m) => m.clone(),
            CliError::Parse(e) => e.to_string(),
            CliError::Runtime(e) => e.to_string(),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(m) => CliError::Usage(m),
            e => CliError::Runtime(e),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        CliError::Parse(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let mut lines = rendered.lines();
            let first = lines.next().unwrap_or_default();
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            for line in lines {
                eprintln!("{line}");
            }
            return ExitCode::from(2);
        }
    };
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.message().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.category());
            ExitCode::from(e.code())
        }
    }
}

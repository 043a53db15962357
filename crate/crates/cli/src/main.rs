//! `eee`: validate games, run the learning dynamics, sweep coupling
//! strengths, verify equilibria, evaluate stability bounds and simulate.
//!
//! Exit codes: 0 success or convergence, 1 domain violation (invalid game,
//! failed verification, bad argument values), 2 I/O or parse failure,
//! 3 cycle, 4 iteration limit reached.

mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eee_core::EeeError;

#[derive(Parser, Debug)]
#[command(name = "eee", version, about = "Empirical evidence equilibria of finite multi-agent games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Greedy,
    Softmax,
}

#[derive(Args, Debug, Clone)]
pub struct DynamicsArgs {
    /// Update rule for strategies.
    #[arg(long, value_enum, default_value = "greedy")]
    pub policy: PolicyKind,
    /// Softmax temperatures, one per agent or one for all. Defaults to the
    /// temperatures in the game file.
    #[arg(long, num_args = 1..)]
    pub tau: Vec<f64>,
    /// Convergence threshold on the max-norm Q step.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a game file and list every violation.
    Validate { spec: PathBuf },
    /// Run Q-value iteration and write the trace and a summary.
    Run {
        spec: PathBuf,
        /// Interpolate between the uncoupled (0) and coupled (1) kernels.
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        dynamics: DynamicsArgs,
        /// Recorded in the summary; the dynamics themselves are deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the dynamics for several coupling strengths.
    Sweep {
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        alphas: Vec<f64>,
        #[command(flatten)]
        dynamics: DynamicsArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check whether a strategy and model pair is an equilibrium.
    Verify {
        spec: PathBuf,
        sigma: PathBuf,
        mu: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        /// Check the softmax (approximate) condition instead of the greedy one.
        #[arg(long)]
        approx: bool,
        #[arg(long, num_args = 1..)]
        tau: Vec<f64>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Evaluate coupling strength and the stability bounds.
    Bounds {
        spec: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        /// Strategy for the minimal stationary mass; defaults to the greedy
        /// fixed point of the dynamics.
        #[arg(long)]
        sigma: Option<PathBuf>,
        #[arg(long, num_args = 1..)]
        tau: Vec<f64>,
        /// Model perturbation for the Q-stability bound, one per agent or one
        /// for all. Defaults to the model bound at strategy distance 1.
        #[arg(long, num_args = 1..)]
        eps_mu: Vec<f64>,
        /// Use action averages when uncoupled kernels are missing.
        #[arg(long)]
        allow_fallback: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the game and compare signal frequencies with the exact model.
    Simulate {
        spec: PathBuf,
        sigma: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = eee_core::empirical::DEFAULT_BURN_IN)]
        burn_in: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_logging() {
    let level = match std::env::var("EEE_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Error,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Info,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .init();
}

/// 2 for unreadable or malformed input, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<EeeError>() {
            return match e {
                EeeError::Io(_) | EeeError::Json(_) | EeeError::Csv(_) | EeeError::Parse(_) => 2,
                EeeError::AtIteration { .. } => continue,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    let result = match cli.command {
        Command::Validate { spec } => commands::validate(&spec),
        Command::Run {
            spec,
            alpha,
            dynamics,
            seed,
            out,
        } => commands::run(&spec, alpha, &dynamics, seed, out.as_deref()),
        Command::Sweep {
            spec,
            alphas,
            dynamics,
            out,
        } => commands::sweep(&spec, &alphas, &dynamics, out.as_deref()),
        Command::Verify {
            spec,
            sigma,
            mu,
            alpha,
            approx,
            tau,
            tol,
        } => commands::verify(&spec, &sigma, &mu, alpha, approx, &tau, tol),
        Command::Bounds {
            spec,
            alpha,
            sigma,
            tau,
            eps_mu,
            allow_fallback,
            out,
        } => commands::bounds(&spec, alpha, sigma.as_deref(), &tau, &eps_mu, allow_fallback, out.as_deref()),
        Command::Simulate {
            spec,
            sigma,
            alpha,
            horizon,
            seed,
            burn_in,
            out,
        } => commands::simulate(&spec, &sigma, alpha, horizon, seed, burn_in, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

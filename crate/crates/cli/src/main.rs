//! `rmq`: quantize distributions, run recursive marginal quantization, price
//! contracts and run the convergence and distribution-error studies.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage error.

mod commands;
mod config;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{ConvergenceArgs, DistErrorArgs, PriceCommand, VqArgs};
use config::CommonArgs;

/// A usage error: bad flags, config or argument combinations.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(
    name = "rmq",
    version,
    about = "Recursive marginal quantization of scalar SDEs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Quantize a standard normal or noncentral chi-squared law.
    Vq(VqArgs),
    /// Run the recursion and dump the grids.
    Rmq,
    /// Price contracts on the grids against a reference.
    #[command(subcommand)]
    Price(PriceCommand),
    /// Regress the first-moment error on the step size.
    Convergence(ConvergenceArgs),
    /// Implied minus reference marginal distribution at the horizon.
    DistError(DistErrorArgs),
}

fn run(cli: Cli) -> Result<()> {
    let settings = config::resolve(&cli.common)?;
    if let Some(n) = settings.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| UsageError(format!("cannot configure {n} threads: {e}")))?;
    }
    match &cli.command {
        Command::Vq(args) => commands::vq(args, &settings),
        Command::Rmq => commands::rmq(&settings),
        Command::Price(cmd) => commands::price(cmd, &settings),
        Command::Convergence(args) => commands::convergence(args, &settings),
        Command::DistError(args) => commands::dist_error(args, &settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<UsageError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

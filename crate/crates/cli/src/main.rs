//! `mbpre`: simulation laboratory for critical multitype branching
//! processes in an i.i.d. random environment.
//!
//! Every subcommand reads one JSON experiment config, runs its module,
//! and writes CSV tables, a JSON summary, and a manifest with content
//! digests into the output directory. Exit codes: 0 on success, 1 on a
//! validation error, 2 on a runtime error.

mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::run::{CliError, Overrides};

#[derive(Parser)]
#[command(
    name = "mbpre",
    version,
    about = "Critical multitype branching processes in random environments: \
             survival scaling, conditioned walks, and verification campaigns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Survival-probability scaling over the generation grid.
    Survival(RunArgs),
    /// Passage-time tail of the associated conditioned walk.
    Tau(RunArgs),
    /// Harmonic-function estimates for the killed walk.
    Harmonic(RunArgs),
    /// Top Lyapunov exponent of the mean-matrix products.
    Lyapunov(RunArgs),
    /// Checkable forms of the model assumptions.
    Conditions(RunArgs),
    /// Randomized verification campaigns for the analytic bounds.
    Verify(RunArgs),
}

impl Command {
    fn split(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Survival(args) => ("survival", args),
            Command::Tau(args) => ("tau", args),
            Command::Harmonic(args) => ("harmonic", args),
            Command::Lyapunov(args) => ("lyapunov", args),
            Command::Conditions(args) => ("conditions", args),
            Command::Verify(args) => ("verify", args),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the replica count.
    #[arg(long)]
    replicas: Option<u64>,
    /// Worker threads for the replica pool (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not validation errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (invoked, args) = cli.command.split();
    let overrides = Overrides {
        seed: args.seed,
        out: args.out.clone(),
        replicas: args.replicas,
        workers: args.workers,
    };
    match run::execute(invoked, &args.config, overrides) {
        Ok(out_dir) => {
            println!("{invoked}: outputs written to {}", out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let label = match e {
                CliError::Validation(_) => "validation error",
                CliError::Runtime(_) => "runtime error",
            };
            eprintln!("mbpre {invoked}: {label}: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

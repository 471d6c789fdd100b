//! `cdft`: ground states, the two-field counterexample and functional
//! evaluation from the command line.
//!
//! Exit codes: 0 success, 2 configuration/format/grid error, 3 eigensolver
//! non-convergence, 4 a scientific verdict failed, 5 representation failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use cdft_core::error::CdftError;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cdft", version, about = "Current-density functional counterexample laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lowest eigenpairs of the configured Fock-Darwin Hamiltonian, with its
    /// ground-state density and currents.
    Solve(Common),
    /// Two-field family, epsilon sweep and verdicts.
    Counterexample {
        #[command(flatten)]
        common: Common,
        /// Repeat the functional evaluation on 2n-1 nodes and report the order.
        #[arg(long)]
        refine: bool,
    },
    /// Functionals and membership of a density pair read from field files.
    Functional {
        #[command(flatten)]
        common: Common,
        /// Particle density field (CSV with JSON sidecar).
        #[arg(long)]
        rho: PathBuf,
        /// Total current density field (CSV with JSON sidecar).
        #[arg(long)]
        j: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Eigensolver seed; overrides `solver.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

pub enum Outcome {
    Success,
    VerdictFailed,
}

fn exit_code(e: &CdftError) -> u8 {
    match e {
        CdftError::NotConverged { .. } => 3,
        CdftError::Certification(_) => 4,
        CdftError::Representation(_) | CdftError::InconsistentInversion { .. } => 5,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(c) => commands::solve(&c.config, c.out, c.seed),
        Command::Counterexample { common: c, refine } => commands::counterexample(&c.config, c.out, c.seed, refine),
        Command::Functional { common: c, rho, j } => commands::functional(&c.config, c.out, c.seed, &rho, &j),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::VerdictFailed) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

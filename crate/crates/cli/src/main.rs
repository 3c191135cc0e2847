//! Batch command-line interface over the q-deformed Fock toolkit.
//!
//! Every subcommand prints a versioned JSON report on stdout and exits
//! with 0 when all checks pass, 1 on a check failure, and 2 on a usage
//! error (bad flags, out-of-range parameters, guardrail refusal).

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod report;

use commands::{BenchArgs, BoundArgs, SpectrumArgs, SweepArgs, UsageError, VerifyArgs};
use report::RunReport;

#[derive(Parser)]
#[command(
    name = "qfock",
    version,
    about = "Verified numerics for the Fock representation of the q-commutation relations",
    long_about = "Builds the level matrices of the q-deformed Fock space (Gram matrices, the \
cycle-sum operator, the canonical unitary, the positive operator R), checks the defining \
identities numerically, and reports smallest eigenvalues, spectral bounds, and convergence \
margins. Reports are JSON on stdout; exit status is 0 when every check passes, 1 on a check \
failure, 2 on a usage error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full identity-verification suite at one parameter point.
    Verify(VerifyArgs),
    /// Per-level smallest eigenvalues with bounds, contraction factors,
    /// and iterate distances.
    Spectrum(SpectrumArgs),
    /// Root of the truncated series bound condition.
    Bound(BoundArgs),
    /// Convergence reports across a grid of deformation parameters.
    Sweep(SweepArgs),
    /// Dense versus multiset-block timing and equivalence comparison.
    Bench(BenchArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome: Result<RunReport, UsageError> = match cli.command {
        Command::Verify(args) => commands::run_verify(args),
        Command::Spectrum(args) => commands::run_spectrum(args),
        Command::Bound(args) => commands::run_bound(args),
        Command::Sweep(args) => commands::run_sweep(args),
        Command::Bench(args) => commands::run_bench(args),
    };
    match outcome {
        Ok(report) => {
            println!("{}", report.to_json());
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(UsageError(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

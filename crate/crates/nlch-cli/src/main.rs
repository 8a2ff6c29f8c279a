//! Command-line driver: one command per invocation, everything else in
//! the configuration file.
//!
//! Exit codes: 0 success, 2 config error, 3 solver non-convergence,
//! 4 invariant violation, 1 other failures.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nlch",
    about = "Solver for a nonlocal Cahn-Hilliard-type phase separation system",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coupled fixed-point solve and write ledger, snapshots and summary
    Solve(CommonArgs),
    /// Run the continuous-dependence experiment (two solves, fitted envelope)
    Perturb(CommonArgs),
    /// Solve on three dyadic refinement levels and report observed orders
    ConvergenceStudy(CommonArgs),
    /// Check the configured kernel against the admissibility gates
    ValidateKernel(CommonArgs),
    /// Compare regularity surrogates across one dyadic refinement
    ProbeRegularity(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the run configuration file
    config: PathBuf,
    /// Override the output directory from the configuration
    #[arg(long)]
    out: Option<PathBuf>,
}

fn dispatch(command: &Command) -> nlch::Result<String> {
    let (cli_cmd, args) = match command {
        Command::Solve(a) => (nlch::cli::CliCommand::Solve, a),
        Command::Perturb(a) => (nlch::cli::CliCommand::Perturb, a),
        Command::ConvergenceStudy(a) => (nlch::cli::CliCommand::ConvergenceStudy, a),
        Command::ValidateKernel(a) => (nlch::cli::CliCommand::ValidateKernel, a),
        Command::ProbeRegularity(a) => (nlch::cli::CliCommand::ProbeRegularity, a),
    };
    let text = std::fs::read_to_string(&args.config)?;
    let config = nlch::config::parse_config(&text)?;
    let artifacts = nlch::cli::run(cli_cmd, &config, args.out.as_deref())?;
    let mut out = artifacts.summary;
    for f in &artifacts.files {
        out.push_str(&format!("wrote {}\n", f.display()));
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error[{}]: {err}", err.category());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

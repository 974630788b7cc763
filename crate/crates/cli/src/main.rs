mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Two-point boundary value solver for weighted 1-D Schrödinger equations.
#[derive(Parser, Debug)]
#[command(name = "schro", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output directory [default: the scenario's out_dir, else ./out]
    #[arg(long, env = "SCHRO_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the constant-coefficient problem in closed form.
    FreeBvp(commands::free_bvp::FreeBvpArgs),
    /// Run one regularized linear sub-problem of a scenario.
    Linear(commands::linear::LinearArgs),
    /// Solve a scenario by Picard iteration.
    Picard(commands::picard::PicardArgs),
    /// Recompute estimate monitors from a stored picard run.
    VerifyEstimates(commands::verify::VerifyArgs),
    /// Sample commutator bound ratios over seeded random ensembles.
    CommutatorBench(commands::bench::BenchArgs),
    /// Evaluate the Mizohata index of a first-order coefficient.
    Mizohata(commands::mizohata::MizohataArgs),
}

/// Result of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    EstimateFailure,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::FreeBvp(a) => commands::free_bvp::run(&a),
        Command::Linear(a) => commands::linear::run(&a),
        Command::Picard(a) => commands::picard::run(&a),
        Command::VerifyEstimates(a) => commands::verify::run(&a),
        Command::CommutatorBench(a) => commands::bench::run(&a),
        Command::Mizohata(a) => commands::mizohata::run(&a),
    };
    match result {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::EstimateFailure) => {
            eprintln!("estimate monitor failed; see the reports in the output directory");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

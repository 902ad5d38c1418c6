//! `metacog` — measure the metacognitive sensitivity and criterion
//! calibration of binary-discrimination agents.
//!
//! Exit codes: 0 success (fit converged, run complete); 2 input, parse or
//! configuration error; 3 fit ran but did not converge; 4 run finished with
//! unrecovered transport failures (resume to complete).

mod commands;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "metacog", version, about, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic rating counts from a parameterized SDT observer.
    Simulate(commands::simulate::SimulateArgs),
    /// Fit meta-d' to a counts file and write the fit report.
    Fit(commands::fit::FitArgs),
    /// Compare two counts files or two fit reports: Z-test + ROPE verdict.
    Compare(commands::compare::CompareArgs),
    /// Run an experiment against a chat-completions endpoint.
    Run(commands::run::RunArgs),
    /// Aggregate run directories into plot-ready tables.
    Report(commands::report::ReportArgs),
    /// Check that a dataset file loads cleanly and report label balance.
    ValidateDataset(commands::validate::ValidateArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Fit(args) => commands::fit::run(args),
        Command::Compare(args) => commands::compare::run(args),
        Command::Run(args) => commands::run::run(args),
        Command::Report(args) => commands::report::run(args),
        Command::ValidateDataset(args) => commands::validate::run(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code as i32),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

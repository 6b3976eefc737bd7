//! Command-line front end: run scenario files or built-in gedanken
//! experiments and report the results.
//!
//! Exit codes: 0 when every declared expectation passes, 1 when any fails,
//! 2 on input errors.

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tsqt::protocol::QueryMode;
use tsqt::report::{render_json, render_table, run_report, RunOptions};
use tsqt::scenario::{builtins, find_builtin, Scenario};

#[derive(Parser)]
#[command(
    name = "tsqt",
    version,
    about = "Pre- and post-selected quantum ensembles: ABL probabilities, \
             measurement-ready counterfactual gating, and a Monte Carlo cross-check"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario by name, or a scenario JSON file by path.
    Run {
        /// Built-in name (see `tsqt list`) or path to a scenario file.
        scenario: String,
        /// Monte Carlo sample count.
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Seed for the Monte Carlo substreams.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Default tolerance for expectations without their own.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Force gated or ungated semantics on every counterfactual query;
        /// by default each query uses its declared mode (gated if none).
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Output format.
        #[arg(long, value_enum, default_value_t = FormatArg::Table)]
        format: FormatArg,
    },
    /// List the built-in scenarios.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Gated,
    Ungated,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Json,
}

fn load_scenario(name_or_path: &str) -> Result<Scenario, String> {
    if let Some(builtin) = find_builtin(name_or_path) {
        return Ok(builtin.load());
    }
    let text = std::fs::read_to_string(name_or_path)
        .map_err(|e| format!("cannot read {name_or_path}: {e}"))?;
    Scenario::load(&text).map_err(|e| format!("{name_or_path}: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for b in builtins() {
                println!("{:<16} {}", b.name, b.description);
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            scenario,
            samples,
            seed,
            tol,
            mode,
            format,
        } => {
            let scenario = match load_scenario(&scenario) {
                Ok(s) => s,
                Err(message) => {
                    eprintln!("error: {message}");
                    return ExitCode::from(2);
                }
            };
            let options = RunOptions {
                samples,
                seed,
                tol,
                mode: mode.map(|m| match m {
                    ModeArg::Gated => QueryMode::Gated,
                    ModeArg::Ungated => QueryMode::Ungated,
                }),
            };
            let report = run_report(&scenario, &options);
            match format {
                FormatArg::Table => print!("{}", render_table(&report)),
                FormatArg::Json => print!("{}", render_json(&report)),
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}

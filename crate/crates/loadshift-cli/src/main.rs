//! Command-line front-end: `generate` builds seeded synthetic scenarios,
//! `solve` runs the pricing pipeline, and `report` renders satisfaction heat
//! grids and per-cell traffic tables from a result file.
//!
//! Exit codes: 0 on success, 2 for validation errors (malformed input,
//! wrong mode for the scenario), 3 for infeasible instances (capacities too
//! tight for the demand), 4 for violated internal invariants.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use loadshift::io::{self, GenerateParams, PeakProfile};
use loadshift::solve::{solve_scenario, SolveMode, SolveOptions};
use loadshift::{Error, Result};

mod report;

#[derive(Parser)]
#[command(
    name = "loadshift",
    about = "Balance mobile-network traffic through price incentives",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic scenario.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of time slots per day.
        #[arg(long = "T", default_value_t = 24)]
        time_slots: usize,
        /// Number of cells.
        #[arg(long = "L", default_value_t = 4)]
        cells: usize,
        /// Number of customers.
        #[arg(long = "K", default_value_t = 50)]
        customers: usize,
        /// Share of premium-contract customers in [0, 1].
        #[arg(long, default_value_t = 0.3)]
        premium_share: f64,
        /// Baseline demand profile: commuter or flat.
        #[arg(long, default_value = "commuter")]
        peak: String,
        /// 1 = downloads only, 2 = downloads plus fixed streaming.
        #[arg(long, default_value_t = 1)]
        apps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a scenario and write the result file.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        /// Pipeline: auto, single, major or general.
        #[arg(long, default_value = "auto")]
        mode: String,
        /// Slot whose recovered price is pinned to zero.
        #[arg(long, default_value_t = 0)]
        source_slot: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render satisfaction grids and traffic tables from a result file.
    Report {
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            seed,
            time_slots,
            cells,
            customers,
            premium_share,
            peak,
            apps,
            out,
        } => {
            let params = GenerateParams {
                seed,
                time_slots,
                cells,
                customers,
                premium_share,
                peak: PeakProfile::parse(&peak)?,
                apps,
            };
            let scenario = io::generate(&params)?;
            io::save_scenario(&out, &scenario)?;
            eprintln!(
                "wrote scenario with {} customers over {} slots x {} cells to {}",
                scenario.customers.len(),
                scenario.time_slots,
                scenario.cells.len(),
                out.display()
            );
            Ok(())
        }
        Command::Solve {
            scenario,
            mode,
            source_slot,
            out,
        } => {
            let scenario = io::load_scenario(&scenario)?;
            let mode = SolveMode::parse(&mode)?;
            let options = SolveOptions {
                source_slot,
                initial_counts: None,
            };
            let result = solve_scenario(&scenario, mode, &options)?;
            io::save_result(&out, &scenario, &result)?;
            eprintln!(
                "solved in mode {} ({} rounds): objective {} (baseline {}), result at {}",
                result.mode,
                result.rounds,
                result.objective,
                result.baseline_objective,
                out.display()
            );
            Ok(())
        }
        Command::Report { result, out_dir } => {
            let file = io::load_result(&result)?;
            let written = report::write_report(&file, &out_dir)?;
            eprintln!("wrote {written} report files to {}", out_dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Validation(_) | Error::Io(_) => 2,
                Error::Infeasible(_) => 3,
                Error::Internal(_) => 4,
            };
            ExitCode::from(code)
        }
    }
}

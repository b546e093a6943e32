mod commands;
mod options;
mod solution;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use options::{GenArgs, SolverArgs};

/// Evolutionary squeaky wheel optimisation for driver and nurse scheduling.
#[derive(Parser, Debug)]
#[command(name = "eswo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance and write the best solution found.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Stop as soon as this objective is reached.
        #[arg(long)]
        known_optimum: Option<i64>,
        /// Drop fully redundant shifts from the final driver schedule.
        #[arg(long)]
        remove_redundant: bool,
        /// Solution file; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several seeds of one or more algorithms on a set of instances.
    Benchmark {
        #[arg(required = true)]
        instances: Vec<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        /// Runs per instance and algorithm; seeds are seed..seed+runs-1.
        #[arg(long, default_value_t = 10)]
        runs: u64,
        /// Algorithms to compare.
        #[arg(long, value_delimiter = ',', default_value = "eswo,swo")]
        algorithms: Vec<eswo::Mode>,
        /// Per-run records (CSV), readable by `stats`.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Report file; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded random instance.
    Generate {
        #[command(flatten)]
        spec: GenArgs,
        /// Instance file; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare ESWO against the exact optimum on small instances.
    Verify {
        #[arg(required = true)]
        instances: Vec<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 3)]
        runs: u64,
        /// Exit with status 1 when the overall hit rate is lower.
        #[arg(long)]
        min_hit_rate: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate a per-run records file into a report.
    Stats {
        records: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Solver(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { instance, solver, known_optimum, remove_redundant, out } => {
            commands::solve(&instance, &solver, known_optimum, remove_redundant, out.as_deref())
        }
        Command::Benchmark { instances, solver, runs, algorithms, records, format, out } => commands::benchmark(
            &instances,
            &solver,
            runs,
            &algorithms,
            records.as_deref(),
            format,
            out.as_deref(),
        ),
        Command::Generate { spec, out } => commands::generate(&spec, out.as_deref()),
        Command::Verify { instances, solver, runs, min_hit_rate, format, out } => {
            commands::verify(&instances, &solver, runs, min_hit_rate, format, out.as_deref())
        }
        Command::Stats { records, format, out } => commands::stats(&records, format, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

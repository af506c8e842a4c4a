use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nmpc_cli::commands::{self, outcome_code, EXIT_CONFIG, EXIT_SUCCESS};

#[derive(Parser)]
#[command(
    name = "nmpc",
    version,
    about = "Run NMPC scenarios, sweeps and waypoint routes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its log, metrics and plot.
    Run {
        scenario: PathBuf,
        /// Overrides the scenario's noise seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a sampling-time by horizon sweep.
    Sweep {
        sweep_file: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Parallel runs; defaults to the number of CPUs.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run a waypoint route over several seeds.
    Waypoints {
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
        } => commands::cmd_run(&scenario, seed, &out).map(outcome_code),
        Command::Sweep {
            sweep_file,
            out,
            jobs,
        } => {
            let jobs =
                jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            commands::cmd_sweep(&sweep_file, &out, jobs).map(|_| EXIT_SUCCESS)
        }
        Command::Waypoints {
            scenario,
            out,
            trials,
        } => commands::cmd_waypoints(&scenario, &out, trials as usize).map(outcome_code),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

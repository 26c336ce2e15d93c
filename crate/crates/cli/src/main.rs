//! `fpcoord`: run encounters, repeated games and seeded batches, and turn
//! traces into plot-ready CSV.
//!
//! Exit status: 0 on success, 1 for bad arguments, configs or traces, 2 when a
//! file cannot be read or written. `FPCOORD_LOG` sets the log level.

mod error;
mod plot;
mod run;
mod seeds;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use run::{cmd_run, Format, Mode, RunSpec};
use seeds::SeedList;

#[derive(Debug, Parser)]
#[command(name = "fpcoord", version, about = "Fictitious-play coordination experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write per-seed traces plus summary.csv.
    Run {
        #[arg(long, value_enum)]
        mode: Mode,
        /// JSON config; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Inclusive range `a..b`, comma list, or a single seed.
        #[arg(long)]
        seeds: Option<SeedList>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "jsonl")]
        format: Format,
    },
    /// Convert a JSONL trace into iteration, uav1_action, uav2_action, reward.
    Plotdata {
        trace: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FPCOORD_LOG", "warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };

    let result = match cli.command {
        Command::Run { mode, config, seeds, out, format } => cmd_run(&RunSpec {
            mode,
            config_path: config,
            seeds: seeds.map(|s| s.0),
            output_dir: out,
            output_format: format,
        })
        .map(|results| {
            let passed = results.iter().filter(|(_, s)| s.passed == Some(true)).count();
            let coordinated = results.iter().filter(|(_, s)| s.coordinated).count();
            println!("{} runs: {coordinated} coordinated, {passed} passed", results.len());
        }),
        Command::Plotdata { trace, out } => plot::cmd_plotdata(&trace, out.as_deref()),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{failure}");
            failure.exit_code()
        }
    }
}

//! `socialpulse`: generate traces, replay them through the detector, train
//! the foreground-speech head and tabulate feedback.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or schema error, 3 replay
//! and oracle disagree.

mod exit;
mod fsd;
mod generate;
mod replay;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::exit::CliError;

#[derive(Parser, Debug)]
#[command(name = "socialpulse", version, about = "Duty-cycled social interaction detection, replayed from traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic trace from a scenario file or a random scenario.
    Generate(generate::GenerateArgs),
    /// Replay traces through the streaming detector.
    Replay(replay::ReplayArgs),
    /// Write the batch oracle's detection log for one trace.
    Oracle(replay::OracleArgs),
    /// Train the linear foreground-speech head on a CSV of labeled embeddings.
    TrainFsd(fsd::TrainArgs),
    /// Balanced accuracy of a model on a CSV of labeled embeddings.
    EvalFsd(fsd::EvalArgs),
    /// Write the untrained reference model (first embedding dimension decides).
    ReferenceModel(fsd::ReferenceArgs),
    /// Tabulate detection and feedback logs.
    Report(report::ReportArgs),
}

/// Detector configuration from `--config`, or the defaults.
fn load_config(path: Option<&PathBuf>) -> Result<socialpulse::DetectorConfig, CliError> {
    Ok(match path {
        Some(p) => socialpulse::DetectorConfig::load(p)?,
        None => socialpulse::DetectorConfig::default(),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => generate::run(a),
        Command::Replay(a) => replay::run(a),
        Command::Oracle(a) => replay::run_oracle(a),
        Command::TrainFsd(a) => fsd::train(a),
        Command::EvalFsd(a) => fsd::eval(a),
        Command::ReferenceModel(a) => fsd::reference(a),
        Command::Report(a) => report::run(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}

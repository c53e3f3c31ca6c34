//! `favd`: train, evaluate and apply dangerous-word vulnerability predictors.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    Usage(String),
    /// Unreadable or malformed input data (exit 2).
    Data(favd::Error),
    /// The requested protocol cannot run on this data (exit 3).
    Infeasible(favd::Error),
}

impl From<favd::Error> for CliError {
    fn from(e: favd::Error) -> Self {
        if e.is_infeasible() {
            CliError::Infeasible(e)
        } else if matches!(e, favd::Error::Config(_)) {
            CliError::Usage(e.to_string())
        } else {
            CliError::Data(e)
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "data error: {e}"),
            CliError::Infeasible(e) => write!(f, "infeasible protocol: {e}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "favd",
    version,
    about = "Predict potentially vulnerable functions from the words in their names"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the terms of a function name, one per line.
    Split(commands::SplitArgs),
    /// Tune a model on labeled name lists and write it as JSON.
    Train(commands::TrainArgs),
    /// Cross-validate on labeled data and write JSON and CSV reports.
    Eval(commands::EvalArgs),
    /// Classify names with a trained model.
    Predict(commands::PredictArgs),
    /// Emit ROC points over the threshold grid for one or more cutoffs.
    Roc(commands::RocArgs),
    /// Report the all-vulnerable and random baselines.
    Baseline(commands::BaselineArgs),
    /// Extract function-definition names from C/C++ sources.
    Harvest(commands::HarvestArgs),
    /// Generate a synthetic corpus with planted dangerous words.
    Synth(commands::SynthArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
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
        Command::Split(a) => commands::split(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Predict(a) => commands::predict(a),
        Command::Roc(a) => commands::roc(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::Harvest(a) => commands::harvest(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("favd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::{ConfigError, LoadedConfig};

/// Train, evaluate and check masked PPO agents on the paint-shop, load-management
/// and inventory environments.
///
/// Outputs go to `experiment.output_dir`, placed under $ACTMASK_OUTPUT_ROOT when
/// that variable is set and the directory is relative.
#[derive(Debug, Parser)]
#[command(name = "actmask", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one policy per seed; writes checkpoints and learning curves.
    Train { config: PathBuf },
    /// Evaluate the trained checkpoints on the shared evaluation episodes.
    Eval { config: PathBuf },
    /// Run the environment's non-learning baseline on the evaluation episodes.
    Baseline { config: PathBuf },
    /// Solve the small instance in the `[oracle]` table exactly.
    Oracle { config: PathBuf },
    /// Merge the per-seed learning curves into one CSV.
    Curves { config: PathBuf },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (Command::Train { config: path }
    | Command::Eval { config: path }
    | Command::Baseline { config: path }
    | Command::Oracle { config: path }
    | Command::Curves { config: path }) = &cli.command;
    commands::require_file(path)?;
    let config = LoadedConfig::load(path)?;
    eprintln!("config {} (hash {})", path.display(), config.hash);
    match cli.command {
        Command::Train { .. } => commands::train(&config),
        Command::Eval { .. } => commands::eval(&config),
        Command::Baseline { .. } => commands::baseline(&config),
        Command::Oracle { .. } => commands::oracle(&config),
        Command::Curves { .. } => commands::curves(&config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.chain().any(|e| e.is::<ConfigError>()) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

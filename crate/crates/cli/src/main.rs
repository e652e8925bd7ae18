//! `litmt`: prepare training data, translate documents incrementally and
//! score the output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::{Outcome, Stage};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "litmt", version, about = "Document-level literary translation toolkit")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override a config value, e.g. `--set decoding.n=5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write training data for one stage.
    Prepare {
        #[arg(long, value_enum)]
        stage: Stage,
    },
    /// Translate the corpus document by document.
    Translate {
        /// Render and count prompts without calling the backend.
        #[arg(long)]
        dry_run: bool,
    },
    /// Score hypotheses with s-BLEU and d-BLEU.
    Evaluate {
        /// Hypothesis file (defaults to the run's hypotheses.jsonl).
        #[arg(long, value_name = "PATH")]
        hyp: Option<PathBuf>,
        /// Reference record file (defaults to the configured corpus).
        #[arg(long = "ref", value_name = "PATH")]
        reference: Option<PathBuf>,
    },
    /// Check the configuration and corpus.
    Validate,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let config = match RunConfig::load(cli.config.as_deref(), &cli.overrides, cli.out.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Prepare { stage } => commands::prepare(&config, *stage),
        Command::Translate { dry_run } => commands::translate(&config, *dry_run),
        Command::Evaluate { hyp, reference } => commands::evaluate(&config, hyp.as_deref(), reference.as_deref()),
        Command::Validate => commands::validate(&config),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => {
            eprintln!("error: some documents were aborted; see the manifest");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

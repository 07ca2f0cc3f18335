//! `mixup`: command-line experiments on Mixup-optimal classifiers, Mixup
//! training, midpoint recovery, data audits and linear Mixup.
//!
//! Every run writes `config.json`, `results.csv` and `summary.json` (plus SVG
//! plots where they make sense) into `<out>/<name>`. Exit status is 0 on
//! success, 2 for configuration errors and 3 for numerical failures.

mod args;
mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::args::Command;
use crate::config::{config_error, ConfigError, ExperimentConfig};
use crate::output::{RunDir, OUTPUT_ROOT_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "mixup",
    version,
    about = "Experiments on Mixup training and its optimal classifiers"
)]
struct Cli {
    /// Output root directory
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV, default_value = "runs")]
    out: PathBuf,
    /// Run directory under the output root (defaults to the subcommand name)
    #[arg(long, global = true)]
    name: Option<String>,
    /// JSON experiment config; replaces all experiment flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = resolve(&cli)?;
    let name = cli
        .name
        .clone()
        .unwrap_or_else(|| config.command().to_string());
    let dir = RunDir::create(&cli.out, &name, &config)?;
    let line = commands::run(&config, &dir)?;
    println!("{line}");
    println!("wrote {}", dir.path().display());
    Ok(())
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    match (&cli.config, &cli.command) {
        (Some(path), command) => {
            let config = ExperimentConfig::load(path)?;
            if let Some(cmd) = command {
                if cmd.name() != config.command() {
                    return Err(config_error(
                        "command",
                        format!(
                            "config file is for `{}`, not `{}`",
                            config.command(),
                            cmd.name()
                        ),
                    ));
                }
            }
            Ok(config)
        }
        (None, Some(cmd)) => cmd.to_config(),
        (None, None) => Err(config_error("command", "give a subcommand or --config")),
    }
}

/// 2 for bad input, 3 for numerical failure, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    use mixup_core::Error as E;
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::NonConvergence { .. }
                | E::Inconsistent { .. }
                | E::Degenerate(_)
                | E::Rank(_)
                | E::Underdetermined(_)
                | E::OutsideMix { .. } => 3,
                E::Io(_) => 1,
                _ => 2,
            };
        }
    }
    1
}

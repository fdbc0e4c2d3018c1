//! Command-line front end: `lingfactors [--config F] [--seed N] [--out DIR] <command>`.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{compute_factors, compute_fits, Outputs};
pub use config::RunConfig;

use crate::par::Exec;

#[derive(Debug, Parser)]
#[command(name = "lingfactors", version, about = "Explain MT metric scores with linguistic factors")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "lingfactors.toml")]
    pub config: PathBuf,
    /// Overrides the config's `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config's `out` directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Compare tokens case-sensitively for LEX and MOR.
    #[arg(long, global = true)]
    pub no_casefold: bool,
    /// Score on a single thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, Subcommand)]
pub enum Command {
    /// Score SEM/SYN/LEX/MOR for every pair and write one TSV per factor.
    Factors,
    /// Regress each metric's scores on the factor scores.
    Regress,
    /// Build adversarial triples and measure which candidate metrics prefer.
    Adversarial,
    /// Evaluate averaged-metric ensembles against human scores.
    Ensemble,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n{0}")]
    Validation(String),
    #[error(transparent)]
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl Cli {
    /// Loads the config and applies command-line overrides.
    pub fn load_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config).map_err(CliError::Validation)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if self.no_casefold {
            cfg.casefold = false;
        }
        Ok(cfg)
    }

    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        }
    }
}

/// Runs one command against an already-loaded config and returns what it would write.
pub fn run_command(cfg: &RunConfig, command: Command, exec: Exec) -> Result<Outputs, CliError> {
    match command {
        Command::Factors => commands::factors(cfg, exec),
        Command::Regress => commands::regress(cfg),
        Command::Adversarial => commands::adversarial(cfg, exec),
        Command::Ensemble => commands::ensemble(cfg, exec),
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.load_config()?;
    let outputs = run_command(&cfg, cli.command, cli.exec())?;
    outputs.write_to(&cfg.out).map_err(CliError::Runtime)?;
    for (rel, _) in outputs.files() {
        log::info!("wrote {}", cfg.out.join(rel).display());
    }
    Ok(())
}

//! Command-line workflows around the solver core: the transport
//! experiment, step-size sweeps, numerical checks of the convergence
//! theory, and tabulated stability spectra. Every workflow writes CSV.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::path::PathBuf;

pub use config::{parse_config, CliConfig, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(#[from] uzawa_ritz_core::Error),

    #[error("{count} check(s) failed:\n{list}")]
    VerificationFailed { count: usize, list: String },
}

impl CliError {
    /// 0 success, 1 configuration or I/O, 2 numerical abort, 3 failed check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } | CliError::Csv { .. } => 1,
            CliError::Numerical(_) => 2,
            CliError::VerificationFailed { .. } => 3,
        }
    }
}

/// Runs the configured command.
pub fn run(cfg: &CliConfig) -> Result<(), CliError> {
    match cfg.command {
        Command::Solve => commands::solve(cfg),
        Command::Sweep => commands::sweep(cfg),
        Command::Verify => verify::verify(cfg),
        Command::Spectrum => commands::spectrum(cfg),
    }
}

/// Reads `path`, applies the seed override from the environment and runs.
pub fn run_file(path: &std::path::Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    cfg.apply_seed_override(std::env::var(config::SEED_ENV).ok().as_deref())?;
    run(&cfg)
}

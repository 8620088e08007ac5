//! Driver behind the `amcd` binary.
//!
//! Commands write machine-readable output (JSON reports, CSV tables) to a file or to
//! standard output, and a short human-readable summary to whichever stream the data
//! does not occupy. Numbers in data files use the shortest decimal that parses back to
//! the same `f64`; summaries use six decimals.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
mod commands;
mod settings;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::run;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Solver(#[from] amcd::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    /// Carries the value already printed; only the exit status changes.
    #[error("no slope on the grid admits a feasible point")]
    Infeasible,
}

impl CliError {
    /// 2 for anything wrong with the input, 3 when the problem has no feasible point.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Infeasible => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

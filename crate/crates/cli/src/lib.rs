//! Library half of the `simweight` command-line tool: ingestion, configuration,
//! command drivers and file emission.

pub mod commands;
pub mod config;
pub mod ingest;
pub mod output;

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Core(#[from] simweight::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("writing table: {0}")]
    Csv(#[from] csv::Error),
    #[error("writing json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub use commands::{
    run_backtest_command, run_generate_command, run_similarity_command, run_simulation_command,
    Outcome,
};
pub use config::RunConfig;
pub use ingest::{ingest_returns, IngestError, IngestOptions};

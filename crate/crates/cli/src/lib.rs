//! The `fld` command line: encode and decode location-token task records,
//! filter and refine annotated image records, and compute corpus
//! statistics. Every command reads and writes JSON lines.
//!
//! Exit codes: 0 on success, 1 for input or schema errors, 2 for
//! configuration errors.

mod app;
mod commands;
mod config;

use thiserror::Error;

pub use app::{resolve_config, run, write_stats_csv, Cli, Command, Common, FilterArgs};
pub use commands::{
    cmd_decode, cmd_encode, cmd_filter, cmd_refine, cmd_stats, cmd_validate, Diagnostic, Run, StatsDocument,
    StatsRun, Summary,
};
pub use config::{ConfigFile, PipelineConfig, Strictness};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input(_) | CliError::Io { .. } => 1,
        }
    }
}

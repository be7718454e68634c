//! Command-line harness around `mannlab-core`: JSON configs, experiment
//! orchestration, and persisted traces and reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::Log;
pub use config::RunConfig;
pub use error::CliError;

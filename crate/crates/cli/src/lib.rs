//! Batch driver: configuration, subcommands and CSV output.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{run, Command, Outcome, RunError};
pub use config::{parse_config, parse_file, RunConfig, Scan};

//! Experiment runner for `eflux`: one subcommand per engine operation, driven by a TOML
//! config, writing CSV plus a run manifest.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Command, Output};
pub use config::RunConfig;
pub use error::CliError;

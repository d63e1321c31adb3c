//! Configuration and subcommands of the `boussinesq` binary.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::CliError;

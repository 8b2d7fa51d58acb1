//! Configuration loading and run orchestration for the `pqsp` command.

pub mod config;
pub mod error;
pub mod run;

pub use config::{load_config, Mode, RunConfig};
pub use error::CliError;
pub use run::{config_hash, run, RunOutcome};

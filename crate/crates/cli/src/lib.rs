//! Config-driven experiment runner on top of `flowkernel`.

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod suite;

pub use config::{ExperimentConfig, Kind, Overrides};
pub use error::CliError;
pub use run::{config_hash, run, RunOutcome};

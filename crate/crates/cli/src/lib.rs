//! Experiment harness for log-sum regularized sparse recovery.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Command, ExperimentConfig, Overrides, Solver};
pub use error::CliError;

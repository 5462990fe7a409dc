//! Experiment runner around the `efftemp` library: configuration and presets,
//! the spectrum cache, training runs, ITES sweeps and consolidated reports.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod sweep;

pub use error::{CliError, CliResult};

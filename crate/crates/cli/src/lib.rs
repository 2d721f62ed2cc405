//! Command-line front end: dataset generation and ingestion, the correlation
//! and sampling-strategy experiments, and CSV/JSON report emission.

pub mod commands;
pub mod error;
pub mod experiments;
pub mod generate;
pub mod matrix;
pub mod output;
pub mod readout;
pub mod targets;

pub use error::{CliError, Result};

//! Batch driver: reads a JSON run configuration, runs one command and writes
//! CSV, JSON and two-column data files.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{Command, RunConfig};
pub use error::{CliError, ErrorRecord};
pub use run::{run, RunOutcome};

//! Command-line runner for the Besov decomposition experiments: phantom and
//! data generation, sampler dispatch, and the output tables.

pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod phantom;
pub mod report;
pub mod run;

pub use error::{CliError, CliResult};

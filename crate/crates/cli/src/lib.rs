//! Command-line front end: trace synthesis, tokenization, plots, budget
//! accounting, saliency inspection and cycle-start scoring.

pub mod commands;
pub mod config;
pub mod error;
pub mod render;

pub use config::{ConfigFlags, RunConfig};
pub use error::{CliError, CliResult, ErrorKind};

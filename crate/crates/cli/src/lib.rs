//! Command-line front end: curve files, reports and subcommands.

pub mod commands;
pub mod error;
pub mod format;
pub mod report;

pub use commands::{run, Cli};
pub use error::CliError;

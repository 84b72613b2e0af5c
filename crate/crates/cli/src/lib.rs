//! Command-line harness for `rctm-core`: the problem catalog, suite
//! configuration files, CSV/JSON trace formats and the subcommands.

pub mod catalog;
pub mod commands;
pub mod config;
pub mod error;
pub mod trace_io;

pub use error::CliError;

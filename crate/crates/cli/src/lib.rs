//! Command-line front end for the `glbm` toolkit: configuration, reports and
//! the subcommands behind the `glbm` binary.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use cli::{run, Cli};
pub use error::{CliError, CliResult};

//! Command-line front end for the photon-production solvers: config
//! parsing, output files and the `run`, `sweep`, `wigner` and `verify`
//! commands.

pub mod app;
pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod sweep;
pub mod verify;

pub use error::{CliError, CliResult};

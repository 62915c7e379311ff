//! File formats, run configuration and pipeline stages behind the `excess`
//! command-line tool. All computation lives in `excess-core`.

pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use config::{Model, RunConfig, Subcommand};
pub use error::{CliError, Result};

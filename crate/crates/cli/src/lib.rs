//! Front end for the `eitmem` simulator: TOML configuration, subcommands and
//! CSV/JSON output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::RunConfig;
pub use error::{CliError, Result};

//! Command-line pipelines around `aeromap-core`: run configuration, file
//! formats and the `validate`, `synth`, `image` and `selftest` commands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod selftest;

pub use config::RunConfig;
pub use error::{CliError, CliResult};

//! Library half of the `pbgd` command: configuration, traces and the
//! subcommand implementations.

// `!(a <= b)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod style;
pub mod trace;

pub use error::{CliError, Result};

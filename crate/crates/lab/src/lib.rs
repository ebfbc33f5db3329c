//! Command-line laboratory on top of `css-core`: run configuration,
//! binary snapshots, CSV outputs and the experiment subcommands.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod snapshot;

pub use error::{exit, LabError, Result};

//! Experiment orchestration for the `gpca` command-line tool.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod records;

pub use commands::{run, Cli};

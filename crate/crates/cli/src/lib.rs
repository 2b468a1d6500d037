//! Command-line front end: flat key=value configuration files, built-in
//! initial conditions, run orchestration, and bit-stable CSV emission.

pub mod commands;
pub mod config;
pub mod csvio;

pub use config::{parse_config, IcSpec, RunConfig};

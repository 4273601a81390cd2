//! Experiment runner for the xbarsim simulator: configuration, seeded
//! execution of every protocol and CSV emission.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{reproduce, Check, Command, Report};
pub use config::ExperimentConfig;

//! Experiment configuration and the command pipeline behind the CLI.

pub mod commands;
pub mod config;

pub use commands::{Environment, Layout};
pub use config::ExperimentConfig;

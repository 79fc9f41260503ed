//! Configuration-driven batch runner for the `dyniter` splitting solver.

pub mod config;
pub mod experiment;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig};
pub use experiment::{check_config, emit_summary, run_experiment, ExperimentError, ExperimentOutcome};

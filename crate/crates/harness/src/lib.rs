//! Experiment harness: configs, the parallel sweep runner, CSV/JSON artifacts and the
//! acceptance suite behind the `klopt` CLI.

pub mod acceptance;
pub mod config;
pub mod experiments;
pub mod output;
pub mod runner;

pub use config::{parse_config, parse_config_str, ExperimentConfig, Kind, Point};
pub use output::ResultSummary;
pub use runner::run_experiment;

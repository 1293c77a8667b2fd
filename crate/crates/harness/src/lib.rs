//! Config-driven experiment runner for `zomax-core`.

pub mod build;
pub mod config;
pub mod experiment;
pub mod output;

pub use config::ExperimentConfig;
pub use experiment::{compare_study, mvi_study, run_config, run_experiment};
pub use output::{output_root, SummaryRow};

//! Command-line experiment runner.
//!
//! A JSON [`ExperimentConfig`] fully determines a run: model, lattice,
//! fields, temperatures, chemical potentials, ensemble, and numerical knobs.
//! [`validate_str`] reports every problem in one pass, [`run`] fans the
//! independent (parameter, seed) units over a thread pool and folds them in
//! declaration order, and every [`ResultRecord`] embeds the resolved
//! configuration with a fingerprint so a run can be reproduced bit for bit
//! from its own output.

pub mod args;
pub mod config;
pub mod experiments;
pub mod record;
pub mod runner;

pub use args::{Cli, Command, RunArgs};
pub use config::{
    model_info, validate_str, ExperimentConfig, ModelInfo, ValidationIssue, ValidationReport,
    EXPERIMENTS, MODELS,
};
pub use record::{ResultRecord, RunOutput, SeedValue};
pub use runner::{catalog, execute, run, run_str, run_with_workers};

//! Experiment driver: configuration, scheduling over charge sectors, CSV and
//! SVG outputs.

pub mod config;
pub mod output;
pub mod plot;
pub mod run;
pub mod tasks;

pub use config::{ConfigError, ExperimentConfig, Overrides, Task};
pub use run::{replay, resume, run, Execution, Outcome, RunError};

//! Experiment driver: configuration files, seeded parallel Monte Carlo runs,
//! CSV output and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod experiment;
pub mod output;

pub use acceptance::{AcceptOptions, Acceptance, CriterionResult};
pub use config::{ExperimentConfig, Params, Scheme, Sweep};
pub use experiment::{run_experiment, schema, ResultRow};
pub use output::{emit_csv, read_csv, write_run};

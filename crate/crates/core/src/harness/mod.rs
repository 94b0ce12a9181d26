//! Experiment orchestration.

pub mod checkpoint;
pub mod config;
pub mod run;
pub mod suite;

pub use checkpoint::{Checkpoint, ExperimentState, MnistData, CHECKPOINT_VERSION};
pub use config::{ExperimentConfig, ExperimentKind, OracleSuiteConfig, ResolvedConfig, TaskConfig};
pub use run::{resume, run_experiment, run_trial, ResumeOptions, RunSummary, TrialOutcome};
pub use suite::{run_oracle_suite, OracleSuiteReport};

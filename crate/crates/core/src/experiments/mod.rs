//! Configured runs, checkpointed output and run-to-run comparison.

pub mod config;
pub mod presets;
pub mod run;

pub use config::{emit_config, parse_config, ConfigError, ConfigViolation, ExperimentConfig, Model};
pub use run::{
    read_manifest, read_observables, resolve_output, run_experiment, run_into, run_oracle, ErrorRecord,
    Manifest, ObservableRow, RunError, RunOutcome, OUTPUT_ROOT_ENV,
};
pub mod compare;

pub use compare::{compare_runs, CheckpointMetrics, ComparisonReport};

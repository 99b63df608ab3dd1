//! Experiment runner for the nanosyn simulator: config handling, single runs,
//! one-layer baselines and parameter sweeps.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod sweep;

pub use config::{
    load_config, DeviceMode, ExperimentConfig, InputMode, Precision, ProjectionConfig, Seeds, Task,
};
pub use error::{CliError, CliResult};
pub use pipeline::{run_baseline_onelayer, run_experiment, write_outputs, MetricsRecord, System};
pub use sweep::{run_sweep, SweepAxis, SweepResult, SweepRow, SweepSpec};

//! Experiment orchestration on top of `kspace-core`: config parsing, the
//! active-sampling loop, tensor files, CSV metrics and SVG plots.

pub mod config;
pub mod experiment;
pub mod plot;
pub mod report;
pub mod tensor_file;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, run_experiment_with, run_trial};
pub use report::{emit_csv, read_csv, MetricsRow};
pub use tensor_file::{read_tensor, write_tensor};

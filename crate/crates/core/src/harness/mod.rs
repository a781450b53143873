//! Experiment configuration, orchestration, persistence and the command line.

pub mod cli;
pub mod config;
pub mod io;
pub mod run;

pub use config::{CSweep, ExperimentConfig, RandomWalkConfig, SamplerConfig, TargetSpec};
pub use run::{run_baseline, run_matrix, run_single, ChainRecord, MatrixOutcome, RunReport, SamplerKind, StepCounts};

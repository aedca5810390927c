//! Experiment configuration, drivers and result emission.

pub mod config;
pub mod experiment;
pub mod output;
pub mod seeds;
pub mod svg;

pub use config::{BaselineConfig, ConfigError, ExperimentConfig, ExperimentKind, PartitionConfig, Universe};
pub use experiment::{
    build_population, run, run_experiment1, run_experiment2, simulate, HarnessError, RunReport, Simulation,
    TableRecord,
};
pub use output::{emit_outputs, read_frequencies, report_dir, Summary};
pub use seeds::{derive_rng, Stream};

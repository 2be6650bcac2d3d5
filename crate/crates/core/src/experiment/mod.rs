//! Parameter sweeps reproducing the figure experiments: configuration
//! loading, presets, aggregation over replications, CSV tables and SVG
//! line charts.

mod config;
mod preset;
mod run;
pub mod svg;
mod table;

pub use config::{load_config, parse_config, ExperimentOptions, LoadedConfig};
pub use preset::{
    ExperimentPreset, Override, Param, Pipeline, PresetName, Scenario, Series, DEFAULT_REPLICATIONS,
    DEFAULT_VALIDATION_SAMPLES, FAST_REPLICATIONS,
};
pub use run::{compare_baselines, complete_sharing, optimize_once, run_experiment, violates, ExperimentOutput, RunOutcome};
pub use table::{metric_name, ResultRow, ResultTable, CSV_HEADER};

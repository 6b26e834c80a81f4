//! Benchmark harness for the base-stock learners: config parsing, replication
//! matrices, regret metrics, and CSV output.

// config validation rejects NaN through negated comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;

pub use config::{parse_config, ConfigError, ExperimentConfig, SegmentsSpec};
pub use experiment::{
    build_environment, run_experiment, runs_csv, summarize, trajectory_csv, HarnessError,
    RunRecord, SummaryRow,
};

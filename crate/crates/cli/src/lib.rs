//! Experiment harness behind the `isopt` command: configs, replication
//! summaries, CSV output and the benchmark reproductions.

// `!(x > 0.0)` guards deliberately reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csv;
pub mod expr;
pub mod harness;
pub mod reproduce;
pub mod specs;

pub use config::{ConfigError, EstimatorKind, ExperimentConfig, PluginMode, RawConfig};
pub use harness::{run, CliError, Experiment, Oracle, ReplicationSummary, RunOutput};

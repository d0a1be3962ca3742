//! Dataset ingestion, experiment orchestration and result emission for the
//! `fairwipe` command line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod output;

pub use config::{Arm, ExperimentConfig, SyntheticSource};
pub use error::{BenchError, Result};
pub use experiment::{make_splits, run_experiment, run_on_dataset, ResultRow, RowKind};
pub use manifest::{load_dataset, DatasetManifest, DatasetStats};
pub use output::{emit_results, Format};

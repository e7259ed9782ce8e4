//! End-to-end experiments: configuration, stratified splits, the cluster
//! count grid search, the full pipeline and run comparison.

mod config;
mod pipeline;
mod report;
mod split;

pub use config::{log_grid, normalize_key, ClassifierKind, ExperimentConfig};
pub use pipeline::{
    build_model, cluster_vocabulary, load_inputs, run_experiment, run_pipeline, train_and_evaluate,
    ExperimentInputs,
};
pub use report::{
    compare_runs, Comparison, ExperimentReport, GridPoint, SplitSummary, REPORT_VERSION,
};
pub use split::{split_dataset, split_indices, SplitIndices};

use crate::ErrorClass;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },
    #[error(
        "class `{class}` has {count} example(s), too few to split into train, validation and test"
    )]
    ClassTooSmall { class: String, count: usize },
    #[error("runs used different test splits (seeds {seed_a} and {seed_b}); refusing to compare")]
    SplitMismatch { seed_a: u64, seed_b: u64 },
    #[error("report: {0}")]
    Report(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<crate::Error>,
    },
    #[error("grid point k = {k} failed: {source}")]
    GridPoint {
        k: usize,
        #[source]
        source: Box<crate::Error>,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentError {
    pub fn class(&self) -> ErrorClass {
        match self {
            ExperimentError::InvalidConfig(_)
            | ExperimentError::UnknownKey(_)
            | ExperimentError::BadValue { .. }
            | ExperimentError::ConfigSyntax { .. } => ErrorClass::Usage,
            ExperimentError::Stage { source, .. } | ExperimentError::GridPoint { source, .. } => {
                source.class()
            }
            _ => ErrorClass::Data,
        }
    }
}

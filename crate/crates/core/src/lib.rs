//! Cluster-based semantic expansion for short-text classification.
//!
//! The pipeline trains Skip-Gram word vectors, groups the vectors of a task's
//! vocabulary with average-linkage hierarchical agglomerative clustering,
//! concatenates every word vector with the centroid of its cluster and feeds
//! the widened vectors to small CNN or LSTM classifiers.
//!
//! ```no_run
//! use wordcluster::experiment::{run_pipeline, ExperimentConfig};
//!
//! let mut config = ExperimentConfig::default();
//! config.set("dataset", "data/train.tsv").unwrap();
//! config.set("output_dir", "out").unwrap();
//! let report = run_pipeline(&config).unwrap();
//! println!("test accuracy {:.3}", report.test.accuracy);
//! ```

pub mod clustering;
pub mod corpus;
pub mod embedding;
mod error;
pub mod expansion;
pub mod experiment;
pub mod matrix;
pub mod nn;
pub mod synthetic;

pub use error::{Error, ErrorClass, Result};
pub use matrix::Matrix;

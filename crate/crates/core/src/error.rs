use std::io;

use crate::clustering::ClusterError;
use crate::corpus::CorpusError;
use crate::embedding::EmbeddingError;
use crate::expansion::ExpansionError;
use crate::experiment::ExperimentError;
use crate::nn::NnError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification of failures, used by the command line front-end to
/// pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Invalid configuration or arguments.
    Usage,
    /// Unreadable, malformed or inconsistent input data.
    Data,
    /// Training produced a non-finite value.
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Embedding(EmbeddingError::Diverged { .. }) => ErrorClass::Numeric,
            Error::Nn(NnError::NonFiniteLoss { .. }) => ErrorClass::Numeric,
            Error::Nn(NnError::Config(_)) => ErrorClass::Usage,
            Error::Embedding(EmbeddingError::InvalidConfig(_)) => ErrorClass::Usage,
            Error::Cluster(ClusterError::InvalidK { .. }) => ErrorClass::Usage,
            Error::Experiment(e) => e.class(),
            _ => ErrorClass::Data,
        }
    }
}

//! From-scratch CNN and LSTM short-text classifiers.
//!
//! Both models read a `max_len x width` matrix per example (see
//! [`crate::expansion::embed_sequence`]) and end in a softmax over classes.
//! Gradients are written by hand and verified against central differences by
//! [`gradient_check`].

mod checkpoint;
mod cnn;
mod gradcheck;
mod layers;
mod lstm;
mod metrics;
mod tensor;
mod train;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_TAG,
};
pub use cnn::{CnnClassifier, CnnConfig};
pub use gradcheck::{gradient_check, relative_error};
pub use lstm::{LstmClassifier, LstmConfig};
pub use metrics::{evaluate, Evaluation};
pub use tensor::Tensor;
pub use train::{train_classifier, EpochLog, TrainConfig, TrainLog};

use crate::expansion::EmbeddedSequence;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("invalid model or training configuration: {0}")]
    Config(String),
    #[error("input has width {found}, model expects {expected}")]
    InputWidth { expected: usize, found: usize },
    #[error("input has {found} time steps, model needs at least {min}")]
    InputLength { min: usize, found: usize },
    #[error("label {label} out of range for {num_classes} classes")]
    Label { label: usize, num_classes: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("checkpoint line {line}: {message}")]
    Checkpoint { line: usize, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Parameter gradients, aligned with [`Classifier::params`].
pub type Gradients = Vec<Tensor>;

pub trait Classifier: Sync {
    fn num_classes(&self) -> usize;

    fn input_width(&self) -> usize;

    /// Fewest time steps an input may have.
    fn min_len(&self) -> usize {
        1
    }

    /// Class probabilities for one example. Inputs must already be checked
    /// with [`Classifier::check_input`].
    fn predict(&self, x: &EmbeddedSequence) -> Vec<f64>;

    /// Adds the cross-entropy gradient of one example to `grads` and returns
    /// the loss and the predicted probabilities.
    fn accumulate_gradients(
        &self,
        x: &EmbeddedSequence,
        label: usize,
        grads: &mut Gradients,
    ) -> (f64, Vec<f64>);

    /// Named parameters in checkpoint order.
    fn params(&self) -> Vec<(String, &Tensor)>;

    fn params_mut(&mut self) -> Vec<&mut Tensor>;

    fn zero_gradients(&self) -> Gradients {
        self.params()
            .iter()
            .map(|(_, p)| Tensor::zeros(p.shape()))
            .collect()
    }

    fn parameter_count(&self) -> usize {
        self.params().iter().map(|(_, p)| p.len()).sum()
    }

    fn check_input(&self, x: &EmbeddedSequence) -> Result<(), NnError> {
        if x.rows.cols() != self.input_width() {
            return Err(NnError::InputWidth {
                expected: self.input_width(),
                found: x.rows.cols(),
            });
        }
        if x.rows.rows() < self.min_len() {
            return Err(NnError::InputLength {
                min: self.min_len(),
                found: x.rows.rows(),
            });
        }
        Ok(())
    }

    /// `B x num_classes` probabilities. Examples are scored in parallel.
    fn forward(&self, batch: &[EmbeddedSequence]) -> Result<Tensor, NnError> {
        use rayon::prelude::*;

        for x in batch {
            self.check_input(x)?;
        }
        let rows: Vec<Vec<f64>> = batch.par_iter().map(|x| self.predict(x)).collect();
        Ok(Tensor::from_vec(
            &[batch.len(), self.num_classes()],
            rows.into_iter().flatten().collect(),
        ))
    }
}

/// Either classifier, as stored in checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Cnn(CnnClassifier),
    Lstm(LstmClassifier),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Cnn(_) => "cnn",
            Model::Lstm(_) => "lstm",
        }
    }
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            Model::Cnn($m) => $e,
            Model::Lstm($m) => $e,
        }
    };
}

impl Classifier for Model {
    fn num_classes(&self) -> usize {
        dispatch!(self, m => m.num_classes())
    }

    fn input_width(&self) -> usize {
        dispatch!(self, m => m.input_width())
    }

    fn min_len(&self) -> usize {
        dispatch!(self, m => m.min_len())
    }

    fn predict(&self, x: &EmbeddedSequence) -> Vec<f64> {
        dispatch!(self, m => m.predict(x))
    }

    fn accumulate_gradients(
        &self,
        x: &EmbeddedSequence,
        label: usize,
        grads: &mut Gradients,
    ) -> (f64, Vec<f64>) {
        dispatch!(self, m => m.accumulate_gradients(x, label, grads))
    }

    fn params(&self) -> Vec<(String, &Tensor)> {
        dispatch!(self, m => m.params())
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        dispatch!(self, m => m.params_mut())
    }
}

/// Runs the CNN on a batch.
pub fn forward_cnn(model: &CnnClassifier, batch: &[EmbeddedSequence]) -> Result<Tensor, NnError> {
    model.forward(batch)
}

/// Runs the LSTM on a batch.
pub fn forward_lstm(model: &LstmClassifier, batch: &[EmbeddedSequence]) -> Result<Tensor, NnError> {
    model.forward(batch)
}

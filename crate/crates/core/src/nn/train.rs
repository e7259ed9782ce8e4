use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Classifier, NnError};
use crate::expansion::EmbeddedSequence;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 128,
            epochs: 30,
            learning_rate: 0.01,
            seed: 1,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.batch_size == 0 {
            return Err(NnError::Config("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(NnError::Config("learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean cross-entropy over the epoch's examples.
    pub mean_loss: f64,
    /// Accuracy of the predictions made while training.
    pub accuracy: f64,
    pub batch_losses: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn predicted_class(p: &[f64]) -> usize {
    argmax(p)
}

/// Mini-batch SGD on mean cross-entropy. Inputs are static; only model
/// parameters change. Deterministic for a fixed seed.
pub fn train_classifier<M: Classifier>(
    model: &mut M,
    inputs: &[EmbeddedSequence],
    labels: &[usize],
    config: &TrainConfig,
) -> Result<TrainLog, NnError> {
    config.validate()?;
    assert_eq!(inputs.len(), labels.len());
    if inputs.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    for x in inputs {
        model.check_input(x)?;
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= model.num_classes()) {
        return Err(NnError::Label {
            label,
            num_classes: model.num_classes(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut grads = model.zero_gradients();
    let mut log = TrainLog::default();

    for epoch in 1..=config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total_loss = 0.0;
        let mut correct = 0;
        let mut batch_losses = Vec::with_capacity(inputs.len().div_ceil(config.batch_size));
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            grads.iter_mut().for_each(|g| g.fill(0.0));
            let mut batch_loss = 0.0;
            for &i in batch {
                let (loss, probs) = model.accumulate_gradients(&inputs[i], labels[i], &mut grads);
                batch_loss += loss;
                if argmax(&probs) == labels[i] {
                    correct += 1;
                }
            }
            if !batch_loss.is_finite() {
                return Err(NnError::NonFiniteLoss {
                    epoch,
                    batch: b + 1,
                });
            }
            total_loss += batch_loss;
            batch_losses.push(batch_loss / batch.len() as f64);
            let step = -config.learning_rate / batch.len() as f64;
            for (p, g) in model.params_mut().into_iter().zip(&grads) {
                p.add_scaled(g, step);
            }
        }
        if model.params().iter().any(|(_, p)| !p.is_finite()) {
            return Err(NnError::NonFiniteLoss {
                epoch,
                batch: batch_losses.len(),
            });
        }
        let entry = EpochLog {
            epoch,
            mean_loss: total_loss / inputs.len() as f64,
            accuracy: correct as f64 / inputs.len() as f64,
            batch_losses,
        };
        log::debug!(
            "epoch {epoch}: loss {:.5}, train accuracy {:.4}",
            entry.mean_loss,
            entry.accuracy
        );
        log.epochs.push(entry);
    }
    Ok(log)
}

use super::train::predicted_class;
use super::{Classifier, NnError};
use crate::expansion::EmbeddedSequence;

/// Accuracy, per-class precision and recall, and the confusion matrix
/// (rows are true classes, columns predictions).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
}

/// Scores `model` with argmax predictions (ties go to the smaller class id).
/// Precision or recall of a class with no predictions or no examples is 0.
pub fn evaluate<M: Classifier>(
    model: &M,
    inputs: &[EmbeddedSequence],
    labels: &[usize],
) -> Result<Evaluation, NnError> {
    assert_eq!(inputs.len(), labels.len());
    if inputs.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let k = model.num_classes();
    if let Some(&label) = labels.iter().find(|&&l| l >= k) {
        return Err(NnError::Label {
            label,
            num_classes: k,
        });
    }
    let probs = model.forward(inputs)?;
    let mut confusion = vec![vec![0usize; k]; k];
    for (i, &label) in labels.iter().enumerate() {
        confusion[label][predicted_class(probs.row(i))] += 1;
    }
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = (0..k)
        .map(|c| ratio(confusion[c][c], (0..k).map(|r| confusion[r][c]).sum()))
        .collect();
    let recall = (0..k)
        .map(|c| ratio(confusion[c][c], confusion[c].iter().sum()))
        .collect();
    Ok(Evaluation {
        accuracy: ratio(correct, labels.len()),
        precision,
        recall,
        confusion,
        total: labels.len(),
    })
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ExperimentError;
use crate::corpus::LabeledDataset;

/// Example indices of each split part, ascending.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    /// FNV-1a hash of the test indices, used to recognise identical test
    /// sets across reports.
    pub fn test_fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for &i in &self.test {
            for b in (i as u64).to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        format!("{h:016x}")
    }
}

/// Stratified split: each class's examples are shuffled with one seeded
/// generator (classes in id order) and sliced into train, validation and
/// test. Validation and test each get `round(fraction * n)` examples, at
/// least one; training gets the rest and must also be non-empty.
pub fn split_indices(
    labels: &[usize],
    label_names: &[String],
    fractions: [f64; 3],
    seed: u64,
) -> Result<SplitIndices, ExperimentError> {
    if fractions.iter().any(|&f| !(f > 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(ExperimentError::InvalidConfig(format!(
            "split fractions must be positive and sum to 1, got {fractions:?}"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); label_names.len()];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = SplitIndices {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for (class, mut members) in by_class.into_iter().enumerate() {
        let n = members.len();
        let n_val = ((fractions[1] * n as f64).round() as usize).max(1);
        let n_test = ((fractions[2] * n as f64).round() as usize).max(1);
        if n < n_val + n_test + 1 {
            return Err(ExperimentError::ClassTooSmall {
                class: label_names[class].clone(),
                count: n,
            });
        }
        members.shuffle(&mut rng);
        let n_train = n - n_val - n_test;
        split.train.extend_from_slice(&members[..n_train]);
        split
            .validation
            .extend_from_slice(&members[n_train..n_train + n_val]);
        split.test.extend_from_slice(&members[n_train + n_val..]);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Splits a dataset into stratified train, validation and test parts.
pub fn split_dataset(
    dataset: &LabeledDataset,
    fractions: [f64; 3],
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset), ExperimentError> {
    let s = split_indices(&dataset.labels(), &dataset.label_names, fractions, seed)?;
    Ok((
        dataset.subset(&s.train),
        dataset.subset(&s.validation),
        dataset.subset(&s.test),
    ))
}

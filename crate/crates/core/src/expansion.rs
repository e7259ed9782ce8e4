//! Word-cluster embeddings: each word vector followed by its cluster centroid.

use crate::clustering::ClusterAssignment;
use crate::corpus::{LabeledDataset, Vocabulary};
use crate::embedding::EmbeddingMatrix;
use crate::matrix::Matrix;

#[derive(Debug, thiserror::Error)]
pub enum ExpansionError {
    #[error("clustered word `{0}` has no embedding")]
    MissingWord(String),
    #[error("centroid width {centroid} does not match embedding width {embedding}")]
    WidthMismatch { embedding: usize, centroid: usize },
    #[error("max_len must be at least 1")]
    ZeroLength,
}

/// `|V| x 2d` table of concatenated word and centroid vectors, indexed like
/// the source embedding vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct WordClusterMatrix {
    word_dim: usize,
    rows: Matrix,
    vocabulary: Vocabulary,
    clustered: Vec<bool>,
}

impl WordClusterMatrix {
    /// Width of each row (twice the word vector width).
    pub fn dim(&self) -> usize {
        2 * self.word_dim
    }

    pub fn word_dim(&self) -> usize {
        self.word_dim
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn is_clustered(&self, id: usize) -> bool {
        self.clustered[id]
    }

    pub fn into_rows(self) -> Matrix {
        self.rows
    }
}

/// Concatenates every word vector with its cluster centroid. Words that were
/// not clustered get a zero centroid half.
pub fn expand(
    emb: &EmbeddingMatrix,
    assign: &ClusterAssignment,
) -> Result<WordClusterMatrix, ExpansionError> {
    let d = emb.dim();
    if assign.centroids.cols() != d {
        return Err(ExpansionError::WidthMismatch {
            embedding: d,
            centroid: assign.centroids.cols(),
        });
    }
    let mut rows = Matrix::zeros(emb.len(), 2 * d);
    for id in 0..emb.len() {
        rows.row_mut(id)[..d].copy_from_slice(emb.input.row(id));
    }
    let mut clustered = vec![false; emb.len()];
    for (word, &c) in assign.words.iter().zip(&assign.assign) {
        let id = emb
            .vocabulary()
            .id(word)
            .ok_or_else(|| ExpansionError::MissingWord(word.clone()))?;
        rows.row_mut(id)[d..].copy_from_slice(assign.centroids.row(c));
        clustered[id] = true;
    }
    Ok(WordClusterMatrix {
        word_dim: d,
        rows,
        vocabulary: emb.vocabulary().clone(),
        clustered,
    })
}

/// A fixed-length input sequence with its validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSequence {
    /// `max_len x width`
    pub rows: Matrix,
    /// `true` for positions holding a real token
    pub mask: Vec<bool>,
}

impl EmbeddedSequence {
    pub fn valid_len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Looks up each token in `table`. Ids outside the table (the OOV marker)
/// give zero rows. The sequence is truncated or zero-padded at the tail to
/// `max_len`.
pub fn embed_sequence(
    tokens: &[usize],
    table: &Matrix,
    max_len: usize,
) -> Result<EmbeddedSequence, ExpansionError> {
    if max_len == 0 {
        return Err(ExpansionError::ZeroLength);
    }
    let mut rows = Matrix::zeros(max_len, table.cols());
    let mut mask = vec![false; max_len];
    for (t, &id) in tokens.iter().take(max_len).enumerate() {
        mask[t] = true;
        if id < table.rows() {
            rows.row_mut(t).copy_from_slice(table.row(id));
        }
    }
    Ok(EmbeddedSequence { rows, mask })
}

/// Embeds every example of a dataset, returning sequences and labels.
pub fn embed_dataset(
    dataset: &LabeledDataset,
    table: &Matrix,
    max_len: usize,
) -> Result<(Vec<EmbeddedSequence>, Vec<usize>), ExpansionError> {
    let mut inputs = Vec::with_capacity(dataset.len());
    for ex in &dataset.examples {
        inputs.push(embed_sequence(&ex.tokens, table, max_len)?);
    }
    Ok((inputs, dataset.labels()))
}

//! Skip-Gram word embeddings and the plain-text vector file format.
//!
//! The model keeps two matrices: input vectors (one per center word, the
//! vectors exported downstream) and output vectors (one per context word).
//! The probability of a context word given a center word is the softmax of
//! `output[context] . input[center]` over the whole vocabulary, and training
//! maximises the average log probability of every in-window pair.
//!
//! Exact softmax is the default. Negative sampling is available as an
//! approximation for larger vocabularies.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{TokenizedCorpus, Vocabulary, TERM_JOINER};
use crate::matrix::{dot, Matrix};

/// Stand-in for spaces inside merged dictionary terms when words are written
/// to a space-separated file.
const FILE_JOINER: char = '\u{2581}';

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("invalid skip-gram configuration: {0}")]
    InvalidConfig(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary needs at least two words, found {0}")]
    VocabularyTooSmall(usize),
    #[error("training diverged in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("line {line}: malformed header, expected `<vocab_size> <dim>`")]
    MalformedHeader { line: usize },
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: invalid number `{value}`")]
    InvalidNumber { line: usize, value: String },
    #[error("line {line}: duplicate word `{word}`")]
    DuplicateWord { line: usize, word: String },
    #[error("header declares {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

type Result<T> = std::result::Result<T, EmbeddingError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TrainingMode {
    /// Full-vocabulary softmax.
    ExactSoftmax,
    /// Logistic loss against the true context and `negatives` noise words
    /// drawn from the unigram distribution raised to 0.75.
    NegativeSampling { negatives: usize },
}

impl std::fmt::Display for TrainingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainingMode::ExactSoftmax => write!(f, "softmax"),
            TrainingMode::NegativeSampling { negatives } => write!(f, "neg:{negatives}"),
        }
    }
}

impl std::str::FromStr for TrainingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "softmax" | "exact" => Ok(TrainingMode::ExactSoftmax),
            _ => s
                .strip_prefix("neg:")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k > 0)
                .map(|negatives| TrainingMode::NegativeSampling { negatives })
                .ok_or_else(|| {
                    format!("unknown skip-gram mode `{s}` (use `softmax` or `neg:<k>`)")
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SkipGramConfig {
    pub window: usize,
    pub dim: usize,
    pub epochs: usize,
    /// Starting learning rate, decayed linearly to `min_learning_rate` over
    /// all training pairs.
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub seed: u64,
    pub mode: TrainingMode,
    /// Evaluate the exact corpus objective after every epoch.
    pub track_objective: bool,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            window: 2,
            dim: 50,
            epochs: 15,
            learning_rate: 0.025,
            min_learning_rate: 0.0001,
            seed: 1,
            mode: TrainingMode::ExactSoftmax,
            track_objective: true,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(EmbeddingError::InvalidConfig(m.to_string()));
        if self.window < 1 {
            return bad("window must be >= 1");
        }
        if self.dim < 1 {
            return bad("dim must be >= 1");
        }
        if self.epochs < 1 {
            return bad("epochs must be >= 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if !(self.min_learning_rate >= 0.0) || self.min_learning_rate > self.learning_rate {
            return bad("min_learning_rate must lie in [0, learning_rate]");
        }
        if let TrainingMode::NegativeSampling { negatives: 0 } = self.mode {
            return bad("negative sampling needs at least one negative");
        }
        Ok(())
    }
}

/// Input and output vectors for every vocabulary word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    pub input: Matrix,
    pub output: Matrix,
    vocabulary: Vocabulary,
}

impl EmbeddingMatrix {
    /// Panics if the matrices do not have `vocabulary.len()` rows of equal
    /// width.
    pub fn new(vocabulary: Vocabulary, input: Matrix, output: Matrix) -> Self {
        assert_eq!(input.rows(), vocabulary.len());
        assert_eq!(output.rows(), vocabulary.len());
        assert_eq!(input.cols(), output.cols());
        EmbeddingMatrix {
            dim: input.cols(),
            input,
            output,
            vocabulary,
        }
    }

    pub fn zeros(vocabulary: Vocabulary, dim: usize) -> Self {
        let n = vocabulary.len();
        Self::new(vocabulary, Matrix::zeros(n, dim), Matrix::zeros(n, dim))
    }

    /// Uniform initialisation in `[-0.5/dim, 0.5/dim]` for both matrices.
    pub fn random(vocabulary: Vocabulary, dim: usize, rng: &mut impl Rng) -> Self {
        let n = vocabulary.len();
        let bound = 0.5 / dim as f64;
        let mut draw = || -> Matrix {
            let data = (0..n * dim)
                .map(|_| rng.gen_range(-bound..=bound))
                .collect();
            Matrix::from_vec(n, dim, data)
        };
        let input = draw();
        let output = draw();
        Self::new(vocabulary, input, output)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    /// Input vector of `word`, if known.
    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.vocabulary.id(word).map(|id| self.input.row(id))
    }

    pub fn is_finite(&self) -> bool {
        self.input.is_finite() && self.output.is_finite()
    }
}

fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}

/// Distribution over context words for one center word.
pub fn context_distribution(center: usize, emb: &EmbeddingMatrix) -> Vec<f64> {
    let h = emb.input.row(center);
    let mut scores: Vec<f64> = emb.output.iter_rows().map(|o| dot(o, h)).collect();
    softmax_in_place(&mut scores);
    scores
}

/// `p(context | center)` under the full softmax.
pub fn softmax_probability(center: usize, context: usize, emb: &EmbeddingMatrix) -> f64 {
    context_distribution(center, emb)[context]
}

/// Log of `p(context | center)`, computed with log-sum-exp.
pub fn log_probability(center: usize, context: usize, emb: &EmbeddingMatrix) -> f64 {
    let h = emb.input.row(center);
    let scores: Vec<f64> = emb.output.iter_rows().map(|o| dot(o, h)).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    scores[context] - lse
}

fn for_each_pair(corpus: &TokenizedCorpus, window: usize, mut f: impl FnMut(usize, usize)) {
    for sentence in corpus.sentences() {
        for (t, &center) in sentence.iter().enumerate() {
            let lo = t.saturating_sub(window);
            let hi = (t + window).min(sentence.len() - 1);
            for (j, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                if j != t {
                    f(center, context);
                }
            }
        }
    }
}

fn pair_count(corpus: &TokenizedCorpus, window: usize) -> usize {
    let mut n = 0;
    for_each_pair(corpus, window, |_, _| n += 1);
    n
}

/// Average log probability of all in-window (center, context) pairs, divided
/// by the number of tokens. Pairs never cross sentence boundaries. A corpus
/// with no pairs scores 0.
pub fn corpus_objective(
    corpus: &TokenizedCorpus,
    emb: &EmbeddingMatrix,
    window: usize,
) -> Result<f64> {
    if corpus.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    if window < 1 {
        return Err(EmbeddingError::InvalidConfig("window must be >= 1".into()));
    }
    // One softmax per distinct center word.
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; emb.len()];
    let mut total = 0.0;
    let mut pairs = 0usize;
    for_each_pair(corpus, window, |c, o| {
        let dist = cache[c].get_or_insert_with(|| {
            let h = emb.input.row(c);
            let scores: Vec<f64> = emb.output.iter_rows().map(|row| dot(row, h)).collect();
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
            scores.into_iter().map(|s| s - lse).collect()
        });
        total += dist[o];
        pairs += 1;
    });
    if pairs == 0 {
        log::warn!("corpus has no in-window pairs; objective defined as 0");
        return Ok(0.0);
    }
    Ok(total / corpus.token_count() as f64)
}

/// Gradient of one pair's log-likelihood with respect to the center word's
/// input vector and the full output matrix.
#[derive(Debug, Clone)]
pub struct PairGradient {
    pub input: Vec<f64>,
    pub output: Matrix,
}

/// Gradient of `log p(context | center)` under the full softmax.
pub fn softmax_pair_gradient(emb: &EmbeddingMatrix, center: usize, context: usize) -> PairGradient {
    let h = emb.input.row(center);
    let p = context_distribution(center, emb);
    let d = emb.dim();
    let mut d_input = emb.output.row(context).to_vec();
    let mut d_output = Matrix::zeros(emb.len(), d);
    for (w, &pw) in p.iter().enumerate() {
        let out_w = emb.output.row(w);
        for k in 0..d {
            d_input[k] -= pw * out_w[k];
        }
        let coeff = if w == context { 1.0 - pw } else { -pw };
        for (g, &hk) in d_output.row_mut(w).iter_mut().zip(h) {
            *g = coeff * hk;
        }
    }
    PairGradient {
        input: d_input,
        output: d_output,
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Negative-sampling objective of one pair:
/// `log s(out[context].h) + sum_n log s(-out[n].h)` with `h = input[center]`.
pub fn negative_sampling_objective(
    emb: &EmbeddingMatrix,
    center: usize,
    context: usize,
    negatives: &[usize],
) -> f64 {
    let h = emb.input.row(center);
    let mut value = log_sigmoid(dot(emb.output.row(context), h));
    for &n in negatives {
        value += log_sigmoid(-dot(emb.output.row(n), h));
    }
    value
}

/// Gradient of [`negative_sampling_objective`].
pub fn negative_sampling_gradient(
    emb: &EmbeddingMatrix,
    center: usize,
    context: usize,
    negatives: &[usize],
) -> PairGradient {
    let h = emb.input.row(center);
    let d = emb.dim();
    let mut d_input = vec![0.0; d];
    let mut d_output = Matrix::zeros(emb.len(), d);
    let targets = std::iter::once((context, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
    for (target, label) in targets {
        let out_t = emb.output.row(target);
        let g = label - sigmoid(dot(out_t, h));
        for k in 0..d {
            d_input[k] += g * out_t[k];
        }
        for (o, &hk) in d_output.row_mut(target).iter_mut().zip(h) {
            *o += g * hk;
        }
    }
    PairGradient {
        input: d_input,
        output: d_output,
    }
}

/// Trained vectors with the per-epoch corpus objective (empty when objective
/// tracking is disabled).
#[derive(Debug, Clone)]
pub struct TrainedEmbeddings {
    pub embeddings: EmbeddingMatrix,
    pub epoch_objectives: Vec<f64>,
}

struct NoiseSampler {
    dist: WeightedIndex<f64>,
}

impl NoiseSampler {
    fn new(vocab: &Vocabulary) -> Self {
        let weights: Vec<f64> = vocab
            .counts()
            .iter()
            .map(|&c| (c as f64).powf(0.75))
            .collect();
        NoiseSampler {
            dist: WeightedIndex::new(weights).expect("positive counts"),
        }
    }
}

/// Trains Skip-Gram vectors by stochastic gradient ascent over every
/// in-window pair, visiting sentences in corpus order. Deterministic for a
/// fixed seed.
pub fn train_skipgram(
    corpus: &TokenizedCorpus,
    config: &SkipGramConfig,
) -> Result<TrainedEmbeddings> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let vocab = corpus.vocabulary();
    if vocab.len() < 2 {
        return Err(EmbeddingError::VocabularyTooSmall(vocab.len()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut emb = EmbeddingMatrix::random(vocab.clone(), config.dim, &mut rng);
    let noise = match config.mode {
        TrainingMode::NegativeSampling { .. } => Some(NoiseSampler::new(vocab)),
        TrainingMode::ExactSoftmax => None,
    };

    let total_pairs = (pair_count(corpus, config.window) * config.epochs).max(1);
    let d = config.dim;
    let mut seen = 0usize;
    let mut scores = vec![0.0; vocab.len()];
    let mut grad_h = vec![0.0; d];
    let mut negatives = Vec::new();
    let mut objectives = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        for_each_pair(corpus, config.window, |center, context| {
            let progress = seen as f64 / total_pairs as f64;
            let lr = (config.learning_rate * (1.0 - progress)).max(config.min_learning_rate);
            seen += 1;
            grad_h.iter_mut().for_each(|g| *g = 0.0);

            match (&noise, config.mode) {
                (Some(noise), TrainingMode::NegativeSampling { negatives: k }) => {
                    negatives.clear();
                    while negatives.len() < k {
                        let n = noise.dist.sample(&mut rng);
                        if n != context {
                            negatives.push(n);
                        }
                    }
                    let h = emb.input.row(center).to_vec();
                    let targets =
                        std::iter::once((context, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
                    for (target, label) in targets {
                        let out_t = emb.output.row_mut(target);
                        let g = lr * (label - sigmoid(dot(out_t, &h)));
                        for k in 0..d {
                            grad_h[k] += g * out_t[k];
                            out_t[k] += g * h[k];
                        }
                    }
                }
                _ => {
                    let h = emb.input.row(center).to_vec();
                    for (s, o) in scores.iter_mut().zip(emb.output.iter_rows()) {
                        *s = dot(o, &h);
                    }
                    softmax_in_place(&mut scores);
                    for (w, &pw) in scores.iter().enumerate() {
                        let coeff = if w == context { 1.0 - pw } else { -pw };
                        let out_w = emb.output.row_mut(w);
                        for k in 0..d {
                            grad_h[k] += coeff * out_w[k];
                            out_w[k] += lr * coeff * h[k];
                        }
                    }
                    grad_h.iter_mut().for_each(|g| *g *= lr);
                }
            }
            for (x, g) in emb.input.row_mut(center).iter_mut().zip(&grad_h) {
                *x += g;
            }
        });

        if !emb.is_finite() {
            return Err(EmbeddingError::Diverged { epoch });
        }
        if config.track_objective {
            let objective = corpus_objective(corpus, &emb, config.window)?;
            if !objective.is_finite() {
                return Err(EmbeddingError::Diverged { epoch });
            }
            log::debug!("skip-gram epoch {epoch}: objective {objective:.6}");
            objectives.push(objective);
        }
    }

    Ok(TrainedEmbeddings {
        embeddings: emb,
        epoch_objectives: objectives,
    })
}

fn io_error(path: &Path) -> impl Fn(io::Error) -> EmbeddingError + '_ {
    move |source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `<rows> <cols>` followed by one `<word> <v1> ... <vd>` line per
/// row, each value with 8 significant digits.
pub fn write_vectors<W: Write>(
    writer: &mut W,
    words: &[String],
    vectors: &Matrix,
) -> io::Result<()> {
    assert_eq!(words.len(), vectors.rows());
    writeln!(writer, "{} {}", vectors.rows(), vectors.cols())?;
    for (word, row) in words.iter().zip(vectors.iter_rows()) {
        write!(
            writer,
            "{}",
            word.replace(TERM_JOINER, &FILE_JOINER.to_string())
        )?;
        for v in row {
            write!(writer, " {v:.7e}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

/// Reads the format produced by [`write_vectors`].
pub fn read_vectors<R: BufRead>(reader: R) -> Result<(Vec<String>, Matrix)> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(io_error(Path::new("<reader>")))?,
        None => return Err(EmbeddingError::MalformedHeader { line: 1 }),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (rows, dim) = match fields.as_slice() {
        [r, d] => match (r.parse::<usize>(), d.parse::<usize>()) {
            (Ok(r), Ok(d)) if d > 0 => (r, d),
            _ => return Err(EmbeddingError::MalformedHeader { line: 1 }),
        },
        _ => return Err(EmbeddingError::MalformedHeader { line: 1 }),
    };

    let mut words: Vec<String> = Vec::with_capacity(rows);
    let mut seen = std::collections::HashSet::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * dim);
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(io_error(Path::new("<reader>")))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts
            .next()
            .unwrap_or_default()
            .replace(FILE_JOINER, TERM_JOINER);
        let values: Vec<&str> = parts.collect();
        if values.len() != dim {
            return Err(EmbeddingError::DimensionMismatch {
                line: line_no,
                expected: dim,
                found: values.len(),
            });
        }
        for v in values {
            let x: f64 = v.parse().map_err(|_| EmbeddingError::InvalidNumber {
                line: line_no,
                value: v.to_string(),
            })?;
            data.push(x);
        }
        if !seen.insert(word.clone()) {
            return Err(EmbeddingError::DuplicateWord {
                line: line_no,
                word,
            });
        }
        words.push(word);
    }
    if words.len() != rows {
        return Err(EmbeddingError::RowCount {
            expected: rows,
            found: words.len(),
        });
    }
    Ok((words, Matrix::from_vec(rows, dim, data)))
}

/// Saves the input vectors. Output vectors are not persisted.
pub fn save_embeddings(emb: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_error(path))?;
    let mut w = BufWriter::new(file);
    write_vectors(&mut w, emb.vocabulary().words(), &emb.input)
        .and_then(|_| w.flush())
        .map_err(io_error(path))
}

/// Loads vectors saved by [`save_embeddings`]. The result carries its own
/// vocabulary (file order, counts unknown) and zero output vectors.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_error(path))?;
    let (words, input) = read_vectors(BufReader::new(file))?;
    let vocab = Vocabulary::from_words(words).expect("duplicates rejected while parsing");
    let output = Matrix::zeros(input.rows(), input.cols());
    Ok(EmbeddingMatrix::new(vocab, input, output))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;

    fn vocab(n: usize) -> Vocabulary {
        Vocabulary::from_words((0..n).map(|i| format!("w{i}")).collect()).unwrap()
    }

    #[test]
    fn zero_matrices_give_uniform_probability() {
        let emb = EmbeddingMatrix::zeros(vocab(4), 3);
        for c in 0..4 {
            for o in 0..4 {
                assert!((softmax_probability(c, o, &emb) - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn hand_computed_softmax() {
        // h = (1, 2); outputs (1,0), (0,1), (1,1) give scores 1, 2, 3.
        let input = Matrix::from_rows(&[[1.0, 2.0], [0.0, 0.0], [0.0, 0.0]]);
        let output = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let emb = EmbeddingMatrix::new(vocab(3), input, output);
        let z = 1f64.exp() + 2f64.exp() + 3f64.exp();
        // 0.09003057317038046 = e / (e + e^2 + e^3)
        assert!((softmax_probability(0, 0, &emb) - 0.090_030_573_170_380_46).abs() < 1e-15);
        assert!((softmax_probability(0, 2, &emb) - 3f64.exp() / z).abs() < 1e-15);
        assert!((log_probability(0, 1, &emb) - (2.0 - z.ln())).abs() < 1e-12);
    }

    #[test]
    fn distribution_sums_to_one_with_large_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut emb = EmbeddingMatrix::random(vocab(7), 4, &mut rng);
        emb.input
            .as_mut_slice()
            .iter_mut()
            .for_each(|x| *x *= 5000.0);
        emb.output
            .as_mut_slice()
            .iter_mut()
            .for_each(|x| *x *= 5000.0);
        for c in 0..7 {
            let p = context_distribution(c, &emb);
            assert!(p.iter().all(|&x| x >= 0.0 && x.is_finite()));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn objective_of_two_word_sentence() {
        let sents = vec![vec!["a".to_string(), "b".to_string()]];
        let v = build_vocabulary(&sents, 1).unwrap();
        let corpus = TokenizedCorpus::new(&sents, v.clone());
        let emb = EmbeddingMatrix::zeros(v, 2);
        let j = corpus_objective(&corpus, &emb, 1).unwrap();
        assert!((j - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn objective_without_pairs_is_zero() {
        let sents = vec![vec!["a".to_string()]];
        let v = build_vocabulary(&sents, 1).unwrap();
        let corpus = TokenizedCorpus::new(&sents, v.clone());
        let emb = EmbeddingMatrix::zeros(v, 2);
        assert_eq!(corpus_objective(&corpus, &emb, 3).unwrap(), 0.0);
    }

    #[test]
    fn objective_of_empty_corpus_is_error() {
        let corpus = TokenizedCorpus::from_ids(vec![], vocab(2));
        let emb = EmbeddingMatrix::zeros(vocab(2), 2);
        assert!(matches!(
            corpus_objective(&corpus, &emb, 1),
            Err(EmbeddingError::EmptyCorpus)
        ));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(
            "softmax".parse::<TrainingMode>().unwrap(),
            TrainingMode::ExactSoftmax
        );
        assert_eq!(
            "neg:5".parse::<TrainingMode>().unwrap(),
            TrainingMode::NegativeSampling { negatives: 5 }
        );
        assert!("neg:0".parse::<TrainingMode>().is_err());
        assert!("hs".parse::<TrainingMode>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = SkipGramConfig::default();
        assert!(c.validate().is_ok());
        c.window = 0;
        assert!(c.validate().is_err());
        c = SkipGramConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn header_and_row_errors() {
        let bad_row = "3 2\na 1 2\nb 1 2 3\nc 0 0\n";
        assert!(matches!(
            read_vectors(bad_row.as_bytes()),
            Err(EmbeddingError::DimensionMismatch {
                line: 3,
                expected: 2,
                found: 3
            })
        ));
        assert!(matches!(
            read_vectors("3\n".as_bytes()),
            Err(EmbeddingError::MalformedHeader { line: 1 })
        ));
        assert!(matches!(
            read_vectors("2 1\na 1\na 2\n".as_bytes()),
            Err(EmbeddingError::DuplicateWord { line: 3, .. })
        ));
        assert!(matches!(
            read_vectors("2 1\na x\n".as_bytes()),
            Err(EmbeddingError::InvalidNumber { line: 2, .. })
        ));
        assert!(matches!(
            read_vectors("2 1\na 1\n".as_bytes()),
            Err(EmbeddingError::RowCount {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn multiword_terms_survive_the_file_format() {
        let words = vec!["acute brain syndrome".to_string(), "onset".to_string()];
        let m = Matrix::from_rows(&[[0.5], [-0.25]]);
        let mut buf = Vec::new();
        write_vectors(&mut buf, &words, &m).unwrap();
        let (w, back) = read_vectors(buf.as_slice()).unwrap();
        assert_eq!(w, words);
        assert_eq!(back, m);
    }
}

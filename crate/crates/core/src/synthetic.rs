//! Seeded synthetic data with planted topic structure.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::TokenizedExample;
use crate::expansion::EmbeddedSequence;
use crate::matrix::Matrix;

pub fn topic_word(topic: usize, i: usize) -> String {
    format!("t{topic}w{i}")
}

pub fn filler_word(i: usize) -> String {
    format!("f{i}")
}

pub fn class_label(topic: usize) -> String {
    format!("c{topic}")
}

/// Settings for [`topic_benchmark`].
#[derive(Debug, Clone, PartialEq)]
pub struct TopicBenchmarkConfig {
    pub classes: usize,
    pub words_per_topic: usize,
    pub filler_words: usize,
    pub corpus_sentences: usize,
    pub train_examples: usize,
    pub test_examples: usize,
    /// Inclusive sentence length range.
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that an unlabeled corpus token is a topic word.
    pub corpus_topic_rate: f64,
    /// Topic words per labeled sentence; the rest are fillers.
    pub topic_tokens: usize,
    /// Zipf exponent of the topic-word distribution in the labeled training
    /// sentences. Test sentences draw topic words uniformly.
    pub train_skew: f64,
    pub seed: u64,
}

impl Default for TopicBenchmarkConfig {
    fn default() -> Self {
        TopicBenchmarkConfig {
            classes: 3,
            words_per_topic: 30,
            filler_words: 20,
            corpus_sentences: 2000,
            train_examples: 600,
            test_examples: 150,
            min_len: 6,
            max_len: 10,
            corpus_topic_rate: 0.4,
            topic_tokens: 1,
            train_skew: 1.5,
            seed: 1,
        }
    }
}

/// Unlabeled corpus plus labeled train and test splits in which each class
/// owns one topic vocabulary.
#[derive(Debug, Clone)]
pub struct TopicBenchmark {
    pub corpus: Vec<Vec<String>>,
    pub train: Vec<TokenizedExample>,
    pub test: Vec<TokenizedExample>,
    pub topics: Vec<Vec<String>>,
}

fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    (1..=n).map(|r| (r as f64).powf(-s)).collect()
}

fn labeled<R: Rng>(
    config: &TopicBenchmarkConfig,
    count: usize,
    weights: &[f64],
    rng: &mut R,
) -> Vec<TokenizedExample> {
    let dist = rand::distributions::WeightedIndex::new(weights).expect("positive weights");
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let topic = i % config.classes;
        let len = rng
            .gen_range(config.min_len..=config.max_len)
            .max(config.topic_tokens);
        let mut tokens: Vec<String> = (0..config.topic_tokens)
            .map(|_| topic_word(topic, rng.sample(&dist)))
            .collect();
        while tokens.len() < len {
            tokens.push(filler_word(rng.gen_range(0..config.filler_words)));
        }
        tokens.shuffle(rng);
        out.push(TokenizedExample::new(class_label(topic), tokens));
    }
    out.shuffle(rng);
    out
}

pub fn topic_benchmark(config: &TopicBenchmarkConfig) -> TopicBenchmark {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let topics: Vec<Vec<String>> = (0..config.classes)
        .map(|t| {
            (0..config.words_per_topic)
                .map(|i| topic_word(t, i))
                .collect()
        })
        .collect();

    let mut corpus = Vec::with_capacity(config.corpus_sentences);
    for _ in 0..config.corpus_sentences {
        let topic = rng.gen_range(0..config.classes);
        let len = rng.gen_range(config.min_len..=config.max_len);
        let sentence = (0..len)
            .map(|_| {
                if rng.gen_bool(config.corpus_topic_rate) {
                    topics[topic][rng.gen_range(0..config.words_per_topic)].clone()
                } else {
                    filler_word(rng.gen_range(0..config.filler_words))
                }
            })
            .collect();
        corpus.push(sentence);
    }

    let skewed = zipf_weights(config.words_per_topic, config.train_skew);
    let uniform = vec![1.0; config.words_per_topic];
    let train = labeled(config, config.train_examples, &skewed, &mut rng);
    let test = labeled(config, config.test_examples, &uniform, &mut rng);
    TopicBenchmark {
        corpus,
        train,
        test,
        topics,
    }
}

/// `sentences` sentences, each drawn entirely from one of two disjoint
/// vocabularies of `words_per_topic` words.
pub fn two_topic_corpus(
    sentences: usize,
    words_per_topic: usize,
    len: usize,
    seed: u64,
) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..sentences)
        .map(|i| {
            let topic = i % 2;
            (0..len)
                .map(|_| topic_word(topic, rng.gen_range(0..words_per_topic)))
                .collect()
        })
        .collect()
}

/// Twenty short sequences in two classes, separable by the sign of the first
/// input feature at every valid step.
pub fn toy_sequences(
    width: usize,
    max_len: usize,
    seed: u64,
) -> (Vec<EmbeddedSequence>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(20);
    let mut labels = Vec::with_capacity(20);
    for i in 0..20 {
        let label = i % 2;
        let valid = rng.gen_range(max_len.div_ceil(2)..=max_len);
        let mut rows = Matrix::zeros(max_len, width);
        for t in 0..valid {
            let row = rows.row_mut(t);
            for v in row.iter_mut() {
                *v = rng.gen_range(-0.5..0.5);
            }
            let magnitude = rng.gen_range(0.5..1.5);
            row[0] = if label == 0 { magnitude } else { -magnitude };
        }
        let mask = (0..max_len).map(|t| t < valid).collect();
        inputs.push(EmbeddedSequence { rows, mask });
        labels.push(label);
    }
    (inputs, labels)
}

use wordcluster::clustering::pair_similarity;
use wordcluster::corpus::{build_vocabulary, TokenizedCorpus};
use wordcluster::embedding::{train_skipgram, SkipGramConfig, TrainingMode};
use wordcluster::synthetic::{topic_word, two_topic_corpus};

fn corpus(sentences: usize, words_per_topic: usize, seed: u64) -> TokenizedCorpus {
    let text = two_topic_corpus(sentences, words_per_topic, 6, seed);
    let vocab = build_vocabulary(&text, 1).unwrap();
    TokenizedCorpus::new(&text, vocab)
}

#[test]
fn exact_objective_never_decreases() {
    // 50 distinct words
    let c = corpus(60, 25, 1);
    assert_eq!(c.vocabulary().len(), 50);
    let config = SkipGramConfig {
        dim: 10,
        epochs: 12,
        learning_rate: 0.05,
        seed: 4,
        ..SkipGramConfig::default()
    };
    let trained = train_skipgram(&c, &config).unwrap();
    let obj = &trained.epoch_objectives;
    assert_eq!(obj.len(), 12);
    for w in obj.windows(2) {
        assert!(w[1] >= w[0] - 1e-6, "{obj:?}");
    }
    assert!(obj.iter().all(|&v| v <= 0.0));
    assert!(obj[obj.len() - 1] > obj[0]);
}

#[test]
fn same_seed_gives_identical_vectors() {
    let c = corpus(40, 10, 2);
    for mode in [
        TrainingMode::ExactSoftmax,
        TrainingMode::NegativeSampling { negatives: 3 },
    ] {
        let config = SkipGramConfig {
            dim: 8,
            epochs: 3,
            seed: 11,
            mode,
            ..SkipGramConfig::default()
        };
        let a = train_skipgram(&c, &config).unwrap().embeddings;
        let b = train_skipgram(&c, &config).unwrap().embeddings;
        assert_eq!(a.input.as_slice(), b.input.as_slice());
        assert_eq!(a.output.as_slice(), b.output.as_slice());
        let other = SkipGramConfig { seed: 12, ..config };
        let c2 = train_skipgram(&c, &other).unwrap().embeddings;
        assert_ne!(a.input.as_slice(), c2.input.as_slice());
    }
}

#[test]
fn negative_sampling_separates_topics() {
    let c = corpus(200, 8, 3);
    let config = SkipGramConfig {
        dim: 12,
        epochs: 20,
        mode: TrainingMode::NegativeSampling { negatives: 4 },
        seed: 5,
        ..SkipGramConfig::default()
    };
    let emb = train_skipgram(&c, &config).unwrap().embeddings;
    let v = |t, i| emb.vector(&topic_word(t, i)).unwrap();
    let (mut intra, mut inter) = (Vec::new(), Vec::new());
    for i in 0..8 {
        for j in 0..8 {
            if i < j {
                intra.push(pair_similarity(v(0, i), v(0, j)).unwrap().value());
                intra.push(pair_similarity(v(1, i), v(1, j)).unwrap().value());
            }
            inter.push(pair_similarity(v(0, i), v(1, j)).unwrap().value());
        }
    }
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    assert!(
        mean(&intra) > mean(&inter),
        "{} vs {}",
        mean(&intra),
        mean(&inter)
    );
}

mod common;

use common::{check_pair, random_sequence, small_embeddings, tiny_cnn};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wordcluster::embedding::{
    log_probability, negative_sampling_gradient, negative_sampling_objective, softmax_pair_gradient,
};
use wordcluster::expansion::EmbeddedSequence;
use wordcluster::nn::{gradient_check, Classifier, LstmClassifier, LstmConfig};

#[test]
fn skipgram_softmax_gradient_matches_differences() {
    for seed in 0..5 {
        let emb = small_embeddings(seed);
        for (center, context) in [(0, 1), (3, 3), (4, 2)] {
            let grad = softmax_pair_gradient(&emb, center, context);
            let err = check_pair(&emb, &grad, center, |e| log_probability(center, context, e));
            assert!(err < 1e-4, "seed {seed} pair ({center},{context}): {err}");
        }
    }
}

#[test]
fn skipgram_negative_sampling_gradient_matches_differences() {
    for seed in 0..5 {
        let emb = small_embeddings(seed);
        // a repeated negative and the context itself among the negatives
        for (center, context, negatives) in
            [(0, 1, vec![2, 3]), (2, 4, vec![1, 1, 4]), (3, 0, vec![0])]
        {
            let grad = negative_sampling_gradient(&emb, center, context, &negatives);
            let err = check_pair(&emb, &grad, center, |e| {
                negative_sampling_objective(e, center, context, &negatives)
            });
            assert!(err < 1e-4, "seed {seed} pair ({center},{context}): {err}");
        }
    }
}

#[test]
fn cnn_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (layers, pool) in [(1, 2), (2, 2), (1, 3)] {
        let model = tiny_cnn(layers, pool, 5);
        assert!(model.parameter_count() < 10_000);
        for label in 0..3 {
            let x = random_sequence(&mut rng, 12, 10, 4);
            let err = gradient_check(&model, &x, label);
            assert!(
                err < 1e-4,
                "layers {layers} pool {pool} label {label}: {err}"
            );
        }
    }
}

#[test]
fn lstm_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let config = LstmConfig {
        input_width: 4,
        num_classes: 3,
        hidden_size: 5,
    };
    let mut model = LstmClassifier::new(config, &mut rng).unwrap();
    for p in model.params_mut() {
        for v in p.data_mut() {
            *v += rng.gen_range(-0.2..0.2);
        }
    }
    assert!(model.parameter_count() < 10_000);
    for (valid, label) in [(6, 0), (3, 1), (1, 2), (6, 2)] {
        let x = random_sequence(&mut rng, 6, valid, 4);
        let err = gradient_check(&model, &x, label);
        assert!(err < 1e-4, "valid {valid} label {label}: {err}");
    }
}

/// Wraps a model and reports slightly wrong gradients.
#[derive(Clone)]
struct Skewed(LstmClassifier);

impl Classifier for Skewed {
    fn num_classes(&self) -> usize {
        self.0.num_classes()
    }

    fn input_width(&self) -> usize {
        self.0.input_width()
    }

    fn predict(&self, x: &EmbeddedSequence) -> Vec<f64> {
        self.0.predict(x)
    }

    fn accumulate_gradients(
        &self,
        x: &EmbeddedSequence,
        label: usize,
        grads: &mut wordcluster::nn::Gradients,
    ) -> (f64, Vec<f64>) {
        let mut own = self.0.zero_gradients();
        let out = self.0.accumulate_gradients(x, label, &mut own);
        for (g, o) in grads.iter_mut().zip(&own) {
            g.add_scaled(o, 1.001);
        }
        out
    }

    fn params(&self) -> Vec<(String, &wordcluster::nn::Tensor)> {
        self.0.params()
    }

    fn params_mut(&mut self) -> Vec<&mut wordcluster::nn::Tensor> {
        self.0.params_mut()
    }
}

#[test]
fn check_detects_a_small_gradient_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let model = LstmClassifier::new(
        LstmConfig {
            input_width: 3,
            num_classes: 2,
            hidden_size: 3,
        },
        &mut rng,
    )
    .unwrap();
    let x = random_sequence(&mut rng, 4, 4, 3);
    assert!(gradient_check(&model, &x, 1) < 1e-4);
    let err = gradient_check(&Skewed(model), &x, 1);
    assert!(err > 5e-4, "{err}");
}

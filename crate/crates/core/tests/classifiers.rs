use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wordcluster::expansion::EmbeddedSequence;
use wordcluster::nn::{
    evaluate, forward_cnn, forward_lstm, train_classifier, Classifier, CnnClassifier, CnnConfig,
    LstmClassifier, LstmConfig, NnError, TrainConfig,
};
use wordcluster::synthetic::toy_sequences;
use wordcluster::Matrix;

fn random_batch(rng: &mut ChaCha8Rng, n: usize, len: usize, width: usize) -> Vec<EmbeddedSequence> {
    (0..n)
        .map(|_| {
            let valid = rng.gen_range(1..=len);
            let mut rows = Matrix::zeros(len, width);
            for t in 0..valid {
                for v in rows.row_mut(t) {
                    *v = rng.gen_range(-2.0..2.0);
                }
            }
            EmbeddedSequence {
                rows,
                mask: (0..len).map(|t| t < valid).collect(),
            }
        })
        .collect()
}

/// The same tokens followed by `extra` more padding steps.
fn pad(x: &EmbeddedSequence, extra: usize) -> EmbeddedSequence {
    let (len, width) = (x.rows.rows(), x.rows.cols());
    let mut rows = Matrix::zeros(len + extra, width);
    for t in 0..len {
        rows.row_mut(t).copy_from_slice(x.rows.row(t));
    }
    let mut mask = x.mask.clone();
    mask.resize(len + extra, false);
    EmbeddedSequence { rows, mask }
}

fn lstm(width: usize, classes: usize, hidden: usize, seed: u64) -> LstmClassifier {
    let config = LstmConfig {
        input_width: width,
        num_classes: classes,
        hidden_size: hidden,
    };
    LstmClassifier::new(config, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn cnn(width: usize, classes: usize, max_len: usize, seed: u64) -> CnnClassifier {
    let mut config = CnnConfig::new(width, classes, max_len);
    config.kernels = 8;
    CnnClassifier::new(config, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn assert_distributions(p: &wordcluster::nn::Tensor) {
    for i in 0..p.shape()[0] {
        let row = p.row(i);
        assert!(row.iter().all(|&v| v >= 0.0));
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn outputs_are_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..5 {
        let batch = random_batch(&mut rng, 16, 20, 6);
        assert_distributions(&forward_lstm(&lstm(6, 4, 10, seed), &batch).unwrap());
        assert_distributions(&forward_cnn(&cnn(6, 4, 20, seed), &batch).unwrap());
    }
}

#[test]
fn lstm_ignores_padding() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let model = lstm(5, 3, 12, 3);
    for x in random_batch(&mut rng, 20, 8, 5) {
        let base = model.predict(&x);
        for extra in [1, 5, 30] {
            let padded = model.predict(&pad(&x, extra));
            for (a, b) in base.iter().zip(&padded) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn cnn_ignores_padding_beyond_its_receptive_field() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = cnn(5, 3, 16, 5);
    let reach = model.min_len();
    // at most 8 real steps followed by a full receptive field of zeros; with
    // zero biases every all-zero window gives a zero activation, which
    // cannot raise a max over ReLU outputs
    for x in random_batch(&mut rng, 20, 8, 5) {
        let x = pad(&x, reach);
        let base = model.predict(&x);
        for extra in [1, 4, 16, 40] {
            let padded = model.predict(&pad(&x, extra));
            for (a, b) in base.iter().zip(&padded) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn short_inputs_are_rejected() {
    let model = cnn(3, 2, 16, 1);
    let x = EmbeddedSequence {
        rows: Matrix::zeros(10, 3),
        mask: vec![true; 10],
    };
    assert!(matches!(
        forward_cnn(&model, &[x]),
        Err(NnError::InputLength { min: 16, found: 10 })
    ));
    let x = EmbeddedSequence {
        rows: Matrix::zeros(16, 4),
        mask: vec![true; 16],
    };
    assert!(matches!(
        forward_cnn(&model, &[x]),
        Err(NnError::InputWidth {
            expected: 3,
            found: 4
        })
    ));
}

fn zero_head<M: Classifier>(model: &mut M) {
    let params = model.params_mut();
    let n = params.len();
    for p in params.into_iter().skip(n - 2) {
        p.fill(0.0);
    }
}

#[test]
fn first_batch_loss_is_log_k_with_zero_head() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let batch = random_batch(&mut rng, 40, 16, 4);
    let labels: Vec<usize> = (0..40).map(|i| i % 3).collect();
    let config = TrainConfig {
        batch_size: 8,
        epochs: 1,
        learning_rate: 0.1,
        seed: 1,
        shuffle: true,
    };
    let mut m = lstm(4, 3, 6, 1);
    zero_head(&mut m);
    let log = train_classifier(&mut m, &batch, &labels, &config).unwrap();
    assert!((log.epochs[0].batch_losses[0] - 3f64.ln()).abs() < 1e-6);

    let mut m = cnn(4, 3, 16, 1);
    zero_head(&mut m);
    let log = train_classifier(&mut m, &batch, &labels, &config).unwrap();
    assert!((log.epochs[0].batch_losses[0] - 3f64.ln()).abs() < 1e-6);
}

#[test]
fn training_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let batch = random_batch(&mut rng, 30, 16, 4);
    let labels: Vec<usize> = (0..30).map(|i| i % 2).collect();
    let config = TrainConfig {
        batch_size: 4,
        epochs: 3,
        learning_rate: 0.05,
        seed: 9,
        shuffle: true,
    };
    let run_lstm = || {
        let mut m = lstm(4, 2, 6, 2);
        let log = train_classifier(&mut m, &batch, &labels, &config).unwrap();
        (m, log)
    };
    let (a, la) = run_lstm();
    let (b, lb) = run_lstm();
    assert_eq!(la, lb);
    assert_eq!(a, b);

    let run_cnn = || {
        let mut m = cnn(4, 2, 16, 2);
        let log = train_classifier(&mut m, &batch, &labels, &config).unwrap();
        (m, log)
    };
    let (a, la) = run_cnn();
    let (b, lb) = run_cnn();
    assert_eq!(la, lb);
    assert_eq!(a, b);

    let other = TrainConfig { seed: 10, ..config };
    let mut m = lstm(4, 2, 6, 2);
    assert_ne!(
        train_classifier(&mut m, &batch, &labels, &other).unwrap(),
        la
    );
}

#[test]
fn non_finite_loss_names_epoch_and_batch() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut batch = random_batch(&mut rng, 10, 16, 3);
    batch[7].rows.row_mut(0)[0] = f64::NAN;
    let labels = vec![0; 10];
    let config = TrainConfig {
        batch_size: 5,
        epochs: 2,
        learning_rate: 0.1,
        seed: 1,
        shuffle: false,
    };
    let mut m = lstm(3, 2, 4, 1);
    match train_classifier(&mut m, &batch, &labels, &config) {
        Err(NnError::NonFiniteLoss { epoch: 1, batch: 2 }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn both_models_overfit_the_toy_set() {
    let (inputs, labels) = toy_sequences(6, 16, 1);
    let config = TrainConfig {
        batch_size: 20,
        epochs: 200,
        learning_rate: 0.1,
        seed: 1,
        shuffle: true,
    };
    let mut m = lstm(6, 2, 16, 1);
    train_classifier(&mut m, &inputs, &labels, &config).unwrap();
    assert_eq!(evaluate(&m, &inputs, &labels).unwrap().accuracy, 1.0);

    let mut m = cnn(6, 2, 16, 1);
    train_classifier(&mut m, &inputs, &labels, &config).unwrap();
    assert_eq!(evaluate(&m, &inputs, &labels).unwrap().accuracy, 1.0);
}

#[test]
fn evaluation_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inputs = random_batch(&mut rng, 90, 6, 3);
    let labels: Vec<usize> = (0..90).map(|i| i % 3).collect();

    // uniform predictions fall back to class 0
    let mut m = lstm(3, 3, 4, 1);
    zero_head(&mut m);
    let e = evaluate(&m, &inputs, &labels).unwrap();
    assert!((e.accuracy - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(e.precision, vec![1.0 / 3.0, 0.0, 0.0]);
    assert_eq!(e.recall, vec![1.0, 0.0, 0.0]);
    for (c, row) in e.confusion.iter().enumerate() {
        assert_eq!(
            row.iter().sum::<usize>(),
            labels.iter().filter(|&&l| l == c).count()
        );
    }
    assert_eq!(e.total, 90);

    // labels equal to the model's own predictions
    let m = lstm(3, 3, 4, 2);
    let predicted: Vec<usize> = inputs
        .iter()
        .map(|x| {
            let p = m.predict(x);
            (0..3).fold(0, |b, c| if p[c] > p[b] { c } else { b })
        })
        .collect();
    let e = evaluate(&m, &inputs, &predicted).unwrap();
    assert_eq!(e.accuracy, 1.0);

    assert!(matches!(evaluate(&m, &[], &[]), Err(NnError::EmptyDataset)));
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wordcluster::corpus::Vocabulary;
use wordcluster::embedding::{EmbeddingMatrix, PairGradient};
use wordcluster::expansion::EmbeddedSequence;
use wordcluster::experiment::ExperimentConfig;
use wordcluster::nn::{relative_error, Classifier, CnnClassifier, CnnConfig};
use wordcluster::Matrix;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// The bundled toy configuration with its paths pointed at the fixtures and
/// its output at `out`.
pub fn toy_config(out: &Path) -> ExperimentConfig {
    let mut config = ExperimentConfig::load(fixture("toy.conf")).unwrap();
    for path in [
        &mut config.corpus,
        &mut config.dataset,
        &mut config.dictionary,
        &mut config.synonyms,
    ] {
        if let Some(p) = path.as_mut() {
            *p = fixture(&p.to_string_lossy());
        }
    }
    config.output_dir = out.to_path_buf();
    config
}

/// Straightforward agglomeration: every step evaluates every cluster pair
/// with a fresh double loop over members.
pub struct NaiveHac {
    /// `(a, b, similarity, new_id)` with `a < b`
    pub merges: Vec<(usize, usize, f64, usize)>,
    /// flat labels after each step; `labels[s]` has `n - s` clusters
    pub labels: Vec<Vec<usize>>,
}

fn sim(u: &[f64], v: &[f64]) -> f64 {
    let mut sq = 0.0;
    for i in 0..u.len() {
        sq += (u[i] - v[i]) * (u[i] - v[i]);
    }
    1.0 / (1.0 + sq.sqrt())
}

fn flat(clusters: &[(usize, Vec<usize>)], n: usize) -> Vec<usize> {
    // number clusters by smallest leaf
    let mut order: Vec<&(usize, Vec<usize>)> = clusters.iter().collect();
    order.sort_by_key(|(_, m)| *m.iter().min().unwrap());
    let mut labels = vec![0; n];
    for (label, (_, members)) in order.iter().enumerate() {
        for &m in members {
            labels[m] = label;
        }
    }
    labels
}

pub fn naive_hac(vectors: &Matrix) -> NaiveHac {
    let n = vectors.rows();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    let mut labels = vec![flat(&clusters, n)];
    let mut next = n;
    while clusters.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for x in 0..clusters.len() {
            for y in 0..clusters.len() {
                if clusters[x].0 >= clusters[y].0 {
                    continue;
                }
                let (a, b) = (&clusters[x].1, &clusters[y].1);
                let mut sum = 0.0;
                for &u in a {
                    for &v in b {
                        sum += sim(vectors.row(u), vectors.row(v));
                    }
                }
                let value = sum / (a.len() * b.len()) as f64;
                let key = (clusters[x].0, clusters[y].0);
                let better = match best {
                    None => true,
                    Some((bv, bx, by)) => {
                        value > bv || (value == bv && key < (clusters[bx].0, clusters[by].0))
                    }
                };
                if better {
                    best = Some((value, x, y));
                }
            }
        }
        let (value, x, y) = best.unwrap();
        let (ida, idb) = (clusters[x].0, clusters[y].0);
        let mut members = clusters[x].1.clone();
        members.extend_from_slice(&clusters[y].1);
        members.sort_unstable();
        let (hi, lo) = if x > y { (x, y) } else { (y, x) };
        clusters.remove(hi);
        clusters.remove(lo);
        clusters.push((next, members));
        merges.push((ida.min(idb), ida.max(idb), value, next));
        next += 1;
        labels.push(flat(&clusters, n));
    }
    NaiveHac { merges, labels }
}

/// Random points; every other seed uses a coarse integer grid so that equal
/// linkages occur.
pub fn random_points(seed: u64, max_n: usize, max_d: usize) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_n);
    let d = rng.gen_range(1..=max_d);
    let coarse = seed.is_multiple_of(2);
    let data = (0..n * d)
        .map(|_| {
            if coarse {
                rng.gen_range(0..3) as f64
            } else {
                rng.gen_range(-2.0..2.0)
            }
        })
        .collect();
    Matrix::from_vec(n, d, data)
}

const H: f64 = 1e-4;

pub fn small_embeddings(seed: u64) -> EmbeddingMatrix {
    let words = (0..5).map(|i| format!("w{i}")).collect();
    let vocab = Vocabulary::from_words(words).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random =
        |r, c| Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-0.8..0.8)).collect());
    let input = random(5, 3);
    let output = random(5, 3);
    EmbeddingMatrix::new(vocab, input, output)
}

/// Largest relative error between `grad` and central differences of `f`
/// over every input and output entry.
pub fn check_pair(
    emb: &EmbeddingMatrix,
    grad: &PairGradient,
    center: usize,
    f: impl Fn(&EmbeddingMatrix) -> f64,
) -> f64 {
    let mut worst = 0.0f64;
    let mut probe = emb.clone();
    for k in 0..emb.dim() {
        let orig = probe.input.row(center)[k];
        probe.input.row_mut(center)[k] = orig + H;
        let up = f(&probe);
        probe.input.row_mut(center)[k] = orig - H;
        let down = f(&probe);
        probe.input.row_mut(center)[k] = orig;
        worst = worst.max(relative_error(grad.input[k], (up - down) / (2.0 * H)));
    }
    for w in 0..emb.len() {
        for k in 0..emb.dim() {
            let orig = probe.output.row(w)[k];
            probe.output.row_mut(w)[k] = orig + H;
            let up = f(&probe);
            probe.output.row_mut(w)[k] = orig - H;
            let down = f(&probe);
            probe.output.row_mut(w)[k] = orig;
            worst = worst.max(relative_error(
                grad.output.row(w)[k],
                (up - down) / (2.0 * H),
            ));
        }
    }
    worst
}

pub fn random_sequence(
    rng: &mut ChaCha8Rng,
    len: usize,
    valid: usize,
    width: usize,
) -> EmbeddedSequence {
    let mut rows = Matrix::zeros(len, width);
    for t in 0..valid {
        for v in rows.row_mut(t) {
            *v = rng.gen_range(-1.0..1.0);
        }
    }
    EmbeddedSequence {
        rows,
        mask: (0..len).map(|t| t < valid).collect(),
    }
}

pub fn tiny_cnn(layers: usize, pool: usize, seed: u64) -> CnnClassifier {
    let config = CnnConfig {
        input_width: 4,
        num_classes: 3,
        kernels: 3,
        kernel_width: 2,
        pool_width: pool,
        conv_layers: layers,
        max_len: 12,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = CnnClassifier::new(config, &mut rng).unwrap();
    // non-zero biases so their gradients are exercised
    for p in model.params_mut() {
        for v in p.data_mut() {
            *v += rng.gen_range(-0.1..0.1);
        }
    }
    model
}

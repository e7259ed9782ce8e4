use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{ExperimentReport, GridPoint, SplitSummary, REPORT_VERSION};
use super::{split_indices, ClassifierKind, ExperimentConfig, ExperimentError};
use crate::clustering::{agglomerate, save_assignment, ClusterAssignment, Dendrogram};
use crate::corpus::{
    augment_with_synonyms, build_vocabulary, encode_tokenized, load_dataset, read_lines, tokenize,
    LabelSet, LabeledDataset, SynonymTable, TokenizedCorpus, TokenizedExample, UserDictionary,
};
use crate::embedding::{
    load_embeddings, save_embeddings, train_skipgram, write_vectors, EmbeddingMatrix,
};
use crate::expansion::{embed_dataset, expand};
use crate::matrix::Matrix;
use crate::nn::{
    evaluate, save_checkpoint, train_classifier, Checkpoint, CnnClassifier, CnnConfig, Evaluation,
    LstmClassifier, LstmConfig, Model, NnError, TrainConfig, TrainLog,
};
use crate::{Error, Result};

/// Everything a run reads, already tokenized.
#[derive(Debug, Clone, Default)]
pub struct ExperimentInputs {
    pub examples: Vec<TokenizedExample>,
    /// Unlabeled sentences for embedding training.
    pub corpus: Option<Vec<Vec<String>>>,
    /// Pretrained vectors; when present no embeddings are trained.
    pub embeddings: Option<EmbeddingMatrix>,
    pub synonyms: Option<SynonymTable>,
    /// Examples dropped for having no tokens.
    pub skipped_empty: usize,
}

fn stage<T, E: Into<Error>>(name: &'static str, r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| {
        ExperimentError::Stage {
            stage: name,
            source: Box::new(e.into()),
        }
        .into()
    })
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| {
        ExperimentError::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    }
}

/// Reads and tokenizes the files named in `config`.
pub fn load_inputs(config: &ExperimentConfig) -> Result<ExperimentInputs> {
    let dataset_path = config
        .dataset
        .as_ref()
        .ok_or_else(|| ExperimentError::InvalidConfig("no dataset given".into()))?;
    let dict = match &config.dictionary {
        Some(p) => Some(stage("load", UserDictionary::load(p))?),
        None => None,
    };
    let raw = stage("load", load_dataset(dataset_path))?;
    let mut examples = Vec::with_capacity(raw.len());
    let mut skipped_empty = 0;
    for (label, text) in raw {
        let tokens = tokenize(&text, dict.as_ref());
        if tokens.is_empty() {
            skipped_empty += 1;
        } else {
            examples.push(TokenizedExample::new(label, tokens));
        }
    }
    if skipped_empty > 0 {
        log::warn!("skipped {skipped_empty} example(s) with empty text");
    }
    let corpus = match &config.corpus {
        Some(p) => Some(
            stage("load", read_lines(p))?
                .iter()
                .map(|l| tokenize(l, dict.as_ref()))
                .filter(|s| !s.is_empty())
                .collect(),
        ),
        None => None,
    };
    let embeddings = match &config.embeddings {
        Some(p) => Some(stage("load", load_embeddings(p))?),
        None => None,
    };
    let synonyms = match &config.synonyms {
        Some(p) => Some(stage("load", SynonymTable::load(p))?),
        None => None,
    };
    Ok(ExperimentInputs {
        examples,
        corpus,
        embeddings,
        synonyms,
        skipped_empty,
    })
}

/// Fresh classifier for `config`, seeded from `config.seed`.
pub fn build_model(
    config: &ExperimentConfig,
    input_width: usize,
    num_classes: usize,
) -> std::result::Result<Model, NnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    Ok(match config.classifier {
        ClassifierKind::Cnn => Model::Cnn(CnnClassifier::new(
            CnnConfig {
                input_width,
                num_classes,
                kernels: config.kernels,
                kernel_width: config.kernel_width,
                pool_width: config.pool_width,
                conv_layers: config.conv_layers,
                max_len: config.max_len,
            },
            &mut rng,
        )?),
        ClassifierKind::Lstm => Model::Lstm(LstmClassifier::new(
            LstmConfig {
                input_width,
                num_classes,
                hidden_size: config.hidden_size,
            },
            &mut rng,
        )?),
    })
}

fn train_config(config: &ExperimentConfig) -> TrainConfig {
    TrainConfig {
        batch_size: config.batch_size,
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        seed: config.seed.wrapping_add(1),
        shuffle: true,
    }
}

/// Trains a classifier from `config` on `train` over the rows of `table`
/// and scores it on `test`.
pub fn train_and_evaluate(
    config: &ExperimentConfig,
    table: &Matrix,
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<(Model, TrainLog, Evaluation)> {
    let mut model = build_model(config, table.cols(), train.num_classes)?;
    let (inputs, labels) = embed_dataset(train, table, config.max_len)?;
    let log = train_classifier(&mut model, &inputs, &labels, &train_config(config))?;
    let (inputs, labels) = embed_dataset(test, table, config.max_len)?;
    let eval = evaluate(&model, &inputs, &labels)?;
    Ok((model, log, eval))
}

/// Distinct dataset words that have vectors, in embedding-id order.
pub fn cluster_vocabulary(
    examples: &[TokenizedExample],
    emb: &EmbeddingMatrix,
) -> (Vec<String>, Matrix) {
    let ids: BTreeSet<usize> = examples
        .iter()
        .flat_map(|e| e.tokens.iter())
        .filter_map(|t| emb.vocabulary().id(t))
        .collect();
    let words = ids
        .iter()
        .map(|&i| emb.vocabulary().words()[i].clone())
        .collect();
    let mut vectors = Matrix::zeros(ids.len(), emb.dim());
    for (r, &i) in ids.iter().enumerate() {
        vectors.row_mut(r).copy_from_slice(emb.input.row(i));
    }
    (words, vectors)
}

struct Timer {
    timings: BTreeMap<String, f64>,
    start: Instant,
}

impl Timer {
    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        *self.timings.entry(name.to_string()).or_default() += (now - self.start).as_secs_f64();
        self.start = now;
    }
}

fn assignment_at(
    dendrogram: &Dendrogram,
    words: &[String],
    vectors: &Matrix,
    k: usize,
) -> Result<ClusterAssignment> {
    let labels = dendrogram.cut(k)?;
    Ok(ClusterAssignment::from_labels(
        words.to_vec(),
        labels,
        vectors,
    )?)
}

/// Runs the pipeline on in-memory inputs. Artifacts are written to
/// `output_dir` when given.
pub fn run_experiment(
    config: &ExperimentConfig,
    inputs: &ExperimentInputs,
    output_dir: Option<&Path>,
) -> Result<ExperimentReport> {
    config.validate()?;
    let mut timer = Timer {
        timings: BTreeMap::new(),
        start: Instant::now(),
    };
    if let Some(dir) = output_dir {
        std::fs::create_dir_all(dir).map_err(io_error(dir))?;
        let p = dir.join("config.txt");
        std::fs::write(&p, config.to_text()).map_err(io_error(&p))?;
    }

    let examples = &inputs.examples;
    let labels = stage(
        "split",
        LabelSet::from_labels(examples.iter().map(|e| e.label.as_str())),
    )?;
    let label_ids: Vec<usize> = examples
        .iter()
        .map(|e| labels.id(&e.label).expect("known label"))
        .collect();
    let split = split_indices(&label_ids, labels.names(), config.fractions(), config.seed)?;
    let pick = |idx: &[usize]| -> Vec<TokenizedExample> {
        idx.iter().map(|&i| examples[i].clone()).collect()
    };
    let train_raw = pick(&split.train);
    let val_raw = pick(&split.validation);
    let test_raw = pick(&split.test);
    let mut final_raw = train_raw.clone();
    final_raw.extend(val_raw.iter().cloned());

    let augment = |part: Vec<TokenizedExample>| match &inputs.synonyms {
        Some(table) => augment_with_synonyms(&part, table, config.augment_max),
        None => part,
    };
    let final_raw_len = final_raw.len();
    let train_aug = augment(train_raw);
    let final_aug = augment(final_raw);
    let augmented_examples = final_aug.len() - final_raw_len;
    timer.lap("split");

    let (emb, objectives) = match &inputs.embeddings {
        Some(e) => (e.clone(), Vec::new()),
        None => {
            let sentences: Vec<Vec<String>> = match &inputs.corpus {
                Some(c) => c.clone(),
                None => split
                    .train
                    .iter()
                    .chain(&split.validation)
                    .map(|&i| examples[i].tokens.clone())
                    .collect(),
            };
            let vocab = stage("embeddings", build_vocabulary(&sentences, config.min_count))?;
            let corpus = TokenizedCorpus::new(&sentences, vocab);
            let trained = stage("embeddings", train_skipgram(&corpus, &config.skipgram()))?;
            (trained.embeddings, trained.epoch_objectives)
        }
    };
    if let Some(dir) = output_dir {
        stage(
            "embeddings",
            save_embeddings(&emb, dir.join("embeddings.txt")),
        )?;
    }
    timer.lap("embeddings");

    let encode = |part: &[TokenizedExample]| {
        stage("encode", encode_tokenized(part, emb.vocabulary(), &labels))
    };
    let train_set = encode(&train_aug)?.dataset;
    let val_set = encode(&val_raw)?.dataset;
    let final_set = encode(&final_aug)?.dataset;
    let test_set = encode(&test_raw)?.dataset;

    let mut grid = Vec::new();
    let mut chosen_k = None;
    let mut clustered_words = 0;
    let table = if config.no_expansion {
        emb.input.clone()
    } else {
        let (words, vectors) = cluster_vocabulary(examples, &emb);
        clustered_words = words.len();
        let ks = config.k_grid()?;
        if let Some(&k) = ks.iter().find(|&&k| k > words.len()) {
            return Err(ExperimentError::InvalidConfig(format!(
                "k = {k} exceeds the {} clustered words",
                words.len()
            ))
            .into());
        }
        let k_min = *ks.iter().min().expect("non-empty grid");
        let dendrogram = stage("cluster", agglomerate(&vectors, k_min))?;
        timer.lap("cluster");

        let k = if ks.len() == 1 {
            ks[0]
        } else {
            let points: Vec<GridPoint> = ks
                .par_iter()
                .map(|&k| {
                    let point = || -> Result<GridPoint> {
                        let assign = assignment_at(&dendrogram, &words, &vectors, k)?;
                        let table = expand(&emb, &assign)?.into_rows();
                        let (_, log, eval) =
                            train_and_evaluate(config, &table, &train_set, &val_set)?;
                        Ok(GridPoint {
                            k,
                            validation_accuracy: eval.accuracy,
                            final_train_loss: log.epochs.last().map_or(f64::NAN, |e| e.mean_loss),
                        })
                    };
                    point().map_err(|e| {
                        ExperimentError::GridPoint {
                            k,
                            source: Box::new(e),
                        }
                        .into()
                    })
                })
                .collect::<Result<_>>()?;
            for p in &points {
                log::info!(
                    "k = {}: validation accuracy {:.4}",
                    p.k,
                    p.validation_accuracy
                );
            }
            let best = points
                .iter()
                .fold(None::<&GridPoint>, |best, p| match best {
                    Some(b) if b.validation_accuracy > p.validation_accuracy => Some(b),
                    Some(b) if b.validation_accuracy == p.validation_accuracy && b.k < p.k => {
                        Some(b)
                    }
                    _ => Some(p),
                })
                .expect("non-empty grid")
                .k;
            grid = points;
            timer.lap("grid_search");
            best
        };
        chosen_k = Some(k);
        let assign = stage("cluster", assignment_at(&dendrogram, &words, &vectors, k))?;
        let wc = stage("expand", expand(&emb, &assign))?;
        if let Some(dir) = output_dir {
            stage(
                "cluster",
                save_assignment(&assign, dir.join("clusters.tsv"), dir.join("centroids.txt")),
            )?;
            let p = dir.join("word_cluster.txt");
            let write = || -> std::io::Result<()> {
                let mut w = std::io::BufWriter::new(std::fs::File::create(&p)?);
                write_vectors(&mut w, wc.vocabulary().words(), wc.rows())?;
                std::io::Write::flush(&mut w)
            };
            write().map_err(io_error(&p))?;
        }
        timer.lap("expand");
        wc.into_rows()
    };

    let (model, log, test_eval) = stage(
        "train",
        train_and_evaluate(config, &table, &final_set, &test_set),
    )?;
    timer.lap("train");
    if let Some(dir) = output_dir {
        let checkpoint = Checkpoint {
            model: model.clone(),
            max_len: config.max_len,
            labels: labels.names().to_vec(),
        };
        stage(
            "train",
            save_checkpoint(&checkpoint, dir.join("model.ckpt")),
        )?;
    }

    let report = ExperimentReport {
        version: REPORT_VERSION,
        config: config.clone(),
        classifier: model.kind().to_string(),
        expansion: !config.no_expansion,
        input_width: table.cols(),
        chosen_k,
        grid,
        test: test_eval,
        label_names: labels.names().to_vec(),
        split: SplitSummary {
            seed: config.seed,
            train: split.train.len(),
            validation: split.validation.len(),
            test: split.test.len(),
            test_fingerprint: split.test_fingerprint(),
        },
        embedding_objectives: objectives,
        epochs: log.epochs,
        augmented_examples,
        skipped_empty: inputs.skipped_empty,
        clustered_words,
        timings: timer.timings,
    };
    if let Some(dir) = output_dir {
        report.save(dir.join("report.json"))?;
        let p = dir.join("report.txt");
        std::fs::write(&p, report.summary()).map_err(io_error(&p))?;
    }
    Ok(report)
}

/// Reads the configured files, runs every stage and writes artifacts to
/// `config.output_dir`.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    run_experiment(config, &inputs, Some(&config.output_dir))
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use wordcluster::clustering::{hac_cluster, load_assignment, save_assignment};
use wordcluster::corpus::{
    augment_with_synonyms, build_vocabulary, encode_tokenized, load_dataset, read_lines, tokenize,
    LabelSet, SynonymTable, TokenizedCorpus, TokenizedExample, UserDictionary,
};
use wordcluster::embedding::{
    load_embeddings, save_embeddings, train_skipgram, write_vectors, EmbeddingMatrix,
};
use wordcluster::expansion::{embed_dataset, expand};
use wordcluster::experiment::{
    build_model, cluster_vocabulary, compare_runs, run_pipeline, ExperimentConfig, ExperimentError,
    ExperimentReport,
};
use wordcluster::nn::{
    evaluate, load_checkpoint, save_checkpoint, train_classifier, Checkpoint, TrainConfig,
};
use wordcluster::ErrorClass;

/// Bad arguments that clap itself cannot catch.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// Routes library errors through the crate error so the exit status can be
/// derived from its class.
trait Lib<T> {
    fn lib(self) -> Result<T, wordcluster::Error>;
}

impl<T, E: Into<wordcluster::Error>> Lib<T> for Result<T, E> {
    fn lib(self) -> Result<T, wordcluster::Error> {
        self.map_err(Into::into)
    }
}

macro_rules! config_args {
    ($($field:ident),* $(,)?) => {
        /// Settings shared by every subcommand. Each flag overrides the key of
        /// the same name in the `--config` file.
        #[derive(Args, Debug, Default)]
        struct ConfigArgs {
            /// Config file of `key = value` lines
            #[arg(long, value_name = "FILE")]
            config: Option<PathBuf>,
            /// Use plain word vectors without cluster centroids
            #[arg(long, value_name = "BOOL", num_args = 0..=1, default_missing_value = "true",
                  help_heading = "Configuration")]
            no_expansion: Option<String>,
            $(
                #[arg(long, value_name = "VALUE", help_heading = "Configuration")]
                $field: Option<String>,
            )*
        }

        impl ConfigArgs {
            fn overrides(&self) -> Vec<(&'static str, &str)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push((stringify!($field), v.as_str()));
                    }
                )*
                if let Some(v) = &self.no_expansion {
                    out.push(("no_expansion", v.as_str()));
                }
                out
            }
        }
    };
}

config_args!(
    corpus,
    dataset,
    dictionary,
    synonyms,
    output_dir,
    embeddings,
    min_count,
    window,
    dim,
    sg_epochs,
    sg_learning_rate,
    sg_mode,
    k,
    k_min,
    k_max,
    k_steps,
    classifier,
    batch_size,
    epochs,
    learning_rate,
    max_len,
    hidden_size,
    kernels,
    kernel_width,
    pool_width,
    conv_layers,
    train_fraction,
    validation_fraction,
    test_fraction,
    seed,
    augment_max,
);

impl ConfigArgs {
    fn resolve(&self, base: Option<ExperimentConfig>) -> anyhow::Result<ExperimentConfig> {
        let mut config = base.unwrap_or_default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            config.apply_text(&text).lib()?;
        }
        for (key, value) in self.overrides() {
            config.set(key, value).lib()?;
        }
        Ok(config)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "wordcluster",
    version,
    about = "Word-cluster embeddings for short-text classification"
)]
struct Cli {
    /// More log output (repeat for debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tokenize text lines (keeps a `label<TAB>` prefix when present)
    Tokenize {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Output file (default: standard output)
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        #[command(flatten)]
        settings: ConfigArgs,
    },
    /// Add synonym-substituted copies of the dataset's examples
    Augment {
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        #[command(flatten)]
        settings: ConfigArgs,
    },
    /// Train Skip-Gram vectors on the corpus (or the dataset texts)
    TrainEmbeddings {
        /// Output file (default: <output_dir>/embeddings.txt)
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        #[command(flatten)]
        settings: ConfigArgs,
    },
    /// Cluster the vectors of the dataset's words into k groups
    Cluster {
        /// Assignment file (default: <output_dir>/clusters.tsv)
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Centroid file (default: <output_dir>/centroids.txt)
        #[arg(long, value_name = "FILE")]
        centroids: Option<PathBuf>,
        #[command(flatten)]
        settings: ConfigArgs,
    },
    /// Concatenate word vectors with their cluster centroids
    Expand {
        #[arg(long, value_name = "FILE")]
        clusters: PathBuf,
        #[arg(long, value_name = "FILE")]
        centroids: PathBuf,
        /// Output file (default: <output_dir>/word_cluster.txt)
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        #[command(flatten)]
        settings: ConfigArgs,
    },
    /// Train a classifier on every example of the dataset
    Train {
        /// Input vectors in embedding file format
        #[arg(long, value_name = "FILE")]
        vectors: PathBuf,
        /// Checkpoint file (default: <output_dir>/model.ckpt)
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
        #[command(flatten)]
        settings: ConfigArgs,
    },
    /// Score a trained classifier on the dataset
    Evaluate {
        #[arg(long, value_name = "FILE")]
        vectors: PathBuf,
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Also write the evaluation as JSON
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
        #[command(flatten)]
        settings: ConfigArgs,
    },
    /// Run the pipeline, choosing k from k_min..k_max on validation accuracy
    GridSearch {
        #[command(flatten)]
        settings: ConfigArgs,
    },
    /// Run the whole pipeline and write all artifacts
    Run {
        /// Start from the configuration stored in a report
        #[arg(long, value_name = "REPORT")]
        snapshot: Option<PathBuf>,
        #[command(flatten)]
        settings: ConfigArgs,
    },
    /// Compare two reports computed on the same test split
    Compare {
        first: PathBuf,
        second: PathBuf,
        /// Print JSON instead of text
        #[arg(long)]
        json: bool,
    },
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn output_or(
    config: &ExperimentConfig,
    given: &Option<PathBuf>,
    name: &str,
) -> anyhow::Result<PathBuf> {
    let path = given
        .clone()
        .unwrap_or_else(|| config.output_dir.join(name));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(path)
}

fn dictionary(config: &ExperimentConfig) -> anyhow::Result<Option<UserDictionary>> {
    Ok(match &config.dictionary {
        Some(p) => Some(UserDictionary::load(p).lib()?),
        None => None,
    })
}

fn dataset_examples(config: &ExperimentConfig) -> anyhow::Result<Vec<TokenizedExample>> {
    let path = config
        .dataset
        .as_ref()
        .ok_or_else(|| usage("--dataset is required"))?;
    let dict = dictionary(config)?;
    Ok(load_dataset(path)
        .lib()?
        .into_iter()
        .map(|(label, text)| TokenizedExample::new(label, tokenize(&text, dict.as_ref())))
        .collect())
}

fn embeddings(config: &ExperimentConfig) -> anyhow::Result<EmbeddingMatrix> {
    let path = config
        .embeddings
        .as_ref()
        .ok_or_else(|| usage("--embeddings is required"))?;
    Ok(load_embeddings(path).lib()?)
}

/// Tokens joined by spaces, with spaces inside dictionary terms shown as
/// U+2581.
fn join_tokens(tokens: &[String]) -> String {
    tokens
        .iter()
        .map(|t| t.replace(' ', "\u{2581}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_tokenize(
    input: &Path,
    output: &Option<PathBuf>,
    config: &ExperimentConfig,
) -> anyhow::Result<()> {
    let dict = dictionary(config)?;
    let mut out: Box<dyn Write> = match output {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    for line in read_lines(input).lib()? {
        match line.split_once('\t') {
            Some((label, text)) => writeln!(
                out,
                "{label}\t{}",
                join_tokens(&tokenize(text, dict.as_ref()))
            )?,
            None => writeln!(out, "{}", join_tokens(&tokenize(&line, dict.as_ref())))?,
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_augment(output: &Option<PathBuf>, config: &ExperimentConfig) -> anyhow::Result<()> {
    let examples = dataset_examples(config)?;
    let table = match &config.synonyms {
        Some(p) => SynonymTable::load(p).lib()?,
        None => return Err(usage("--synonyms is required")),
    };
    let augmented = augment_with_synonyms(&examples, &table, config.augment_max);
    let mut out: Box<dyn Write> = match output {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    for ex in &augmented {
        writeln!(out, "{}\t{}", ex.label, join_tokens(&ex.tokens))?;
    }
    out.flush()?;
    log::info!("{} examples in, {} out", examples.len(), augmented.len());
    Ok(())
}

fn cmd_train_embeddings(output: &Option<PathBuf>, config: &ExperimentConfig) -> anyhow::Result<()> {
    let sentences: Vec<Vec<String>> = match &config.corpus {
        Some(p) => {
            let dict = dictionary(config)?;
            read_lines(p)
                .lib()?
                .iter()
                .map(|l| tokenize(l, dict.as_ref()))
                .collect()
        }
        None => dataset_examples(config)?
            .into_iter()
            .map(|e| e.tokens)
            .collect(),
    };
    let vocab = build_vocabulary(&sentences, config.min_count).lib()?;
    let corpus = TokenizedCorpus::new(&sentences, vocab);
    let trained = train_skipgram(&corpus, &config.skipgram()).lib()?;
    for (epoch, objective) in trained.epoch_objectives.iter().enumerate() {
        println!("epoch {:>3}  objective {objective:.6}", epoch + 1);
    }
    let path = output_or(config, output, "embeddings.txt")?;
    save_embeddings(&trained.embeddings, &path).lib()?;
    println!(
        "wrote {} vectors of width {} to {}",
        trained.embeddings.len(),
        trained.embeddings.dim(),
        path.display()
    );
    Ok(())
}

fn cmd_cluster(
    output: &Option<PathBuf>,
    centroids: &Option<PathBuf>,
    config: &ExperimentConfig,
) -> anyhow::Result<()> {
    let emb = embeddings(config)?;
    let examples = dataset_examples(config)?;
    let k = config.k.ok_or_else(|| usage("--k is required"))?;
    let (words, vectors) = cluster_vocabulary(&examples, &emb);
    let (_, assign) = hac_cluster(&words, &vectors, k).lib()?;
    let path = output_or(config, output, "clusters.tsv")?;
    let cpath = output_or(config, centroids, "centroids.txt")?;
    save_assignment(&assign, &path, &cpath).lib()?;
    println!(
        "clustered {} words into {k} groups: {}",
        words.len(),
        path.display()
    );
    Ok(())
}

fn cmd_expand(
    clusters: &Path,
    centroids: &Path,
    output: &Option<PathBuf>,
    config: &ExperimentConfig,
) -> anyhow::Result<()> {
    let emb = embeddings(config)?;
    let assign = load_assignment(clusters, centroids, Some(emb.vocabulary())).lib()?;
    let wc = expand(&emb, &assign).lib()?;
    let path = output_or(config, output, "word_cluster.txt")?;
    let mut w = create(&path)?;
    write_vectors(&mut w, wc.vocabulary().words(), wc.rows())?;
    w.flush()?;
    println!(
        "wrote {} rows of width {} to {}",
        wc.rows().rows(),
        wc.dim(),
        path.display()
    );
    Ok(())
}

fn cmd_train(
    vectors: &Path,
    output: &Option<PathBuf>,
    config: &ExperimentConfig,
) -> anyhow::Result<()> {
    let table = load_embeddings(vectors).lib()?;
    let examples = dataset_examples(config)?;
    let labels = LabelSet::from_labels(examples.iter().map(|e| e.label.as_str())).lib()?;
    let dataset = encode_tokenized(&examples, table.vocabulary(), &labels)
        .lib()?
        .dataset;
    let (inputs, targets) = embed_dataset(&dataset, &table.input, config.max_len).lib()?;
    let mut model = build_model(config, table.dim(), labels.len()).lib()?;
    let train = TrainConfig {
        batch_size: config.batch_size,
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        seed: config.seed.wrapping_add(1),
        shuffle: true,
    };
    let log = train_classifier(&mut model, &inputs, &targets, &train).lib()?;
    for e in &log.epochs {
        println!(
            "epoch {:>3}  loss {:.5}  accuracy {:.4}",
            e.epoch, e.mean_loss, e.accuracy
        );
    }
    let path = output_or(config, output, "model.ckpt")?;
    let checkpoint = Checkpoint {
        model,
        max_len: config.max_len,
        labels: labels.names().to_vec(),
    };
    save_checkpoint(&checkpoint, &path).lib()?;
    println!("saved {}", path.display());
    Ok(())
}

fn cmd_evaluate(
    vectors: &Path,
    model: &Path,
    json: &Option<PathBuf>,
    config: &ExperimentConfig,
) -> anyhow::Result<()> {
    let table = load_embeddings(vectors).lib()?;
    let checkpoint = load_checkpoint(model).lib()?;
    let examples = dataset_examples(config)?;
    let labels = LabelSet::from_labels(&checkpoint.labels).lib()?;
    let dataset = encode_tokenized(&examples, table.vocabulary(), &labels)
        .lib()?
        .dataset;
    let (inputs, targets) = embed_dataset(&dataset, &table.input, checkpoint.max_len).lib()?;
    let eval = evaluate(&checkpoint.model, &inputs, &targets).lib()?;
    println!("accuracy {:.4} over {} examples", eval.accuracy, eval.total);
    for (c, name) in labels.names().iter().enumerate() {
        println!(
            "  {name:<14} precision {:.4}  recall {:.4}",
            eval.precision[c], eval.recall[c]
        );
    }
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(&eval)? + "\n";
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn print_report(report: &ExperimentReport, config: &ExperimentConfig) {
    print!("{}", report.summary());
    println!("artifacts in {}", config.output_dir.display());
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Tokenize {
            input,
            output,
            settings,
        } => cmd_tokenize(input, output, &settings.resolve(None)?),
        Command::Augment { output, settings } => cmd_augment(output, &settings.resolve(None)?),
        Command::TrainEmbeddings { output, settings } => {
            cmd_train_embeddings(output, &settings.resolve(None)?)
        }
        Command::Cluster {
            output,
            centroids,
            settings,
        } => cmd_cluster(output, centroids, &settings.resolve(None)?),
        Command::Expand {
            clusters,
            centroids,
            output,
            settings,
        } => cmd_expand(clusters, centroids, output, &settings.resolve(None)?),
        Command::Train {
            vectors,
            output,
            settings,
        } => cmd_train(vectors, output, &settings.resolve(None)?),
        Command::Evaluate {
            vectors,
            model,
            json,
            settings,
        } => cmd_evaluate(vectors, model, json, &settings.resolve(None)?),
        Command::GridSearch { settings } => {
            let config = settings.resolve(None)?;
            if config.k_min.is_none() || config.k_max.is_none() {
                return Err(usage("grid-search needs --k-min and --k-max"));
            }
            let report = run_pipeline(&config).lib()?;
            print_report(&report, &config);
            Ok(())
        }
        Command::Run { snapshot, settings } => {
            let base = match snapshot {
                Some(p) => Some(ExperimentReport::load(p).lib()?.config),
                None => None,
            };
            let config = settings.resolve(base)?;
            let report = run_pipeline(&config).lib()?;
            print_report(&report, &config);
            Ok(())
        }
        Command::Compare {
            first,
            second,
            json,
        } => {
            let a = ExperimentReport::load(first).lib()?;
            let b = ExperimentReport::load(second).lib()?;
            let cmp = compare_runs(&a, &b).lib()?;
            if *json {
                println!("{}", serde_json::to_string_pretty(&cmp)?);
            } else {
                print!("{}", cmp.summary());
            }
            Ok(())
        }
    }
}

fn exit_class(err: &anyhow::Error) -> ErrorClass {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return ErrorClass::Usage;
        }
        if let Some(e) = cause.downcast_ref::<wordcluster::Error>() {
            return e.class();
        }
        if let Some(e) = cause.downcast_ref::<ExperimentError>() {
            return e.class();
        }
    }
    // the remaining library errors convert into the crate error first
    ErrorClass::Data
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(match exit_class(&e) {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numeric => 3,
            })
        }
    }
}

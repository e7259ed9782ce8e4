use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::ExperimentError;
use crate::embedding::{SkipGramConfig, TrainingMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Cnn,
    Lstm,
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cnn" => Ok(ClassifierKind::Cnn),
            "lstm" => Ok(ClassifierKind::Lstm),
            other => Err(format!(
                "unknown classifier `{other}` (use `cnn` or `lstm`)"
            )),
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassifierKind::Cnn => "cnn",
            ClassifierKind::Lstm => "lstm",
        })
    }
}

/// Every setting of a pipeline run. Settings are addressed by flat keys
/// (see [`ExperimentConfig::KEYS`]) in config files and on the command line.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    /// Unlabeled text for embedding training, one sentence per line. When
    /// absent, the training and validation texts are used.
    pub corpus: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Pretrained vectors; skips embedding training.
    pub embeddings: Option<PathBuf>,
    pub min_count: u64,
    pub window: usize,
    pub dim: usize,
    pub sg_epochs: usize,
    pub sg_learning_rate: f64,
    pub sg_mode: TrainingMode,
    pub k: Option<usize>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub k_steps: usize,
    pub classifier: ClassifierKind,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub max_len: usize,
    pub hidden_size: usize,
    pub kernels: usize,
    pub kernel_width: usize,
    pub pool_width: usize,
    pub conv_layers: usize,
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub no_expansion: bool,
    /// Most synonym copies per training example (used with `synonyms`).
    pub augment_max: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sg = SkipGramConfig::default();
        ExperimentConfig {
            corpus: None,
            dataset: None,
            dictionary: None,
            synonyms: None,
            output_dir: PathBuf::from("output"),
            embeddings: None,
            min_count: 1,
            window: sg.window,
            dim: sg.dim,
            sg_epochs: sg.epochs,
            sg_learning_rate: sg.learning_rate,
            sg_mode: sg.mode,
            k: None,
            k_min: None,
            k_max: None,
            k_steps: 10,
            classifier: ClassifierKind::Lstm,
            batch_size: 128,
            epochs: 30,
            learning_rate: 0.01,
            max_len: 20,
            hidden_size: 300,
            kernels: 64,
            kernel_width: 5,
            pool_width: 2,
            conv_layers: 2,
            train_fraction: 0.8,
            validation_fraction: 0.1,
            test_fraction: 0.1,
            seed: 1,
            no_expansion: false,
            augment_max: 1,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ExperimentError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e: T::Err| ExperimentError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: e.to_string(),
        })
}

fn optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, ExperimentError>
where
    T::Err: std::fmt::Display,
{
    let v = value.trim();
    if v.is_empty() || v == "none" {
        Ok(None)
    } else {
        parse(key, v).map(Some)
    }
}

fn path(value: &str) -> Option<PathBuf> {
    let v = value.trim();
    (!v.is_empty() && v != "none").then(|| PathBuf::from(v))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ExperimentError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "" | "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(ExperimentError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: "expected true or false".into(),
        }),
    }
}

/// Lowercases a key and maps dashes to underscores.
pub fn normalize_key(key: &str) -> String {
    key.trim()
        .trim_start_matches("--")
        .to_ascii_lowercase()
        .replace('-', "_")
}

impl ExperimentConfig {
    pub const KEYS: &'static [&'static str] = &[
        "corpus",
        "dataset",
        "dictionary",
        "synonyms",
        "output_dir",
        "embeddings",
        "min_count",
        "window",
        "dim",
        "sg_epochs",
        "sg_learning_rate",
        "sg_mode",
        "k",
        "k_min",
        "k_max",
        "k_steps",
        "classifier",
        "batch_size",
        "epochs",
        "learning_rate",
        "max_len",
        "hidden_size",
        "kernels",
        "kernel_width",
        "pool_width",
        "conv_layers",
        "train_fraction",
        "validation_fraction",
        "test_fraction",
        "seed",
        "no_expansion",
        "augment_max",
    ];

    /// Sets one key. Dashes and underscores are interchangeable in keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let key = normalize_key(key);
        let k = key.as_str();
        match k {
            "corpus" => self.corpus = path(value),
            "dataset" => self.dataset = path(value),
            "dictionary" => self.dictionary = path(value),
            "synonyms" => self.synonyms = path(value),
            "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            "embeddings" => self.embeddings = path(value),
            "min_count" => self.min_count = parse(k, value)?,
            "window" => self.window = parse(k, value)?,
            "dim" => self.dim = parse(k, value)?,
            "sg_epochs" => self.sg_epochs = parse(k, value)?,
            "sg_learning_rate" => self.sg_learning_rate = parse(k, value)?,
            "sg_mode" => self.sg_mode = parse(k, value)?,
            "k" => self.k = optional(k, value)?,
            "k_min" => self.k_min = optional(k, value)?,
            "k_max" => self.k_max = optional(k, value)?,
            "k_steps" => self.k_steps = parse(k, value)?,
            "classifier" => self.classifier = parse(k, value)?,
            "batch_size" => self.batch_size = parse(k, value)?,
            "epochs" => self.epochs = parse(k, value)?,
            "learning_rate" => self.learning_rate = parse(k, value)?,
            "max_len" => self.max_len = parse(k, value)?,
            "hidden_size" => self.hidden_size = parse(k, value)?,
            "kernels" => self.kernels = parse(k, value)?,
            "kernel_width" => self.kernel_width = parse(k, value)?,
            "pool_width" => self.pool_width = parse(k, value)?,
            "conv_layers" => self.conv_layers = parse(k, value)?,
            "train_fraction" => self.train_fraction = parse(k, value)?,
            "validation_fraction" => self.validation_fraction = parse(k, value)?,
            "test_fraction" => self.test_fraction = parse(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "no_expansion" => self.no_expansion = parse_bool(k, value)?,
            "augment_max" => self.augment_max = parse(k, value)?,
            _ => return Err(ExperimentError::UnknownKey(key)),
        }
        Ok(())
    }

    /// Current value of a key in config-file syntax.
    pub fn get(&self, key: &str) -> Option<String> {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref()
                .map(T::to_string)
                .unwrap_or_else(|| "none".into())
        }
        fn opt_path(v: &Option<PathBuf>) -> String {
            v.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "none".into())
        }
        let v = match normalize_key(key).as_str() {
            "corpus" => opt_path(&self.corpus),
            "dataset" => opt_path(&self.dataset),
            "dictionary" => opt_path(&self.dictionary),
            "synonyms" => opt_path(&self.synonyms),
            "output_dir" => self.output_dir.display().to_string(),
            "embeddings" => opt_path(&self.embeddings),
            "min_count" => self.min_count.to_string(),
            "window" => self.window.to_string(),
            "dim" => self.dim.to_string(),
            "sg_epochs" => self.sg_epochs.to_string(),
            "sg_learning_rate" => self.sg_learning_rate.to_string(),
            "sg_mode" => self.sg_mode.to_string(),
            "k" => opt(&self.k),
            "k_min" => opt(&self.k_min),
            "k_max" => opt(&self.k_max),
            "k_steps" => self.k_steps.to_string(),
            "classifier" => self.classifier.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "epochs" => self.epochs.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "max_len" => self.max_len.to_string(),
            "hidden_size" => self.hidden_size.to_string(),
            "kernels" => self.kernels.to_string(),
            "kernel_width" => self.kernel_width.to_string(),
            "pool_width" => self.pool_width.to_string(),
            "conv_layers" => self.conv_layers.to_string(),
            "train_fraction" => self.train_fraction.to_string(),
            "validation_fraction" => self.validation_fraction.to_string(),
            "test_fraction" => self.test_fraction.to_string(),
            "seed" => self.seed.to_string(),
            "no_expansion" => self.no_expansion.to_string(),
            "augment_max" => self.augment_max.to_string(),
            _ => return None,
        };
        Some(v)
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are
    /// skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ExperimentError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=')
                    .ok_or_else(|| ExperimentError::ConfigSyntax {
                        line: i + 1,
                        message: format!("expected `key = value`, found `{line}`"),
                    })?;
            self.set(key, value)
                .map_err(|e| ExperimentError::ConfigSyntax {
                    line: i + 1,
                    message: e.to_string(),
                })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ExperimentError> {
        let mut config = ExperimentConfig::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_text(&text)
    }

    /// Every key in config-file syntax; [`ExperimentConfig::from_text`]
    /// reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }

    pub fn skipgram(&self) -> SkipGramConfig {
        SkipGramConfig {
            window: self.window,
            dim: self.dim,
            epochs: self.sg_epochs,
            learning_rate: self.sg_learning_rate,
            seed: self.seed,
            mode: self.sg_mode,
            ..SkipGramConfig::default()
        }
    }

    pub fn fractions(&self) -> [f64; 3] {
        [
            self.train_fraction,
            self.validation_fraction,
            self.test_fraction,
        ]
    }

    /// Cluster counts to try: `k` alone, or `k_steps` log-spaced values from
    /// `k_min` to `k_max` (rounded, duplicates removed).
    pub fn k_grid(&self) -> Result<Vec<usize>, ExperimentError> {
        match (self.k, self.k_min, self.k_max) {
            (Some(k), None, None) => Ok(vec![k]),
            (None, Some(lo), Some(hi)) => Ok(log_grid(lo, hi, self.k_steps)),
            (Some(_), _, _) => Err(ExperimentError::InvalidConfig(
                "set either k or k_min and k_max, not both".into(),
            )),
            _ => Err(ExperimentError::InvalidConfig(
                "set k, or both k_min and k_max".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidConfig(m));
        let f = self.fractions();
        if f.iter().any(|&x| !(x > 0.0)) {
            return bad(format!("split fractions must all be positive, got {f:?}"));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("split fractions must sum to 1, got {f:?}"));
        }
        if self.min_count == 0 {
            return bad("min_count must be >= 1".into());
        }
        self.skipgram()
            .validate()
            .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        if !self.no_expansion {
            let grid = self.k_grid()?;
            if let (Some(lo), Some(hi)) = (self.k_min, self.k_max) {
                if lo < 1 || lo > hi {
                    return bad(format!("need 1 <= k_min <= k_max, got {lo} and {hi}"));
                }
                if self.k_steps == 0 {
                    return bad("k_steps must be >= 1".into());
                }
            }
            if grid.contains(&0) {
                return bad("k must be >= 1".into());
            }
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0".into());
        }
        if self.max_len == 0 {
            return bad("max_len must be >= 1".into());
        }
        Ok(())
    }

    /// Keys whose values differ between two configs.
    pub fn diff(&self, other: &ExperimentConfig) -> Vec<String> {
        Self::KEYS
            .iter()
            .filter(|k| self.get(k) != other.get(k))
            .map(|k| k.to_string())
            .collect()
    }
}

/// `steps` values from `lo` to `hi`, evenly spaced in log scale.
pub fn log_grid(lo: usize, hi: usize, steps: usize) -> Vec<usize> {
    if steps <= 1 || lo >= hi {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..steps)
        .map(|i| (a + (b - a) * i as f64 / (steps - 1) as f64).exp().round() as usize)
        .map(|k| k.clamp(lo, hi))
        .collect();
    out.dedup();
    out
}

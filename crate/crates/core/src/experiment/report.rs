use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{ExperimentConfig, ExperimentError};
use crate::nn::{EpochLog, Evaluation};

pub const REPORT_VERSION: u32 = 1;

/// Validation result for one cluster count.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridPoint {
    pub k: usize,
    pub validation_accuracy: f64,
    pub final_train_loss: f64,
}

/// Sizes and identity of the data split.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitSummary {
    pub seed: u64,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub test_fingerprint: String,
}

/// Outcome of a pipeline run.
///
/// JSON fields (format version 1):
/// `version`, `config` (every configuration key), `classifier`, `expansion`,
/// `input_width`, `chosen_k`, `grid`, `test`, `label_names`, `split`,
/// `embedding_objectives`, `epochs`, `augmented_examples`, `skipped_empty`,
/// `clustered_words`, `timings` (seconds per stage).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentReport {
    pub version: u32,
    pub config: ExperimentConfig,
    pub classifier: String,
    pub expansion: bool,
    pub input_width: usize,
    pub chosen_k: Option<usize>,
    pub grid: Vec<GridPoint>,
    pub test: Evaluation,
    pub label_names: Vec<String>,
    pub split: SplitSummary,
    pub embedding_objectives: Vec<f64>,
    pub epochs: Vec<EpochLog>,
    pub augmented_examples: usize,
    pub skipped_empty: usize,
    pub clustered_words: usize,
    pub timings: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let report: ExperimentReport =
            serde_json::from_str(text).map_err(|e| ExperimentError::Report(e.to_string()))?;
        if report.version != REPORT_VERSION {
            return Err(ExperimentError::Report(format!(
                "unsupported report version {}",
                report.version
            )));
        }
        Ok(report)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "classifier      {}", self.classifier);
        let _ = writeln!(
            s,
            "input           {} ({} wide)",
            if self.expansion {
                "word + cluster"
            } else {
                "word only"
            },
            self.input_width
        );
        if let Some(k) = self.chosen_k {
            let _ = writeln!(s, "clusters        {k} over {} words", self.clustered_words);
        }
        for g in &self.grid {
            let _ = writeln!(
                s,
                "  k = {:<6} validation accuracy {:.4}",
                g.k, g.validation_accuracy
            );
        }
        let _ = writeln!(
            s,
            "split           {} train / {} validation / {} test (seed {})",
            self.split.train, self.split.validation, self.split.test, self.split.seed
        );
        let _ = writeln!(s, "test accuracy   {:.4}", self.test.accuracy);
        for (c, name) in self.label_names.iter().enumerate() {
            let _ = writeln!(
                s,
                "  {name:<14} precision {:.4}  recall {:.4}",
                self.test.precision[c], self.test.recall[c]
            );
        }
        let _ = writeln!(s, "confusion (rows true, columns predicted)");
        for row in &self.test.confusion {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>6}")).collect();
            let _ = writeln!(s, "  {}", cells.join(""));
        }
        for (stage, secs) in &self.timings {
            let _ = writeln!(s, "time {stage:<11} {secs:.2}s");
        }
        s
    }
}

/// Differences `b - a` between two runs on the same test split.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Comparison {
    pub label_names: Vec<String>,
    pub accuracy_a: f64,
    pub accuracy_b: f64,
    pub accuracy_delta: f64,
    pub precision_delta: Vec<f64>,
    pub recall_delta: Vec<f64>,
    /// Configuration keys that differ.
    pub config_changes: Vec<String>,
}

impl Comparison {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "accuracy  {:.4} -> {:.4}  ({:+.4})",
            self.accuracy_a, self.accuracy_b, self.accuracy_delta
        );
        for (c, name) in self.label_names.iter().enumerate() {
            let _ = writeln!(
                s,
                "  {name:<14} precision {:+.4}  recall {:+.4}",
                self.precision_delta[c], self.recall_delta[c]
            );
        }
        if !self.config_changes.is_empty() {
            let _ = writeln!(s, "changed keys: {}", self.config_changes.join(", "));
        }
        s
    }
}

/// Compares two reports. Runs must share the split seed, the test set and
/// the label names.
pub fn compare_runs(
    a: &ExperimentReport,
    b: &ExperimentReport,
) -> Result<Comparison, ExperimentError> {
    if a.split.seed != b.split.seed || a.split.test_fingerprint != b.split.test_fingerprint {
        return Err(ExperimentError::SplitMismatch {
            seed_a: a.split.seed,
            seed_b: b.split.seed,
        });
    }
    if a.label_names != b.label_names {
        return Err(ExperimentError::Report(
            "reports use different label sets".into(),
        ));
    }
    let delta = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| q - p).collect();
    Ok(Comparison {
        label_names: a.label_names.clone(),
        accuracy_a: a.test.accuracy,
        accuracy_b: b.test.accuracy,
        accuracy_delta: b.test.accuracy - a.test.accuracy,
        precision_delta: delta(&a.test.precision, &b.test.precision),
        recall_delta: delta(&a.test.recall, &b.test.recall),
        config_changes: a.config.diff(&b.config),
    })
}

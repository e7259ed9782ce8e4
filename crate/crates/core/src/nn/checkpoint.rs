//! Text checkpoints: a tag line, `key value` architecture fields, then one
//! `param <name> <shape...>` line per tensor followed by a line of values.
//! Values are written in shortest round-trip form, so reloading is exact.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{
    Classifier, CnnClassifier, CnnConfig, LstmClassifier, LstmConfig, Model, NnError, Tensor,
};

pub const CHECKPOINT_TAG: &str = "wordcluster-checkpoint v1";

fn io_error(path: &str, source: std::io::Error) -> NnError {
    NnError::Io {
        path: path.to_string(),
        source,
    }
}

/// A trained model with the input length and class names it was trained
/// with.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub max_len: usize,
    pub labels: Vec<String>,
}

pub fn write_checkpoint<W: Write>(out: &mut W, checkpoint: &Checkpoint) -> std::io::Result<()> {
    let model = &checkpoint.model;
    writeln!(out, "{CHECKPOINT_TAG}")?;
    writeln!(out, "kind {}", model.kind())?;
    writeln!(out, "max_len {}", checkpoint.max_len)?;
    writeln!(out, "labels {}", checkpoint.labels.join("\t"))?;
    match model {
        Model::Cnn(m) => {
            let c = m.config();
            writeln!(out, "input_width {}", c.input_width)?;
            writeln!(out, "num_classes {}", c.num_classes)?;
            writeln!(out, "kernels {}", c.kernels)?;
            writeln!(out, "kernel_width {}", c.kernel_width)?;
            writeln!(out, "pool_width {}", c.pool_width)?;
            writeln!(out, "conv_layers {}", c.conv_layers)?;
        }
        Model::Lstm(m) => {
            let c = m.config();
            writeln!(out, "input_width {}", c.input_width)?;
            writeln!(out, "num_classes {}", c.num_classes)?;
            writeln!(out, "hidden_size {}", c.hidden_size)?;
        }
    }
    for (name, p) in model.params() {
        let shape: Vec<String> = p.shape().iter().map(|s| s.to_string()).collect();
        writeln!(out, "param {name} {}", shape.join(" "))?;
        let values: Vec<String> = p.data().iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", values.join(" "))?;
    }
    out.flush()
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<Option<String>, NnError> {
        self.number += 1;
        match self.inner.next() {
            None => Ok(None),
            Some(Ok(l)) => Ok(Some(l)),
            Some(Err(e)) => Err(self.error(format!("read failed: {e}"))),
        }
    }

    fn require(&mut self, what: &str) -> Result<String, NnError> {
        self.next()?
            .ok_or_else(|| self.error(format!("unexpected end of file, expected {what}")))
    }

    fn error(&self, message: String) -> NnError {
        NnError::Checkpoint {
            line: self.number,
            message,
        }
    }

    fn field(&mut self, key: &str) -> Result<String, NnError> {
        let line = self.require(key)?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.trim().to_string()),
            _ => Err(self.error(format!("expected field `{key}`, found `{line}`"))),
        }
    }

    fn usize_field(&mut self, key: &str) -> Result<usize, NnError> {
        let v = self.field(key)?;
        v.parse().map_err(|_| {
            self.error(format!(
                "field `{key}` is not a non-negative integer: `{v}`"
            ))
        })
    }
}

pub fn read_checkpoint<R: BufRead>(input: R) -> Result<Checkpoint, NnError> {
    let mut lines = Lines {
        inner: input.lines(),
        number: 0,
    };
    let tag = lines.require("format tag")?;
    if tag.trim() != CHECKPOINT_TAG {
        return Err(lines.error(format!("unknown format tag `{tag}`")));
    }
    let kind = lines.field("kind")?;
    let kind_line = lines.number;
    let max_len = lines.usize_field("max_len")?;
    let labels: Vec<String> = lines
        .field("labels")?
        .split('\t')
        .map(str::to_string)
        .collect();
    let input_width = lines.usize_field("input_width")?;
    let num_classes = lines.usize_field("num_classes")?;

    let config_error = |lines: &Lines<R>, e: NnError| lines.error(e.to_string());
    let shell = match kind.as_str() {
        "cnn" => Shell::Cnn(CnnConfig {
            input_width,
            num_classes,
            kernels: lines.usize_field("kernels")?,
            kernel_width: lines.usize_field("kernel_width")?,
            pool_width: lines.usize_field("pool_width")?,
            conv_layers: lines.usize_field("conv_layers")?,
            max_len,
        }),
        "lstm" => Shell::Lstm(LstmConfig {
            input_width,
            num_classes,
            hidden_size: lines.usize_field("hidden_size")?,
        }),
        other => {
            return Err(NnError::Checkpoint {
                line: kind_line,
                message: format!("unknown model kind `{other}`"),
            })
        }
    };
    let layout = shell.layout().map_err(|e| config_error(&lines, e))?;

    let mut params = Vec::with_capacity(layout.len());
    for (name, shape) in &layout {
        let header = lines.require(&format!("parameter {name}"))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("param") || parts.next() != Some(name.as_str()) {
            return Err(lines.error(format!("expected `param {name}`, found `{header}`")));
        }
        let found: Result<Vec<usize>, _> = parts.map(str::parse).collect();
        match found {
            Ok(found) if &found == shape => {}
            _ => {
                return Err(lines.error(format!(
                    "parameter {name} has shape `{header}`, expected {shape:?}"
                )))
            }
        }
        let values = lines.require(&format!("values of {name}"))?;
        let data: Vec<f64> = values
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| lines.error(format!("bad value in {name}: {e}")))?;
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(lines.error(format!(
                "parameter {name} has {} values, expected {expected}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(lines.error(format!("parameter {name} has non-finite values")));
        }
        params.push(Tensor::from_vec(shape, data));
    }
    if let Some(extra) = lines.next()? {
        if !extra.trim().is_empty() {
            return Err(lines.error(format!("unexpected trailing content `{extra}`")));
        }
    }
    let model = match shell {
        Shell::Cnn(c) => Model::Cnn(CnnClassifier::from_params(c, params)?),
        Shell::Lstm(c) => Model::Lstm(LstmClassifier::from_params(c, params)?),
    };
    if labels.len() != model.num_classes() {
        return Err(NnError::Checkpoint {
            line: 4,
            message: format!(
                "{} labels for {} classes",
                labels.len(),
                model.num_classes()
            ),
        });
    }
    Ok(Checkpoint {
        model,
        max_len,
        labels,
    })
}

enum Shell {
    Cnn(CnnConfig),
    Lstm(LstmConfig),
}

impl Shell {
    fn layout(&self) -> Result<Vec<(String, Vec<usize>)>, NnError> {
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let model = match self {
            Shell::Cnn(c) => Model::Cnn(CnnClassifier::new(c.clone(), &mut rng)?),
            Shell::Lstm(c) => Model::Lstm(LstmClassifier::new(c.clone(), &mut rng)?),
        };
        Ok(model
            .params()
            .into_iter()
            .map(|(n, p)| (n, p.shape().to_vec()))
            .collect())
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<(), NnError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = std::fs::File::create(path).map_err(|e| io_error(&shown, e))?;
    write_checkpoint(&mut BufWriter::new(file), checkpoint).map_err(|e| io_error(&shown, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, NnError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| io_error(&path.display().to_string(), e))?;
    read_checkpoint(BufReader::new(file))
}

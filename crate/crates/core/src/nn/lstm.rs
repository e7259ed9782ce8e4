use rand::Rng;

use super::layers::{cross_entropy, linear, linear_backward, sigmoid, softmax, xavier};
use super::tensor::Tensor;
use super::{Classifier, Gradients, NnError};
use crate::expansion::EmbeddedSequence;

/// Single LSTM layer, mean pooling over valid steps, fully connected softmax.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LstmConfig {
    pub input_width: usize,
    pub num_classes: usize,
    pub hidden_size: usize,
}

impl LstmConfig {
    /// 300 hidden cells.
    pub fn new(input_width: usize, num_classes: usize) -> Self {
        LstmConfig {
            input_width,
            num_classes,
            hidden_size: 300,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.input_width == 0 || self.hidden_size == 0 {
            return Err(NnError::Config("LSTM widths must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(NnError::Config(format!(
                "need at least 2 classes, got {}",
                self.num_classes
            )));
        }
        Ok(())
    }
}

/// Gate blocks are stacked as input, forget, cell candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmClassifier {
    config: LstmConfig,
    /// `[4H, input_width]`
    w_input: Tensor,
    /// `[4H, H]`
    w_hidden: Tensor,
    /// `[4H]`
    bias: Tensor,
    fc_weight: Tensor,
    fc_bias: Tensor,
}

struct Step {
    x: usize,
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl LstmClassifier {
    /// Xavier-initialised weights; forget-gate bias 1, other biases 0.
    pub fn new(config: LstmConfig, rng: &mut impl Rng) -> Result<Self, NnError> {
        config.validate()?;
        let (h, c, k) = (config.hidden_size, config.input_width, config.num_classes);
        let w_input = xavier(&[4 * h, c], c, h, rng);
        let w_hidden = xavier(&[4 * h, h], h, h, rng);
        let mut bias = Tensor::zeros(&[4 * h]);
        bias.data_mut()[h..2 * h].iter_mut().for_each(|b| *b = 1.0);
        let fc_weight = xavier(&[k, h], h, k, rng);
        let fc_bias = Tensor::zeros(&[k]);
        Ok(LstmClassifier {
            config,
            w_input,
            w_hidden,
            bias,
            fc_weight,
            fc_bias,
        })
    }

    /// Builds a model from parameters in [`Classifier::params`] order.
    pub fn from_params(config: LstmConfig, params: Vec<Tensor>) -> Result<Self, NnError> {
        config.validate()?;
        let (h, c, k) = (config.hidden_size, config.input_width, config.num_classes);
        let expected = [
            vec![4 * h, c],
            vec![4 * h, h],
            vec![4 * h],
            vec![k, h],
            vec![k],
        ];
        if params.len() != expected.len() {
            return Err(NnError::Config(format!(
                "expected 5 parameter tensors, got {}",
                params.len()
            )));
        }
        for (i, (p, shape)) in params.iter().zip(&expected).enumerate() {
            if p.shape() != shape.as_slice() {
                return Err(NnError::Config(format!(
                    "parameter {i} has shape {:?}, expected {shape:?}",
                    p.shape()
                )));
            }
        }
        let mut it = params.into_iter();
        let mut next = || it.next().expect("length checked");
        Ok(LstmClassifier {
            config,
            w_input: next(),
            w_hidden: next(),
            bias: next(),
            fc_weight: next(),
            fc_bias: next(),
        })
    }

    pub fn config(&self) -> &LstmConfig {
        &self.config
    }

    /// Runs the recurrence over the valid positions and returns the mean
    /// hidden state with the per-step cache. `None` when no position is
    /// valid.
    fn run(&self, x: &EmbeddedSequence) -> Option<(Vec<f64>, Vec<Step>, Vec<Vec<f64>>)> {
        let h = self.config.hidden_size;
        let c_in = self.config.input_width;
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        let mut steps = Vec::new();
        let mut hiddens = vec![h_prev.clone()];
        let mut pooled = vec![0.0; h];
        for (t, _) in x.mask.iter().enumerate().filter(|(_, &m)| m) {
            let xt = x.rows.row(t);
            let mut gates = self.bias.data().to_vec();
            for (r, g) in gates.iter_mut().enumerate() {
                let wi = &self.w_input.data()[r * c_in..(r + 1) * c_in];
                let wh = &self.w_hidden.data()[r * h..(r + 1) * h];
                *g += wi.iter().zip(xt).map(|(a, b)| a * b).sum::<f64>()
                    + wh.iter().zip(&h_prev).map(|(a, b)| a * b).sum::<f64>();
            }
            for j in 0..h {
                gates[j] = sigmoid(gates[j]);
                gates[h + j] = sigmoid(gates[h + j]);
                gates[2 * h + j] = gates[2 * h + j].tanh();
                gates[3 * h + j] = sigmoid(gates[3 * h + j]);
            }
            let mut c = vec![0.0; h];
            let mut tanh_c = vec![0.0; h];
            let mut h_new = vec![0.0; h];
            for j in 0..h {
                c[j] = gates[h + j] * c_prev[j] + gates[j] * gates[2 * h + j];
                tanh_c[j] = c[j].tanh();
                h_new[j] = gates[3 * h + j] * tanh_c[j];
                pooled[j] += h_new[j];
            }
            steps.push(Step {
                x: t,
                gates,
                c: c.clone(),
                tanh_c,
            });
            hiddens.push(h_new.clone());
            h_prev = h_new;
            c_prev = c;
        }
        if steps.is_empty() {
            return None;
        }
        let n = steps.len() as f64;
        pooled.iter_mut().for_each(|p| *p /= n);
        Some((pooled, steps, hiddens))
    }

    fn uniform(&self) -> Vec<f64> {
        log::warn!("sequence has no valid positions; returning the uniform distribution");
        vec![1.0 / self.config.num_classes as f64; self.config.num_classes]
    }
}

impl Classifier for LstmClassifier {
    fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    fn input_width(&self) -> usize {
        self.config.input_width
    }

    fn predict(&self, x: &EmbeddedSequence) -> Vec<f64> {
        match self.run(x) {
            Some((pooled, ..)) => softmax(&linear(&self.fc_weight, &self.fc_bias, &pooled)),
            None => self.uniform(),
        }
    }

    fn accumulate_gradients(
        &self,
        x: &EmbeddedSequence,
        label: usize,
        grads: &mut Gradients,
    ) -> (f64, Vec<f64>) {
        let Some((pooled, steps, hiddens)) = self.run(x) else {
            let probs = self.uniform();
            return (-probs[label].ln(), probs);
        };
        let h = self.config.hidden_size;
        let c_in = self.config.input_width;
        let logits = linear(&self.fc_weight, &self.fc_bias, &pooled);
        let loss = cross_entropy(&logits, label);
        let probs = softmax(&logits);
        let mut d_logits = probs.clone();
        d_logits[label] -= 1.0;

        let [d_wi, d_wh, d_b, d_fw, d_fb] = grads.as_mut_slice() else {
            panic!("LSTM expects 5 gradient tensors");
        };
        let d_pooled = linear_backward(&self.fc_weight, &pooled, &d_logits, d_fw, d_fb);
        let n = steps.len() as f64;
        let d_h_step: Vec<f64> = d_pooled.iter().map(|g| g / n).collect();

        let mut d_h_next = vec![0.0; h];
        let mut d_c_next = vec![0.0; h];
        let mut d_z = vec![0.0; 4 * h];
        for (t, step) in steps.iter().enumerate().rev() {
            let c_prev: &[f64] = if t == 0 { &[] } else { &steps[t - 1].c };
            let h_prev = &hiddens[t];
            let g = &step.gates;
            for j in 0..h {
                let dh = d_h_step[j] + d_h_next[j];
                let (i, f, cand, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let dc = d_c_next[j] + dh * o * (1.0 - step.tanh_c[j] * step.tanh_c[j]);
                let cp = if t == 0 { 0.0 } else { c_prev[j] };
                d_z[j] = dc * cand * i * (1.0 - i);
                d_z[h + j] = dc * cp * f * (1.0 - f);
                d_z[2 * h + j] = dc * i * (1.0 - cand * cand);
                d_z[3 * h + j] = dh * step.tanh_c[j] * o * (1.0 - o);
                d_c_next[j] = dc * f;
            }
            let xt = x.rows.row(step.x);
            d_h_next.iter_mut().for_each(|v| *v = 0.0);
            for (r, &dz) in d_z.iter().enumerate() {
                if dz == 0.0 {
                    continue;
                }
                d_b.data_mut()[r] += dz;
                for (acc, xv) in d_wi.data_mut()[r * c_in..(r + 1) * c_in].iter_mut().zip(xt) {
                    *acc += dz * xv;
                }
                let wh = &self.w_hidden.data()[r * h..(r + 1) * h];
                let dwh = &mut d_wh.data_mut()[r * h..(r + 1) * h];
                for j in 0..h {
                    dwh[j] += dz * h_prev[j];
                    d_h_next[j] += dz * wh[j];
                }
            }
        }
        (loss, probs)
    }

    fn params(&self) -> Vec<(String, &Tensor)> {
        vec![
            ("lstm.w_input".to_string(), &self.w_input),
            ("lstm.w_hidden".to_string(), &self.w_hidden),
            ("lstm.bias".to_string(), &self.bias),
            ("fc.weight".to_string(), &self.fc_weight),
            ("fc.bias".to_string(), &self.fc_bias),
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_input,
            &mut self.w_hidden,
            &mut self.bias,
            &mut self.fc_weight,
            &mut self.fc_bias,
        ]
    }
}

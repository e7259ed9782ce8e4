use rand::Rng;

use super::layers::{
    conv1d, conv1d_backward, cross_entropy, linear, linear_backward, max_over_time, max_pool,
    max_pool_backward, softmax, xavier,
};
use super::tensor::Tensor;
use super::{Classifier, Gradients, NnError};
use crate::expansion::EmbeddedSequence;

/// Convolution blocks (valid convolution, ReLU, max pooling) followed by a
/// max over the remaining time steps and a fully connected softmax layer.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CnnConfig {
    pub input_width: usize,
    pub num_classes: usize,
    pub kernels: usize,
    pub kernel_width: usize,
    pub pool_width: usize,
    pub conv_layers: usize,
    pub max_len: usize,
}

impl CnnConfig {
    /// Two blocks of 64 kernels of width 5 with pooling width 2.
    pub fn new(input_width: usize, num_classes: usize, max_len: usize) -> Self {
        CnnConfig {
            input_width,
            num_classes,
            kernels: 64,
            kernel_width: 5,
            pool_width: 2,
            conv_layers: 2,
            max_len,
        }
    }

    /// Shortest input that leaves at least one position after the last
    /// pooling layer.
    pub fn min_len(&self) -> usize {
        (0..self.conv_layers).fold(1, |m, _| m * self.pool_width + self.kernel_width - 1)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: String| Err(NnError::Config(m));
        if self.input_width == 0
            || self.kernels == 0
            || self.kernel_width == 0
            || self.pool_width == 0
        {
            return bad("CNN widths and kernel counts must be positive".into());
        }
        if self.conv_layers == 0 {
            return bad("CNN needs at least one convolution layer".into());
        }
        if self.num_classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.num_classes));
        }
        if self.max_len < self.min_len() {
            return bad(format!(
                "max_len {} is below the CNN minimum of {}",
                self.max_len,
                self.min_len()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnClassifier {
    config: CnnConfig,
    /// `(weight [kernels, width, in_channels], bias [kernels])` per block
    convs: Vec<(Tensor, Tensor)>,
    fc_weight: Tensor,
    fc_bias: Tensor,
}

struct BlockCache {
    input: Vec<f64>,
    len: usize,
    in_ch: usize,
    pre: Vec<f64>,
    pool_arg: Vec<usize>,
}

impl CnnClassifier {
    /// Xavier-initialised weights, zero biases.
    pub fn new(config: CnnConfig, rng: &mut impl Rng) -> Result<Self, NnError> {
        config.validate()?;
        let mut convs = Vec::with_capacity(config.conv_layers);
        let mut in_ch = config.input_width;
        for _ in 0..config.conv_layers {
            let w = xavier(
                &[config.kernels, config.kernel_width, in_ch],
                config.kernel_width * in_ch,
                config.kernel_width * config.kernels,
                rng,
            );
            convs.push((w, Tensor::zeros(&[config.kernels])));
            in_ch = config.kernels;
        }
        let fc_weight = xavier(
            &[config.num_classes, config.kernels],
            config.kernels,
            config.num_classes,
            rng,
        );
        let fc_bias = Tensor::zeros(&[config.num_classes]);
        Ok(CnnClassifier {
            config,
            convs,
            fc_weight,
            fc_bias,
        })
    }

    /// Builds a model from parameters in [`Classifier::params`] order.
    pub fn from_params(config: CnnConfig, params: Vec<Tensor>) -> Result<Self, NnError> {
        let mut model = CnnClassifier::new(config, &mut rand::rngs::mock::StepRng::new(0, 0))?;
        let expected: Vec<Vec<usize>> = model
            .params()
            .iter()
            .map(|(_, p)| p.shape().to_vec())
            .collect();
        if params.len() != expected.len() {
            return Err(NnError::Config(format!(
                "expected {} parameter tensors, got {}",
                expected.len(),
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
        for (slot, p) in model.params_mut().into_iter().zip(params) {
            *slot = p;
        }
        Ok(model)
    }

    pub fn config(&self) -> &CnnConfig {
        &self.config
    }

    fn features(&self, x: &EmbeddedSequence) -> (Vec<f64>, Vec<usize>, Vec<BlockCache>, usize) {
        let mut caches = Vec::with_capacity(self.convs.len());
        let mut act = x.rows.as_slice().to_vec();
        let mut len = x.rows.rows();
        let mut in_ch = x.rows.cols();
        for (w, b) in &self.convs {
            let pre = conv1d(&act, len, in_ch, w, b);
            let conv_len = len + 1 - self.config.kernel_width;
            let relu: Vec<f64> = pre.iter().map(|&v| v.max(0.0)).collect();
            let (pooled, arg) =
                max_pool(&relu, conv_len, self.config.kernels, self.config.pool_width);
            caches.push(BlockCache {
                input: std::mem::replace(&mut act, pooled),
                len,
                in_ch,
                pre,
                pool_arg: arg,
            });
            len = conv_len / self.config.pool_width;
            in_ch = self.config.kernels;
        }
        let (feat, arg) = max_over_time(&act, len, in_ch);
        (feat, arg, caches, len)
    }
}

impl Classifier for CnnClassifier {
    fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    fn input_width(&self) -> usize {
        self.config.input_width
    }

    fn min_len(&self) -> usize {
        self.config.min_len()
    }

    fn predict(&self, x: &EmbeddedSequence) -> Vec<f64> {
        let (feat, ..) = self.features(x);
        softmax(&linear(&self.fc_weight, &self.fc_bias, &feat))
    }

    fn accumulate_gradients(
        &self,
        x: &EmbeddedSequence,
        label: usize,
        grads: &mut Gradients,
    ) -> (f64, Vec<f64>) {
        let (feat, feat_arg, caches, last_len) = self.features(x);
        let logits = linear(&self.fc_weight, &self.fc_bias, &feat);
        let loss = cross_entropy(&logits, label);
        let probs = softmax(&logits);

        let mut d_logits = probs.clone();
        d_logits[label] -= 1.0;
        let n = grads.len();
        let (conv_grads, fc_grads) = grads.split_at_mut(n - 2);
        let (d_fc_w, d_fc_b) = fc_grads.split_at_mut(1);
        let d_feat = linear_backward(
            &self.fc_weight,
            &feat,
            &d_logits,
            &mut d_fc_w[0],
            &mut d_fc_b[0],
        );

        let k = self.config.kernels;
        let mut d_act = max_pool_backward(&d_feat, &feat_arg, k, last_len);
        for (layer, cache) in caches.iter().enumerate().rev() {
            let conv_len = cache.len + 1 - self.config.kernel_width;
            let d_relu = max_pool_backward(&d_act, &cache.pool_arg, k, conv_len);
            let d_pre: Vec<f64> = d_relu
                .iter()
                .zip(&cache.pre)
                .map(|(&g, &z)| if z > 0.0 { g } else { 0.0 })
                .collect();
            let (d_w, rest) = conv_grads[2 * layer..].split_at_mut(1);
            let d_in = conv1d_backward(
                &cache.input,
                cache.in_ch,
                &self.convs[layer].0,
                &d_pre,
                &mut d_w[0],
                &mut rest[0],
                layer > 0,
            );
            if let Some(d_in) = d_in {
                d_act = d_in;
            }
        }
        (loss, probs)
    }

    fn params(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::with_capacity(2 * self.convs.len() + 2);
        for (i, (w, b)) in self.convs.iter().enumerate() {
            out.push((format!("conv{}.weight", i + 1), w));
            out.push((format!("conv{}.bias", i + 1), b));
        }
        out.push(("fc.weight".to_string(), &self.fc_weight));
        out.push(("fc.bias".to_string(), &self.fc_bias));
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::with_capacity(2 * self.convs.len() + 2);
        for (w, b) in self.convs.iter_mut() {
            out.push(w);
            out.push(b);
        }
        out.push(&mut self.fc_weight);
        out.push(&mut self.fc_bias);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq(rows: Matrix) -> EmbeddedSequence {
        let mask = vec![true; rows.rows()];
        EmbeddedSequence { rows, mask }
    }

    #[test]
    fn minimum_length() {
        let c = CnnConfig::new(8, 3, 16);
        assert_eq!(c.min_len(), 16);
        assert!(c.validate().is_ok());
        let c = CnnConfig::new(8, 3, 15);
        assert!(matches!(c.validate(), Err(NnError::Config(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(CnnClassifier::new(c, &mut rng).is_err());
    }

    #[test]
    fn default_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = CnnClassifier::new(CnnConfig::new(32, 3, 20), &mut rng).unwrap();
        let shapes: Vec<Vec<usize>> = m.params().iter().map(|(_, p)| p.shape().to_vec()).collect();
        assert_eq!(
            shapes,
            vec![
                vec![64, 5, 32],
                vec![64],
                vec![64, 5, 64],
                vec![64],
                vec![3, 64],
                vec![3]
            ]
        );
    }

    #[test]
    fn zero_input_gives_uniform_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = CnnClassifier::new(CnnConfig::new(6, 4, 20), &mut rng).unwrap();
        let p = m.predict(&seq(Matrix::zeros(20, 6)));
        for v in p {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_computed_single_block() {
        // one kernel of width 2 over a 4-step, 1-channel input, pooling 2
        let config = CnnConfig {
            input_width: 1,
            num_classes: 2,
            kernels: 1,
            kernel_width: 2,
            pool_width: 2,
            conv_layers: 1,
            max_len: 4,
        };
        let params = vec![
            Tensor::from_vec(&[1, 2, 1], vec![1.0, -0.5]),
            Tensor::from_vec(&[1], vec![0.1]),
            Tensor::from_vec(&[2, 1], vec![2.0, -1.0]),
            Tensor::from_vec(&[2], vec![0.0, 0.3]),
        ];
        let m = CnnClassifier::from_params(config, params).unwrap();
        let x = seq(Matrix::from_vec(4, 1, vec![1.0, 2.0, 0.5, 3.0]));
        // conv: 1-1+0.1=0.1, 2-0.25+0.1=1.85, 0.5-1.5+0.1=-0.9 -> relu 0.1, 1.85, 0
        // pool(2): max(0.1, 1.85) = 1.85, trailing step dropped
        // logits: 3.7, -1.55
        let z = [3.7f64, -1.85 + 0.3];
        let denom = z[0].exp() + z[1].exp();
        let p = m.predict(&x);
        assert!((p[0] - z[0].exp() / denom).abs() < 1e-9);
        assert!((p[1] - z[1].exp() / denom).abs() < 1e-9);
    }
}

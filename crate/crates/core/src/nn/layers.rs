//! Forward and backward kernels shared by the classifiers.

use rand::Rng;

use super::tensor::Tensor;

/// Uniform initialisation in `+-sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn xavier(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Tensor {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    Tensor::from_vec(
        shape,
        (0..n).map(|_| rng.gen_range(-bound..=bound)).collect(),
    )
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax.
pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Cross-entropy of `label` under `softmax(logits)`.
pub(crate) fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

/// `weight (out x in) * x + bias`
pub(crate) fn linear(weight: &Tensor, bias: &Tensor, x: &[f64]) -> Vec<f64> {
    let out = weight.shape()[0];
    (0..out)
        .map(|o| bias.data()[o] + weight.row(o).iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
        .collect()
}

/// Accumulates the gradients of a linear layer and returns `d x`.
pub(crate) fn linear_backward(
    weight: &Tensor,
    x: &[f64],
    d_out: &[f64],
    d_weight: &mut Tensor,
    d_bias: &mut Tensor,
) -> Vec<f64> {
    let cols = x.len();
    let mut d_x = vec![0.0; cols];
    for (o, &g) in d_out.iter().enumerate() {
        d_bias.data_mut()[o] += g;
        let w_row = weight.row(o);
        let dw_row = &mut d_weight.data_mut()[o * cols..(o + 1) * cols];
        for c in 0..cols {
            dw_row[c] += g * x[c];
            d_x[c] += g * w_row[c];
        }
    }
    d_x
}

/// Valid 1-D convolution of `input` (`len x in_ch`, row-major) with
/// `weight` of shape `[filters, width, in_ch]`. Returns `(len - width + 1) x
/// filters`.
pub(crate) fn conv1d(
    input: &[f64],
    len: usize,
    in_ch: usize,
    weight: &Tensor,
    bias: &Tensor,
) -> Vec<f64> {
    let (filters, width) = (weight.shape()[0], weight.shape()[1]);
    let out_len = len + 1 - width;
    let mut out = vec![0.0; out_len * filters];
    let span = width * in_ch;
    for t in 0..out_len {
        let window = &input[t * in_ch..t * in_ch + span];
        for f in 0..filters {
            let w = &weight.data()[f * span..(f + 1) * span];
            out[t * filters + f] =
                bias.data()[f] + w.iter().zip(window).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    out
}

/// Accumulates convolution gradients. Returns `d input` when requested.
pub(crate) fn conv1d_backward(
    input: &[f64],
    in_ch: usize,
    weight: &Tensor,
    d_out: &[f64],
    d_weight: &mut Tensor,
    d_bias: &mut Tensor,
    want_input_grad: bool,
) -> Option<Vec<f64>> {
    let (filters, width) = (weight.shape()[0], weight.shape()[1]);
    let span = width * in_ch;
    let out_len = d_out.len() / filters;
    let mut d_input = want_input_grad.then(|| vec![0.0; input.len()]);
    for t in 0..out_len {
        let window = &input[t * in_ch..t * in_ch + span];
        for f in 0..filters {
            let g = d_out[t * filters + f];
            if g == 0.0 {
                continue;
            }
            d_bias.data_mut()[f] += g;
            let dw = &mut d_weight.data_mut()[f * span..(f + 1) * span];
            for (acc, x) in dw.iter_mut().zip(window) {
                *acc += g * x;
            }
            if let Some(d_in) = d_input.as_mut() {
                let w = &weight.data()[f * span..(f + 1) * span];
                for (acc, wv) in d_in[t * in_ch..t * in_ch + span].iter_mut().zip(w) {
                    *acc += g * wv;
                }
            }
        }
    }
    d_input
}

/// Non-overlapping max pooling over time with window `width`; a trailing
/// partial window is dropped. Returns pooled values and the source row of
/// each maximum (first on ties).
pub(crate) fn max_pool(
    input: &[f64],
    len: usize,
    channels: usize,
    width: usize,
) -> (Vec<f64>, Vec<usize>) {
    let out_len = len / width;
    let mut out = vec![f64::NEG_INFINITY; out_len * channels];
    let mut arg = vec![0; out_len * channels];
    for s in 0..out_len {
        for t in s * width..(s + 1) * width {
            for c in 0..channels {
                let v = input[t * channels + c];
                if v > out[s * channels + c] {
                    out[s * channels + c] = v;
                    arg[s * channels + c] = t;
                }
            }
        }
    }
    (out, arg)
}

/// Maximum over all rows, with the source row of each maximum.
pub(crate) fn max_over_time(input: &[f64], len: usize, channels: usize) -> (Vec<f64>, Vec<usize>) {
    max_pool(input, len, channels, len)
}

/// Routes pooled gradients back to the winning rows.
pub(crate) fn max_pool_backward(
    d_out: &[f64],
    arg: &[usize],
    channels: usize,
    input_len: usize,
) -> Vec<f64> {
    let mut d_in = vec![0.0; input_len * channels];
    for (i, (&g, &t)) in d_out.iter().zip(arg).enumerate() {
        d_in[t * channels + i % channels] += g;
    }
    d_in
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_is_stable() {
        let p = softmax(&[1000.0, 1000.0]);
        assert_eq!(p, vec![0.5, 0.5]);
        assert!((cross_entropy(&[1000.0, 1000.0], 0) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn conv_and_pool_by_hand() {
        // input rows (1), (2), (3), (4); one filter of width 2 with weights (1, -1), bias 0.5
        let w = Tensor::from_vec(&[1, 2, 1], vec![1.0, -1.0]);
        let b = Tensor::from_vec(&[1], vec![0.5]);
        let out = conv1d(&[1.0, 2.0, 3.0, 4.0], 4, 1, &w, &b);
        assert_eq!(out, vec![-0.5, -0.5, -0.5]);
        let (pooled, arg) = max_pool(&[3.0, 5.0, 5.0, 1.0, 9.0], 5, 1, 2);
        assert_eq!(pooled, vec![5.0, 5.0]);
        assert_eq!(arg, vec![1, 2]);
    }
}

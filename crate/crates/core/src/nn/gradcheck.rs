use super::layers::cross_entropy;
use super::{Classifier, Gradients};
use crate::expansion::EmbeddedSequence;

const STEP: f64 = 1e-4;
const ABSOLUTE_BELOW: f64 = 1e-7;

/// `|a - b| / max(|a|, |b|)`, or the absolute difference when both are below
/// 1e-7.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    let diff = (analytic - numeric).abs();
    if scale < ABSOLUTE_BELOW {
        diff
    } else {
        diff / scale
    }
}

fn loss<M: Classifier>(model: &M, x: &EmbeddedSequence, label: usize) -> f64 {
    let p = model.predict(x);
    // same value as the logit form, without re-deriving logits
    cross_entropy(&p.iter().map(|v| v.ln()).collect::<Vec<_>>(), label)
}

/// Largest relative error between analytic parameter gradients and central
/// differences with step 1e-4, over every parameter.
pub fn gradient_check<M: Classifier + Clone>(model: &M, x: &EmbeddedSequence, label: usize) -> f64 {
    let mut analytic: Gradients = model.zero_gradients();
    model.accumulate_gradients(x, label, &mut analytic);

    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let count = analytic.len();
    for t in 0..count {
        let len = analytic[t].len();
        for i in 0..len {
            let original = probe.params_mut()[t].data()[i];
            probe.params_mut()[t].data_mut()[i] = original + STEP;
            let up = loss(&probe, x, label);
            probe.params_mut()[t].data_mut()[i] = original - STEP;
            let down = loss(&probe, x, label);
            probe.params_mut()[t].data_mut()[i] = original;
            let numeric = (up - down) / (2.0 * STEP);
            worst = worst.max(relative_error(analytic[t].data()[i], numeric));
        }
    }
    worst
}

//! Softmax cross-entropy with optional label smoothing.
//!
//! The smoothed target for label `y` over `K` classes is
//! `t = (1 − ε)·onehot(y) + ε/K`, and the loss is `−Σ t·log softmax(z)`.
//! With `ε = 0` this is plain cross-entropy. Log-softmax is computed with
//! the max-subtracted log-sum-exp.

use crate::error::{invalid, NnError, Result};
use crate::ops::expect_rank;
use crate::tape::{BackwardCtx, BackwardFn, Tape, Var};
use crate::tensor::Tensor;

pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|z| z - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn check(logits: &[f64], label: usize, eps: f64) -> Result<()> {
    if logits.is_empty() {
        return Err(invalid("cross_entropy", "no classes"));
    }
    if label >= logits.len() {
        return Err(invalid("cross_entropy", format!("label {label} >= {} classes", logits.len())));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(invalid("smooth_loss", format!("epsilon {eps} outside [0, 1)")));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(NnError::NonFinite("logits"));
    }
    Ok(())
}

/// Smoothed one-hot target.
pub fn smooth_target(k: usize, label: usize, eps: f64) -> Vec<f64> {
    let mut t = vec![eps / k as f64; k];
    t[label] += 1.0 - eps;
    t
}

pub fn cross_entropy(logits: &[f64], label: usize) -> Result<f64> {
    check(logits, label, 0.0)?;
    Ok(log_sum_exp(logits) - logits[label])
}

pub fn smooth_loss(logits: &[f64], label: usize, eps: f64) -> Result<f64> {
    check(logits, label, eps)?;
    if eps == 0.0 {
        return cross_entropy(logits, label);
    }
    let t = smooth_target(logits.len(), label, eps);
    let ls = log_softmax(logits);
    Ok(-t.iter().zip(&ls).map(|(t, l)| t * l).sum::<f64>())
}

/// Mean smoothed cross-entropy over a batch of logits `[b, k]`.
pub fn softmax_cross_entropy(tape: &mut Tape, logits: Var, labels: &[usize], eps: f64) -> Result<Var> {
    let tz = tape.value(logits);
    expect_rank("softmax_cross_entropy", tz.shape(), 2)?;
    let (b, k) = (tz.shape()[0], tz.shape()[1]);
    if labels.len() != b {
        return Err(NnError::ShapeMismatch {
            op: "softmax_cross_entropy",
            left: tz.shape().to_vec(),
            right: vec![labels.len()],
        });
    }
    let mut total = 0.0;
    let mut dz = vec![0.0; b * k];
    for (i, (row, &y)) in tz.data().chunks(k).zip(labels).enumerate() {
        total += smooth_loss(row, y, eps)?;
        let p = softmax(row);
        let t = smooth_target(k, y, eps);
        for j in 0..k {
            dz[i * k + j] = (p[j] - t[j]) / b as f64;
        }
    }
    let bw: Option<BackwardFn> = tape.tracks(&[logits]).then(|| {
        Box::new(move |ctx: &BackwardCtx<'_>| {
            let g = ctx.grad[0];
            vec![Some(dz.iter().map(|d| d * g).collect())]
        }) as BackwardFn
    });
    Ok(tape.record(Tensor::scalar(total / b as f64), &[logits], bw))
}

use crate::error::{invalid, NnError, Result};
use crate::tape::{BackwardCtx, BackwardFn, Tape, Var};
use crate::tensor::Tensor;

/// Per-channel statistics of the batch seen by a train-mode batch norm.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    /// Biased (population) variance.
    pub var: Vec<f64>,
    /// Values reduced per channel.
    pub count: usize,
}

/// `(n, c, spatial)` for `[n, c, ...]`.
fn layout(op: &'static str, shape: &[usize]) -> Result<(usize, usize, usize)> {
    if shape.len() < 2 {
        return Err(invalid(op, format!("expected [n, c, ...], got {shape:?}")));
    }
    Ok((shape[0], shape[1], shape[2..].iter().product()))
}

fn check_affine(tape: &Tape, op: &'static str, x: Var, gamma: Var, beta: Var, c: usize) -> Result<()> {
    for v in [gamma, beta] {
        if tape.value(v).shape() != [c] {
            return Err(NnError::ShapeMismatch {
                op,
                left: tape.value(x).shape().to_vec(),
                right: tape.value(v).shape().to_vec(),
            });
        }
    }
    Ok(())
}

/// Affine backward shared by both modes: returns (gx, gγ, gβ) given x̂ and
/// the per-channel scale applied to the incoming gradient.
fn affine_grads(grad: &[f64], xhat: &[f64], n: usize, c: usize, s: usize) -> (Vec<f64>, Vec<f64>) {
    let mut g_gamma = vec![0.0; c];
    let mut g_beta = vec![0.0; c];
    for i in 0..n {
        for ch in 0..c {
            let base = (i * c + ch) * s;
            let (gs, xs) = (&grad[base..base + s], &xhat[base..base + s]);
            g_beta[ch] += gs.iter().sum::<f64>();
            g_gamma[ch] += gs.iter().zip(xs).map(|(g, x)| g * x).sum::<f64>();
        }
    }
    (g_gamma, g_beta)
}

/// Batch norm with batch statistics. Needs at least two samples.
pub fn batch_norm_train(tape: &mut Tape, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<(Var, BatchStats)> {
    let (n, c, s) = layout("batch_norm", tape.value(x).shape())?;
    if n < 2 {
        return Err(NnError::BatchTooSmall(n));
    }
    check_affine(tape, "batch_norm", x, gamma, beta, c)?;
    let xd = tape.value(x).data();
    let count = n * s;
    let mut mean = vec![0.0; c];
    let mut var = vec![0.0; c];
    for i in 0..n {
        for ch in 0..c {
            mean[ch] += xd[(i * c + ch) * s..][..s].iter().sum::<f64>();
        }
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);
    for i in 0..n {
        for ch in 0..c {
            let m = mean[ch];
            var[ch] += xd[(i * c + ch) * s..][..s].iter().map(|v| (v - m) * (v - m)).sum::<f64>();
        }
    }
    var.iter_mut().for_each(|v| *v /= count as f64);
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();

    let (gd, bd) = (tape.value(gamma).data(), tape.value(beta).data());
    let mut xhat = vec![0.0; xd.len()];
    let mut out = vec![0.0; xd.len()];
    for i in 0..n {
        for ch in 0..c {
            let base = (i * c + ch) * s;
            for k in base..base + s {
                xhat[k] = (xd[k] - mean[ch]) * inv_std[ch];
                out[k] = gd[ch] * xhat[k] + bd[ch];
            }
        }
    }
    let out = Tensor::new(tape.value(x).shape().to_vec(), out)?;
    let stats = BatchStats { mean, var, count };
    let bw: Option<BackwardFn> = tape.tracks(&[x, gamma, beta]).then(|| {
        Box::new(move |ctx: &BackwardCtx<'_>| {
            let (g_gamma, g_beta) = affine_grads(ctx.grad, &xhat, n, c, s);
            let gx = ctx.needs[0].then(|| {
                let gd = ctx.inputs[1].data();
                let m = count as f64;
                let mut gx = vec![0.0; xhat.len()];
                for i in 0..n {
                    for ch in 0..c {
                        let base = (i * c + ch) * s;
                        let k = gd[ch] * inv_std[ch] / m;
                        for j in base..base + s {
                            gx[j] = k * (m * ctx.grad[j] - g_beta[ch] - xhat[j] * g_gamma[ch]);
                        }
                    }
                }
                gx
            });
            vec![gx, ctx.needs[1].then_some(g_gamma), ctx.needs[2].then_some(g_beta)]
        }) as BackwardFn
    });
    Ok((tape.record(out, &[x, gamma, beta], bw), stats))
}

/// Batch norm as a fixed affine map using running statistics.
pub fn batch_norm_eval(tape: &mut Tape, x: Var, gamma: Var, beta: Var, running_mean: &[f64], running_var: &[f64], eps: f64) -> Result<Var> {
    let (n, c, s) = layout("batch_norm", tape.value(x).shape())?;
    check_affine(tape, "batch_norm", x, gamma, beta, c)?;
    if running_mean.len() != c || running_var.len() != c {
        return Err(invalid("batch_norm", "running statistics do not match channel count"));
    }
    let xd = tape.value(x).data();
    let inv_std: Vec<f64> = running_var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
    let (gd, bd) = (tape.value(gamma).data(), tape.value(beta).data());
    let mut xhat = vec![0.0; xd.len()];
    let mut out = vec![0.0; xd.len()];
    for i in 0..n {
        for ch in 0..c {
            let base = (i * c + ch) * s;
            for k in base..base + s {
                xhat[k] = (xd[k] - running_mean[ch]) * inv_std[ch];
                out[k] = gd[ch] * xhat[k] + bd[ch];
            }
        }
    }
    let out = Tensor::new(tape.value(x).shape().to_vec(), out)?;
    let bw: Option<BackwardFn> = tape.tracks(&[x, gamma, beta]).then(|| {
        Box::new(move |ctx: &BackwardCtx<'_>| {
            let (g_gamma, g_beta) = affine_grads(ctx.grad, &xhat, n, c, s);
            let gx = ctx.needs[0].then(|| {
                let gd = ctx.inputs[1].data();
                let mut gx = ctx.grad.to_vec();
                for i in 0..n {
                    for ch in 0..c {
                        let k = gd[ch] * inv_std[ch];
                        gx[(i * c + ch) * s..][..s].iter_mut().for_each(|g| *g *= k);
                    }
                }
                gx
            });
            vec![gx, ctx.needs[1].then_some(g_gamma), ctx.needs[2].then_some(g_beta)]
        }) as BackwardFn
    });
    Ok(tape.record(out, &[x, gamma, beta], bw))
}

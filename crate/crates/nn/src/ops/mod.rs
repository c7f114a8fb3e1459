//! Differentiable operations on a [`Tape`].
//!
//! Every function checks shapes up front and reports both operands on
//! mismatch. Backward closures are only built when some input requires a
//! gradient.

mod conv;
mod norm;
mod pool;

pub use conv::conv2d;
pub use norm::{batch_norm_eval, batch_norm_train, BatchStats};
pub use pool::{global_avg_pool2d, max_over_axis1, max_pool2d};

use crate::error::{invalid, NnError, Result};
use crate::gemm::{gemm, Mat};
use crate::tape::{BackwardFn, Tape, Var};
use crate::tensor::Tensor;

pub(crate) fn expect_rank(op: &'static str, shape: &[usize], rank: usize) -> Result<()> {
    if shape.len() != rank {
        return Err(invalid(op, format!("expected rank {rank}, got shape {shape:?}")));
    }
    Ok(())
}

pub fn add(tape: &mut Tape, a: Var, b: Var) -> Result<Var> {
    let (ta, tb) = (tape.value(a), tape.value(b));
    if ta.shape() != tb.shape() {
        return Err(NnError::ShapeMismatch {
            op: "add",
            left: ta.shape().to_vec(),
            right: tb.shape().to_vec(),
        });
    }
    let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x + y).collect();
    let out = Tensor::new(ta.shape().to_vec(), data)?;
    let bw: Option<BackwardFn> = tape
        .tracks(&[a, b])
        .then(|| Box::new(|ctx: &crate::BackwardCtx<'_>| ctx.needs.iter().map(|&n| n.then(|| ctx.grad.to_vec())).collect()) as BackwardFn);
    Ok(tape.record(out, &[a, b], bw))
}

pub fn relu(tape: &mut Tape, x: Var) -> Result<Var> {
    let tx = tape.value(x);
    let data = tx.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    let out = Tensor::new(tx.shape().to_vec(), data)?;
    let bw: Option<BackwardFn> = tape.tracks(&[x]).then(|| {
        Box::new(|ctx: &crate::BackwardCtx<'_>| {
            let g = ctx
                .grad
                .iter()
                .zip(ctx.inputs[0].data())
                .map(|(g, &v)| if v > 0.0 { *g } else { 0.0 })
                .collect();
            vec![Some(g)]
        }) as BackwardFn
    });
    Ok(tape.record(out, &[x], bw))
}

pub fn reshape(tape: &mut Tape, x: Var, shape: &[usize]) -> Result<Var> {
    let out = tape.value(x).clone().reshape(shape.to_vec())?;
    let bw: Option<BackwardFn> = tape
        .tracks(&[x])
        .then(|| Box::new(|ctx: &crate::BackwardCtx<'_>| vec![Some(ctx.grad.to_vec())]) as BackwardFn);
    Ok(tape.record(out, &[x], bw))
}

/// `x · wᵀ + b` for `x: [n, in]`, `w: [out, in]`, `b: [out]`.
pub fn linear(tape: &mut Tape, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
    let (tx, tw) = (tape.value(x), tape.value(w));
    expect_rank("linear", tx.shape(), 2)?;
    expect_rank("linear", tw.shape(), 2)?;
    let (n, fan_in) = (tx.shape()[0], tx.shape()[1]);
    let fan_out = tw.shape()[0];
    if tw.shape()[1] != fan_in {
        return Err(NnError::ShapeMismatch {
            op: "linear",
            left: tx.shape().to_vec(),
            right: tw.shape().to_vec(),
        });
    }
    let mut data = vec![0.0; n * fan_out];
    if let Some(b) = b {
        let tb = tape.value(b);
        if tb.shape() != [fan_out] {
            return Err(NnError::ShapeMismatch {
                op: "linear bias",
                left: tw.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        for row in data.chunks_mut(fan_out) {
            row.copy_from_slice(tb.data());
        }
    }
    gemm(
        Mat::row_major(tx.data(), n, fan_in),
        Mat::row_major(tw.data(), fan_out, fan_in).t(),
        1.0,
        &mut data,
    );
    let out = Tensor::new(vec![n, fan_out], data)?;
    let inputs: Vec<Var> = std::iter::once(x).chain(std::iter::once(w)).chain(b).collect();
    let bw: Option<BackwardFn> = tape.tracks(&inputs).then(|| {
        Box::new(move |ctx: &crate::BackwardCtx<'_>| {
            let (xv, wv) = (ctx.inputs[0].data(), ctx.inputs[1].data());
            let gy = Mat::row_major(ctx.grad, n, fan_out);
            let mut res = Vec::with_capacity(ctx.inputs.len());
            res.push(ctx.needs[0].then(|| {
                let mut gx = vec![0.0; n * fan_in];
                gemm(gy, Mat::row_major(wv, fan_out, fan_in), 0.0, &mut gx);
                gx
            }));
            res.push(ctx.needs[1].then(|| {
                let mut gw = vec![0.0; fan_out * fan_in];
                gemm(gy.t(), Mat::row_major(xv, n, fan_in), 0.0, &mut gw);
                gw
            }));
            if ctx.inputs.len() == 3 {
                res.push(ctx.needs[2].then(|| {
                    let mut gb = vec![0.0; fan_out];
                    for row in ctx.grad.chunks(fan_out) {
                        gb.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                    }
                    gb
                }));
            }
            res
        }) as BackwardFn
    });
    Ok(tape.record(out, &inputs, bw))
}

/// `Σ x_i · weights_i`, a scalar. Handy for probing gradients.
pub fn dot_const(tape: &mut Tape, x: Var, weights: &[f64]) -> Result<Var> {
    let tx = tape.value(x);
    if tx.numel() != weights.len() {
        return Err(NnError::ShapeMismatch {
            op: "dot_const",
            left: tx.shape().to_vec(),
            right: vec![weights.len()],
        });
    }
    let s = tx.data().iter().zip(weights).map(|(a, b)| a * b).sum();
    let weights = weights.to_vec();
    let bw: Option<BackwardFn> = tape.tracks(&[x]).then(|| {
        Box::new(move |ctx: &crate::BackwardCtx<'_>| {
            let g = ctx.grad[0];
            vec![Some(weights.iter().map(|w| w * g).collect())]
        }) as BackwardFn
    });
    Ok(tape.record(Tensor::scalar(s), &[x], bw))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn relu_gradient_is_a_mask() {
        let mut tape = Tape::new();
        let x = tape.leaf(t(&[2], &[-1.0, 2.0]), true);
        let y = relu(&mut tape, x).unwrap();
        let s = dot_const(&mut tape, y, &[1.0, 1.0]).unwrap();
        tape.backward(s).unwrap();
        assert_eq!(tape.grad(x).unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn add_rejects_mismatched_shapes() {
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::zeros(&[2, 3]), true);
        let b = tape.leaf(Tensor::zeros(&[3, 2]), true);
        match add(&mut tape, a, b) {
            Err(NnError::ShapeMismatch { left, right, .. }) => {
                assert_eq!(left, vec![2, 3]);
                assert_eq!(right, vec![3, 2]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn add_same_var_twice_accumulates() {
        let mut tape = Tape::new();
        let a = tape.leaf(t(&[2], &[1.0, 2.0]), true);
        let y = add(&mut tape, a, a).unwrap();
        let s = dot_const(&mut tape, y, &[1.0, 3.0]).unwrap();
        tape.backward(s).unwrap();
        assert_eq!(tape.grad(a).unwrap(), &[2.0, 6.0]);
    }

    #[test]
    fn linear_forward_matches_hand_values() {
        let mut tape = Tape::new();
        let x = tape.leaf(t(&[1, 3], &[1.0, 2.0, 3.0]), false);
        let w = tape.leaf(t(&[2, 3], &[1.0, 0.0, -1.0, 0.5, 0.5, 0.5]), true);
        let b = tape.leaf(t(&[2], &[0.25, -0.25]), true);
        let y = linear(&mut tape, x, w, Some(b)).unwrap();
        assert_eq!(tape.value(y).data(), &[-1.75, 2.75]);
    }

    #[test]
    fn inference_tape_records_no_closures() {
        let mut tape = Tape::inference();
        let x = tape.leaf(t(&[2], &[1.0, -1.0]), true);
        assert!(!tape.requires_grad(x));
        let y = relu(&mut tape, x).unwrap();
        assert!(!tape.requires_grad(y));
    }

    #[test]
    fn backward_needs_scalar() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::zeros(&[2]), true);
        assert!(matches!(tape.backward(x), Err(NnError::NonScalarLoss(_))));
    }
}

use super::expect_rank;
use crate::error::{invalid, Result};
use crate::tape::{BackwardCtx, BackwardFn, Tape, Var};
use crate::tensor::Tensor;

/// Max pooling over `k×k` windows; padding never wins the max.
/// Ties resolve to the first element in row-major window order.
pub fn max_pool2d(tape: &mut Tape, x: Var, k: usize, stride: usize, pad: usize) -> Result<Var> {
    let tx = tape.value(x);
    expect_rank("max_pool2d", tx.shape(), 4)?;
    if k == 0 || stride == 0 || pad >= k {
        return Err(invalid("max_pool2d", format!("bad window k={k} stride={stride} pad={pad}")));
    }
    let (n, c, h, w) = (tx.shape()[0], tx.shape()[1], tx.shape()[2], tx.shape()[3]);
    if h + 2 * pad < k || w + 2 * pad < k {
        return Err(invalid("max_pool2d", format!("window {k} larger than input {h}x{w}")));
    }
    let oh = (h + 2 * pad - k) / stride + 1;
    let ow = (w + 2 * pad - k) / stride + 1;
    let xd = tx.data();
    let mut out = vec![0.0; n * c * oh * ow];
    let mut arg = vec![0usize; out.len()];
    for plane in 0..n * c {
        let src = &xd[plane * h * w..][..h * w];
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut best_at = usize::MAX;
                for ki in 0..k {
                    let Some(iy) = (oy * stride + ki).checked_sub(pad).filter(|&v| v < h) else {
                        continue;
                    };
                    for kj in 0..k {
                        let Some(ix) = (ox * stride + kj).checked_sub(pad).filter(|&v| v < w) else {
                            continue;
                        };
                        let v = src[iy * w + ix];
                        if v > best || best_at == usize::MAX {
                            best = v;
                            best_at = iy * w + ix;
                        }
                    }
                }
                let o = (plane * oh + oy) * ow + ox;
                out[o] = best;
                arg[o] = plane * h * w + best_at;
            }
        }
    }
    let out = Tensor::new(vec![n, c, oh, ow], out)?;
    let len = xd.len();
    let bw: Option<BackwardFn> = tape.tracks(&[x]).then(|| {
        Box::new(move |ctx: &BackwardCtx<'_>| {
            let mut gx = vec![0.0; len];
            for (g, &a) in ctx.grad.iter().zip(&arg) {
                gx[a] += g;
            }
            vec![Some(gx)]
        }) as BackwardFn
    });
    Ok(tape.record(out, &[x], bw))
}

/// Mean over the spatial dimensions: `[n, c, h, w] -> [n, c]`.
pub fn global_avg_pool2d(tape: &mut Tape, x: Var) -> Result<Var> {
    let tx = tape.value(x);
    expect_rank("global_avg_pool2d", tx.shape(), 4)?;
    let (n, c) = (tx.shape()[0], tx.shape()[1]);
    let s = tx.shape()[2] * tx.shape()[3];
    if s == 0 {
        return Err(invalid("global_avg_pool2d", "empty spatial extent"));
    }
    let out: Vec<f64> = tx.data().chunks(s).map(|p| p.iter().sum::<f64>() / s as f64).collect();
    let out = Tensor::new(vec![n, c], out)?;
    let bw: Option<BackwardFn> = tape.tracks(&[x]).then(|| {
        Box::new(move |ctx: &BackwardCtx<'_>| {
            let gx = ctx.grad.iter().flat_map(|g| std::iter::repeat(g / s as f64).take(s)).collect();
            vec![Some(gx)]
        }) as BackwardFn
    });
    Ok(tape.record(out, &[x], bw))
}

/// Elementwise max over the middle axis: `[b, m, f] -> [b, f]`.
///
/// Used for pooling per-point features into a global descriptor and for
/// max-fusing per-view features. Ties resolve to the lowest index.
pub fn max_over_axis1(tape: &mut Tape, x: Var) -> Result<Var> {
    let tx = tape.value(x);
    expect_rank("max_over_axis1", tx.shape(), 3)?;
    let (b, m, f) = (tx.shape()[0], tx.shape()[1], tx.shape()[2]);
    if m == 0 {
        return Err(invalid("max_over_axis1", "cannot reduce an empty axis"));
    }
    let xd = tx.data();
    let mut out = vec![f64::NEG_INFINITY; b * f];
    let mut arg = vec![0usize; b * f];
    for i in 0..b {
        for j in 0..m {
            let row = &xd[(i * m + j) * f..][..f];
            for (k, &v) in row.iter().enumerate() {
                if j == 0 || v > out[i * f + k] {
                    out[i * f + k] = v;
                    arg[i * f + k] = (i * m + j) * f + k;
                }
            }
        }
    }
    let out = Tensor::new(vec![b, f], out)?;
    let len = xd.len();
    let bw: Option<BackwardFn> = tape.tracks(&[x]).then(|| {
        Box::new(move |ctx: &BackwardCtx<'_>| {
            let mut gx = vec![0.0; len];
            for (g, &a) in ctx.grad.iter().zip(&arg) {
                gx[a] += g;
            }
            vec![Some(gx)]
        }) as BackwardFn
    });
    Ok(tape.record(out, &[x], bw))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resnet_stem_pool_halves_resolution() {
        let mut tape = Tape::inference();
        let data: Vec<f64> = (0..16).map(f64::from).collect();
        let x = tape.constant(Tensor::new(vec![1, 1, 4, 4], data).unwrap());
        let y = max_pool2d(&mut tape, x, 3, 2, 1).unwrap();
        assert_eq!(tape.value(y).shape(), &[1, 1, 2, 2]);
        assert_eq!(tape.value(y).data(), &[5.0, 7.0, 13.0, 15.0]);
    }

    #[test]
    fn axis1_max_routes_gradient_to_winner() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::new(vec![1, 3, 2], vec![1.0, 9.0, 4.0, 2.0, 4.0, 3.0]).unwrap(), true);
        let y = max_over_axis1(&mut tape, x).unwrap();
        assert_eq!(tape.value(y).data(), &[4.0, 9.0]);
        let s = super::super::dot_const(&mut tape, y, &[1.0, 2.0]).unwrap();
        tape.backward(s).unwrap();
        // tie at 4.0 goes to the first occurrence (row 1)
        assert_eq!(tape.grad(x).unwrap(), &[0.0, 2.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn global_average() {
        let mut tape = Tape::inference();
        let x = tape.constant(Tensor::new(vec![1, 2, 1, 2], vec![1.0, 3.0, -2.0, 2.0]).unwrap());
        let y = global_avg_pool2d(&mut tape, x).unwrap();
        assert_eq!(tape.value(y).data(), &[2.0, 0.0]);
    }
}

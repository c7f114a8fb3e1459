use super::expect_rank;
use crate::error::{invalid, NnError, Result};
use crate::gemm::{gemm, Mat};
use crate::tape::{BackwardCtx, BackwardFn, Tape, Var};
use crate::tensor::Tensor;

#[derive(Clone, Copy)]
struct Geometry {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
}

impl Geometry {
    fn patch(&self) -> usize {
        self.c * self.kh * self.kw
    }

    fn cols(&self) -> usize {
        self.n * self.oh * self.ow
    }

    /// Source pixel for output coordinate `o` and kernel offset `k`.
    #[inline]
    fn src(&self, o: usize, k: usize, limit: usize) -> Option<usize> {
        let pos = (o * self.stride + k).checked_sub(self.pad)?;
        (pos < limit).then_some(pos)
    }
}

/// Lays out every receptive field as a column: `[c·kh·kw, n·oh·ow]`.
fn im2col(x: &[f64], g: &Geometry) -> Vec<f64> {
    let (p, ncols) = (g.oh * g.ow, g.cols());
    let mut cols = vec![0.0; g.patch() * ncols];
    for c in 0..g.c {
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let dst_row = &mut cols[row * ncols..(row + 1) * ncols];
                for n in 0..g.n {
                    let plane = &x[(n * g.c + c) * g.h * g.w..][..g.h * g.w];
                    let dst = &mut dst_row[n * p..(n + 1) * p];
                    for oy in 0..g.oh {
                        let Some(iy) = g.src(oy, ki, g.h) else { continue };
                        for ox in 0..g.ow {
                            if let Some(ix) = g.src(ox, kj, g.w) {
                                dst[oy * g.ow + ox] = plane[iy * g.w + ix];
                            }
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im(cols: &[f64], g: &Geometry) -> Vec<f64> {
    let (p, ncols) = (g.oh * g.ow, g.cols());
    let mut x = vec![0.0; g.n * g.c * g.h * g.w];
    for c in 0..g.c {
        for ki in 0..g.kh {
            for kj in 0..g.kw {
                let row = (c * g.kh + ki) * g.kw + kj;
                let src_row = &cols[row * ncols..(row + 1) * ncols];
                for n in 0..g.n {
                    let plane = &mut x[(n * g.c + c) * g.h * g.w..][..g.h * g.w];
                    let src = &src_row[n * p..(n + 1) * p];
                    for oy in 0..g.oh {
                        let Some(iy) = g.src(oy, ki, g.h) else { continue };
                        for ox in 0..g.ow {
                            if let Some(ix) = g.src(ox, kj, g.w) {
                                plane[iy * g.w + ix] += src[oy * g.ow + ox];
                            }
                        }
                    }
                }
            }
        }
    }
    x
}

/// 2-D cross-correlation of `x: [n, c, h, w]` with `w: [o, c, kh, kw]`,
/// optional bias `[o]`, zero padding on all sides.
pub fn conv2d(tape: &mut Tape, x: Var, w: Var, b: Option<Var>, stride: usize, pad: usize) -> Result<Var> {
    let (tx, tw) = (tape.value(x), tape.value(w));
    expect_rank("conv2d", tx.shape(), 4)?;
    expect_rank("conv2d", tw.shape(), 4)?;
    if stride == 0 {
        return Err(invalid("conv2d", "stride must be positive"));
    }
    let (n, c, h, wd) = (tx.shape()[0], tx.shape()[1], tx.shape()[2], tx.shape()[3]);
    let (o, kc, kh, kw) = (tw.shape()[0], tw.shape()[1], tw.shape()[2], tw.shape()[3]);
    if kc != c {
        return Err(NnError::ShapeMismatch {
            op: "conv2d",
            left: tx.shape().to_vec(),
            right: tw.shape().to_vec(),
        });
    }
    if h + 2 * pad < kh || wd + 2 * pad < kw {
        return Err(invalid(
            "conv2d",
            format!("kernel {kh}x{kw} larger than padded input {h}x{wd} (pad {pad})"),
        ));
    }
    let g = Geometry {
        n,
        c,
        h,
        w: wd,
        kh,
        kw,
        stride,
        pad,
        oh: (h + 2 * pad - kh) / stride + 1,
        ow: (wd + 2 * pad - kw) / stride + 1,
    };
    if let Some(b) = b {
        if tape.value(b).shape() != [o] {
            return Err(NnError::ShapeMismatch {
                op: "conv2d bias",
                left: tw.shape().to_vec(),
                right: tape.value(b).shape().to_vec(),
            });
        }
    }

    let cols = im2col(tx.data(), &g);
    let (p, ncols, patch) = (g.oh * g.ow, g.cols(), g.patch());
    let mut flat = vec![0.0; o * ncols];
    gemm(
        Mat::row_major(tw.data(), o, patch),
        Mat::row_major(&cols, patch, ncols),
        0.0,
        &mut flat,
    );
    let bias = b.map(|b| tape.value(b).data().to_vec());
    let mut out = vec![0.0; n * o * p];
    for oc in 0..o {
        let shift = bias.as_ref().map_or(0.0, |b| b[oc]);
        for s in 0..n {
            let src = &flat[oc * ncols + s * p..][..p];
            let dst = &mut out[(s * o + oc) * p..][..p];
            for (d, v) in dst.iter_mut().zip(src) {
                *d = v + shift;
            }
        }
    }
    let out = Tensor::new(vec![n, o, g.oh, g.ow], out)?;

    let inputs: Vec<Var> = [x, w].into_iter().chain(b).collect();
    let bw: Option<BackwardFn> = tape.tracks(&inputs).then(|| {
        Box::new(move |ctx: &BackwardCtx<'_>| {
            // [n, o, p] -> [o, n·p]
            let mut gy = vec![0.0; o * ncols];
            for s in 0..n {
                for oc in 0..o {
                    gy[oc * ncols + s * p..][..p].copy_from_slice(&ctx.grad[(s * o + oc) * p..][..p]);
                }
            }
            let gy_mat = Mat::row_major(&gy, o, ncols);
            let mut res = Vec::with_capacity(ctx.inputs.len());
            res.push(ctx.needs[0].then(|| {
                let mut gcols = vec![0.0; patch * ncols];
                gemm(Mat::row_major(ctx.inputs[1].data(), o, patch).t(), gy_mat, 0.0, &mut gcols);
                col2im(&gcols, &g)
            }));
            res.push(ctx.needs[1].then(|| {
                let mut gw = vec![0.0; o * patch];
                gemm(gy_mat, Mat::row_major(&cols, patch, ncols).t(), 0.0, &mut gw);
                gw
            }));
            if ctx.inputs.len() == 3 {
                res.push(ctx.needs[2].then(|| gy.chunks(ncols).map(|r| r.iter().sum()).collect()));
            }
            res
        }) as BackwardFn
    });
    Ok(tape.record(out, &inputs, bw))
}

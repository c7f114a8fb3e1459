use orthoview_nn::layers::{BatchNorm, Conv2d};
use orthoview_nn::{ops, ParamStore, Session, Var};
use rand::Rng;

use crate::error::Result;

/// Stage widths of the full-size ResNet18.
pub const BASE_WIDTHS: [usize; 4] = [64, 128, 256, 512];

#[derive(Clone, Debug)]
struct BasicBlock {
    conv1: Conv2d,
    bn1: BatchNorm,
    conv2: Conv2d,
    bn2: BatchNorm,
    shortcut: Option<(Conv2d, BatchNorm)>,
}

impl BasicBlock {
    fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, cin: usize, cout: usize, stride: usize, r: &mut R) -> Result<Self> {
        let shortcut = if stride != 1 || cin != cout {
            Some((
                Conv2d::new(store, &format!("{name}.down.conv"), cin, cout, 1, stride, 0, false, r)?,
                BatchNorm::new(store, &format!("{name}.down.bn"), cout)?,
            ))
        } else {
            None
        };
        Ok(Self {
            conv1: Conv2d::new(store, &format!("{name}.conv1"), cin, cout, 3, stride, 1, false, r)?,
            bn1: BatchNorm::new(store, &format!("{name}.bn1"), cout)?,
            conv2: Conv2d::new(store, &format!("{name}.conv2"), cout, cout, 3, 1, 1, false, r)?,
            bn2: BatchNorm::new(store, &format!("{name}.bn2"), cout)?,
            shortcut,
        })
    }

    fn forward(&self, s: &mut Session<'_>, x: Var) -> Result<Var> {
        let h = self.conv1.forward(s, x)?;
        let h = self.bn1.forward(s, h)?;
        let h = ops::relu(&mut s.tape, h)?;
        let h = self.conv2.forward(s, h)?;
        let h = self.bn2.forward(s, h)?;
        let skip = match &self.shortcut {
            Some((conv, bn)) => {
                let d = conv.forward(s, x)?;
                bn.forward(s, d)?
            }
            None => x,
        };
        let y = ops::add(&mut s.tape, h, skip)?;
        Ok(ops::relu(&mut s.tape, y)?)
    }
}

/// ResNet18 with every channel count divided by q, on 1-channel images.
/// Maps `[n, 1, R, R]` to `[n, 512/q]`.
#[derive(Clone, Debug)]
pub struct ResNet18 {
    stem: Conv2d,
    stem_bn: BatchNorm,
    blocks: Vec<BasicBlock>,
    width: usize,
}

impl ResNet18 {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, q: usize, r: &mut R) -> Result<Self> {
        let widths = BASE_WIDTHS.map(|w| w / q);
        let stem = Conv2d::new(store, &format!("{name}.stem"), 1, widths[0], 7, 2, 3, false, r)?;
        let stem_bn = BatchNorm::new(store, &format!("{name}.stem_bn"), widths[0])?;
        let mut blocks = Vec::new();
        let mut cin = widths[0];
        for (stage, &w) in widths.iter().enumerate() {
            for b in 0..2 {
                let stride = if stage > 0 && b == 0 { 2 } else { 1 };
                blocks.push(BasicBlock::new(
                    store,
                    &format!("{name}.layer{}.{b}", stage + 1),
                    cin,
                    w,
                    stride,
                    r,
                )?);
                cin = w;
            }
        }
        Ok(Self {
            stem,
            stem_bn,
            blocks,
            width: widths[3],
        })
    }

    pub fn feature_width(&self) -> usize {
        self.width
    }

    pub fn forward(&self, s: &mut Session<'_>, x: Var) -> Result<Var> {
        let h = self.stem.forward(s, x)?;
        let h = self.stem_bn.forward(s, h)?;
        let h = ops::relu(&mut s.tape, h)?;
        let mut h = ops::max_pool2d(&mut s.tape, h, 3, 2, 1)?;
        for block in &self.blocks {
            h = block.forward(s, h)?;
        }
        Ok(ops::global_avg_pool2d(&mut s.tape, h)?)
    }
}

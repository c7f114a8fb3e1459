use orthoview_nn::layers::{BatchNorm, Linear};
use orthoview_nn::{ops, ParamStore, Session, Var};
use rand::Rng;

use crate::error::Result;

/// Shared per-point MLP (linear, batch norm, ReLU per layer) followed by a
/// max over points. No input or feature transform networks.
#[derive(Clone, Debug)]
pub struct PointNetLite {
    layers: Vec<(Linear, BatchNorm)>,
    width: usize,
}

impl PointNetLite {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, widths: &[usize], r: &mut R) -> Result<Self> {
        let mut layers = Vec::new();
        let mut cin = 3;
        for (i, &w) in widths.iter().enumerate() {
            layers.push((
                Linear::new(store, &format!("{name}.mlp{i}"), cin, w, false, r)?,
                BatchNorm::new(store, &format!("{name}.bn{i}"), w)?,
            ));
            cin = w;
        }
        Ok(Self { layers, width: cin })
    }

    pub fn feature_width(&self) -> usize {
        self.width
    }

    /// `[B·N, 3]` points to `[B, F]` features.
    pub fn forward(&self, s: &mut Session<'_>, x: Var, batch: usize) -> Result<Var> {
        let mut h = x;
        for (lin, bn) in &self.layers {
            h = lin.forward(s, h)?;
            h = bn.forward(s, h)?;
            h = ops::relu(&mut s.tape, h)?;
        }
        let shape = s.tape.shape(h).to_vec();
        let n = shape[0] / batch.max(1);
        let h = ops::reshape(&mut s.tape, h, &[batch, n, shape[1]])?;
        Ok(ops::max_over_axis1(&mut s.tape, h)?)
    }
}

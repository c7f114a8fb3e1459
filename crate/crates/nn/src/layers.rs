//! Layers that own parameters in a [`ParamStore`] and run on a [`Session`].

use rand::Rng;

use crate::error::Result;
use crate::init::he_normal;
use crate::ops;
use crate::param::{ParamId, ParamStore};
use crate::session::{Mode, Session};
use crate::tape::Var;
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct Conv2d {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub stride: usize,
    pub padding: usize,
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        bias: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let fan_in = in_channels * kernel * kernel;
        let w = he_normal(&[out_channels, in_channels, kernel, kernel], fan_in, rng);
        let weight = store.add_param(&format!("{name}.weight"), w)?;
        let bias = if bias {
            Some(store.add_param(&format!("{name}.bias"), Tensor::zeros(&[out_channels]))?)
        } else {
            None
        };
        Ok(Self {
            weight,
            bias,
            stride,
            padding,
        })
    }

    pub fn forward(&self, s: &mut Session<'_>, x: Var) -> Result<Var> {
        let w = s.param(self.weight);
        let b = self.bias.map(|b| s.param(b));
        ops::conv2d(&mut s.tape, x, w, b, self.stride, self.padding)
    }
}

/// Batch normalization over dimension 1 of `[n, c, ...]`.
#[derive(Clone, Debug)]
pub struct BatchNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: ParamId,
    pub running_var: ParamId,
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNorm {
    pub const DEFAULT_MOMENTUM: f64 = 0.1;
    pub const DEFAULT_EPS: f64 = 1e-5;

    pub fn new(store: &mut ParamStore, name: &str, channels: usize) -> Result<Self> {
        Ok(Self {
            gamma: store.add_param(&format!("{name}.gamma"), Tensor::filled(&[channels], 1.0))?,
            beta: store.add_param(&format!("{name}.beta"), Tensor::zeros(&[channels]))?,
            running_mean: store.add_buffer(&format!("{name}.running_mean"), Tensor::zeros(&[channels]))?,
            running_var: store.add_buffer(&format!("{name}.running_var"), Tensor::filled(&[channels], 1.0))?,
            momentum: Self::DEFAULT_MOMENTUM,
            eps: Self::DEFAULT_EPS,
        })
    }

    pub fn forward(&self, s: &mut Session<'_>, x: Var) -> Result<Var> {
        let gamma = s.param(self.gamma);
        let beta = s.param(self.beta);
        match s.mode() {
            Mode::Train => {
                let (y, stats) = ops::batch_norm_train(&mut s.tape, x, gamma, beta, self.eps)?;
                // running variance tracks the unbiased estimate
                let unbias = stats.count as f64 / (stats.count as f64 - 1.0).max(1.0);
                let m = self.momentum;
                let store = s.store_mut()?;
                let rm = store.get_mut(self.running_mean).value.data_mut();
                rm.iter_mut().zip(&stats.mean).for_each(|(r, v)| *r = (1.0 - m) * *r + m * v);
                let rv = store.get_mut(self.running_var).value.data_mut();
                rv.iter_mut()
                    .zip(&stats.var)
                    .for_each(|(r, v)| *r = (1.0 - m) * *r + m * v * unbias);
                Ok(y)
            }
            Mode::Eval => {
                let store = s.store();
                let mean = store.get(self.running_mean).value.data().to_vec();
                let var = store.get(self.running_var).value.data().to_vec();
                ops::batch_norm_eval(&mut s.tape, x, gamma, beta, &mean, &var, self.eps)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        in_features: usize,
        out_features: usize,
        bias: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let w = he_normal(&[out_features, in_features], in_features, rng);
        let weight = store.add_param(&format!("{name}.weight"), w)?;
        let bias = if bias {
            Some(store.add_param(&format!("{name}.bias"), Tensor::zeros(&[out_features]))?)
        } else {
            None
        };
        Ok(Self { weight, bias })
    }

    pub fn forward(&self, s: &mut Session<'_>, x: Var) -> Result<Var> {
        let w = s.param(self.weight);
        let b = self.bias.map(|b| s.param(b));
        ops::linear(&mut s.tape, x, w, b)
    }
}

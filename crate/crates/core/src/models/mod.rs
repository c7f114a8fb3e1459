//! SimpleView (shared ResNet18/q over depth views, then fusion and a small
//! head) and PointNet-lite (shared per-point MLP, max pool, head).

mod checkpoint;
mod pointnet;
mod resnet;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use pointnet::PointNetLite;
pub use resnet::{ResNet18, BASE_WIDTHS};

use std::fmt;
use std::str::FromStr;

use orthoview_nn::layers::Linear;
use orthoview_nn::{ops, ParamStore, Session, Tensor, Var};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::PointCloud;
use crate::projection::{render_multiview, RenderConfig};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Simpleview,
    Pointnet,
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simpleview" => Ok(Self::Simpleview),
            "pointnet" | "pointnet_lite" => Ok(Self::Pointnet),
            _ => Err(invalid(format!("unknown architecture {s:?}"))),
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Simpleview => "simpleview",
            Self::Pointnet => "pointnet",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    /// Per-view features side by side, in camera order.
    Concat,
    /// Elementwise max over views.
    Pool,
}

impl FromStr for Fusion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concat" => Ok(Self::Concat),
            "pool" => Ok(Self::Pool),
            _ => Err(invalid(format!("unknown fusion {s:?}"))),
        }
    }
}

impl fmt::Display for Fusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Concat => "concat",
            Self::Pool => "pool",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Arch,
    /// ResNet18 channel divisor q.
    pub width_divisor: usize,
    pub render: RenderConfig,
    pub fusion: Fusion,
    pub n_classes: usize,
    pub head_hidden: usize,
    /// Per-point MLP widths of PointNet-lite.
    pub point_widths: Vec<usize>,
}

impl ModelConfig {
    /// ResNet18/4 SimpleView over six perspective minimum-depth views.
    pub fn simpleview(n_classes: usize) -> Self {
        Self {
            arch: Arch::Simpleview,
            width_divisor: 4,
            render: RenderConfig::default(),
            fusion: Fusion::Concat,
            n_classes,
            head_hidden: 128,
            point_widths: vec![64, 64, 128, 256],
        }
    }

    pub fn pointnet(n_classes: usize) -> Self {
        Self {
            arch: Arch::Pointnet,
            ..Self::simpleview(n_classes)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(invalid("a classifier needs at least 2 classes"));
        }
        if self.head_hidden == 0 {
            return Err(invalid("head width must be positive"));
        }
        match self.arch {
            Arch::Simpleview => {
                if self.width_divisor == 0 || BASE_WIDTHS.iter().any(|w| w / self.width_divisor == 0) {
                    return Err(invalid(format!(
                        "width divisor {} leaves a stage without channels",
                        self.width_divisor
                    )));
                }
                if self.render.resolution < 16 {
                    return Err(invalid("SimpleView needs resolution >= 16"));
                }
                if ![1, 3, 6].contains(&self.render.views) {
                    return Err(invalid("view count must be 1, 3 or 6"));
                }
            }
            Arch::Pointnet => {
                if self.point_widths.is_empty() || self.point_widths.contains(&0) {
                    return Err(invalid("point MLP widths must be positive"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Body {
    SimpleView(ResNet18),
    PointNet(PointNetLite),
}

/// Layer structure of a model; parameters live in a separate [`ParamStore`].
#[derive(Clone, Debug)]
pub struct Network {
    pub config: ModelConfig,
    body: Body,
    fc1: Linear,
    fc2: Linear,
}

impl Network {
    /// Registers all parameters in `store`, He-normal initialized from `seed`.
    pub fn build(config: &ModelConfig, store: &mut ParamStore, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut r = rng::stream(seed, "init", 0, 0);
        let (body, features) = match config.arch {
            Arch::Simpleview => {
                let net = ResNet18::new(store, "backbone", config.width_divisor, &mut r)?;
                let width = net.feature_width();
                let fused = match config.fusion {
                    Fusion::Concat => config.render.views * width,
                    Fusion::Pool => width,
                };
                (Body::SimpleView(net), fused)
            }
            Arch::Pointnet => {
                let net = PointNetLite::new(store, "points", &config.point_widths, &mut r)?;
                let width = net.feature_width();
                (Body::PointNet(net), width)
            }
        };
        let fc1 = Linear::new(store, "head.fc1", features, config.head_hidden, true, &mut r)?;
        let fc2 = Linear::new(store, "head.fc2", config.head_hidden, config.n_classes, true, &mut r)?;
        Ok(Self {
            config: config.clone(),
            body,
            fc1,
            fc2,
        })
    }

    /// Network input for a batch: `[B·V, 1, R, R]` depth images, or
    /// `[B·N, 3]` points (all clouds must have the same size).
    pub fn input_tensor(&self, clouds: &[PointCloud]) -> Result<Tensor> {
        if clouds.is_empty() {
            return Err(invalid("empty batch"));
        }
        match self.body {
            Body::SimpleView(_) => {
                let r = &self.config.render;
                let mut data = Vec::with_capacity(clouds.len() * r.views * r.resolution * r.resolution);
                for c in clouds {
                    data.extend(render_multiview(c, r)?.data);
                }
                Ok(Tensor::new(vec![clouds.len() * r.views, 1, r.resolution, r.resolution], data)?)
            }
            Body::PointNet(_) => {
                let n = clouds[0].len();
                if clouds.iter().any(|c| c.len() != n) {
                    return Err(invalid("clouds in a batch differ in size"));
                }
                let data = clouds.iter().flat_map(|c| c.points.iter().flatten().copied()).collect();
                Ok(Tensor::new(vec![clouds.len() * n, 3], data)?)
            }
        }
    }

    /// Logits `[B, K]` for an input built by [`Network::input_tensor`].
    pub fn forward(&self, s: &mut Session<'_>, x: Var, batch: usize) -> Result<Var> {
        let fused = match &self.body {
            Body::SimpleView(net) => {
                let feats = net.forward(s, x)?;
                let (v, f) = (self.config.render.views, net.feature_width());
                if s.tape.shape(feats)[0] != batch * v {
                    return Err(invalid(format!(
                        "expected {} view images, got {}",
                        batch * v,
                        s.tape.shape(feats)[0]
                    )));
                }
                match self.config.fusion {
                    Fusion::Concat => ops::reshape(&mut s.tape, feats, &[batch, v * f])?,
                    Fusion::Pool => {
                        let stacked = ops::reshape(&mut s.tape, feats, &[batch, v, f])?;
                        ops::max_over_axis1(&mut s.tape, stacked)?
                    }
                }
            }
            Body::PointNet(net) => net.forward(s, x, batch)?,
        };
        self.head(s, fused)
    }

    /// The classifier head on already fused features `[B, F]`.
    pub fn head(&self, s: &mut Session<'_>, fused: Var) -> Result<Var> {
        let h = self.fc1.forward(s, fused)?;
        let h = ops::relu(&mut s.tape, h)?;
        Ok(self.fc2.forward(s, h)?)
    }

    pub fn feature_width(&self) -> usize {
        match &self.body {
            Body::SimpleView(net) => net.feature_width(),
            Body::PointNet(net) => net.feature_width(),
        }
    }
}

/// A network together with its parameters.
#[derive(Clone, Debug)]
pub struct Model {
    pub net: Network,
    pub store: ParamStore,
}

/// Inference batch size; eval-mode outputs do not depend on it.
const EVAL_CHUNK: usize = 32;

impl Model {
    pub fn new(config: &ModelConfig, seed: u64) -> Result<Self> {
        let mut store = ParamStore::new();
        let net = Network::build(config, &mut store, seed)?;
        Ok(Self { net, store })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.net.config
    }

    pub fn count_params(&self) -> usize {
        self.store.count_params()
    }

    /// Eval-mode logits, one row per cloud.
    pub fn logits(&self, clouds: &[PointCloud]) -> Result<Vec<Vec<f64>>> {
        let k = self.net.config.n_classes;
        let mut out = Vec::with_capacity(clouds.len());
        for chunk in clouds.chunks(EVAL_CHUNK) {
            let mut s = Session::eval(&self.store);
            let x = self.net.input_tensor(chunk)?;
            let x = s.input(x);
            let y = self.net.forward(&mut s, x, chunk.len())?;
            out.extend(s.value(y).data().chunks(k).map(<[f64]>::to_vec));
        }
        Ok(out)
    }
}

/// Anything that maps a batch of clouds to one logit row per cloud.
pub trait Classifier {
    fn logits(&self, clouds: &[PointCloud]) -> Result<Vec<Vec<f64>>>;
}

impl Classifier for Model {
    fn logits(&self, clouds: &[PointCloud]) -> Result<Vec<Vec<f64>>> {
        Model::logits(self, clouds)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

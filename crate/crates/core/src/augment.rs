//! Training-time augmentations and the per-protocol augmentation presets.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::PointCloud;
use crate::rng::{self, Stream};

/// The four named training protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolId {
    Pointnet2,
    Dgcnn,
    Rscnn,
    Simpleview,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 4] = [ProtocolId::Pointnet2, ProtocolId::Dgcnn, ProtocolId::Rscnn, ProtocolId::Simpleview];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::Pointnet2 => "pointnet2",
            ProtocolId::Dgcnn => "dgcnn",
            ProtocolId::Rscnn => "rscnn",
            ProtocolId::Simpleview => "simpleview",
        }
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| invalid(format!("unknown protocol {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentOp {
    RotateY,
    Scale,
    Translate,
    Jitter,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterSpec {
    pub enabled: bool,
    pub sigma: f64,
    pub clip: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotateSpec {
    pub enabled: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSpec {
    pub enabled: bool,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslateSpec {
    pub enabled: bool,
    pub range: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub jitter: JitterSpec,
    pub rotate_y: RotateSpec,
    pub scale: ScaleSpec,
    pub translate: TranslateSpec,
    pub order: Vec<AugmentOp>,
}

impl Default for AugmentSpec {
    /// Everything disabled, default magnitudes.
    fn default() -> Self {
        Self {
            jitter: JitterSpec {
                enabled: false,
                sigma: 0.01,
                clip: 0.05,
            },
            rotate_y: RotateSpec { enabled: false },
            scale: ScaleSpec {
                enabled: false,
                lo: 0.8,
                hi: 1.25,
            },
            translate: TranslateSpec {
                enabled: false,
                range: 0.1,
            },
            order: vec![AugmentOp::RotateY, AugmentOp::Scale, AugmentOp::Translate, AugmentOp::Jitter],
        }
    }
}

impl AugmentSpec {
    pub fn validate(&self) -> Result<()> {
        let j = &self.jitter;
        if !(j.sigma >= 0.0) || !(j.clip >= 0.0) {
            return Err(invalid("jitter sigma and clip must be non-negative"));
        }
        if !(self.scale.lo > 0.0 && self.scale.lo <= self.scale.hi) {
            return Err(invalid("scale range needs 0 < lo <= hi"));
        }
        if !(self.translate.range >= 0.0) {
            return Err(invalid("translate range must be non-negative"));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        !(self.jitter.enabled || self.rotate_y.enabled || self.scale.enabled || self.translate.enabled)
    }

    /// Enabled operations, in application order.
    pub fn enabled_ops(&self) -> Vec<AugmentOp> {
        self.order
            .iter()
            .copied()
            .filter(|op| match op {
                AugmentOp::RotateY => self.rotate_y.enabled,
                AugmentOp::Scale => self.scale.enabled,
                AugmentOp::Translate => self.translate.enabled,
                AugmentOp::Jitter => self.jitter.enabled,
            })
            .collect()
    }
}

/// Augmentation set of a named protocol.
pub fn preset(protocol: ProtocolId) -> AugmentSpec {
    let mut spec = AugmentSpec::default();
    spec.scale.enabled = true;
    spec.translate.enabled = true;
    if protocol == ProtocolId::Pointnet2 {
        spec.jitter.enabled = true;
        spec.rotate_y.enabled = true;
    }
    spec
}

pub fn jitter_with(cloud: &PointCloud, sigma: f64, clip: f64, rng: &mut Stream) -> Result<PointCloud> {
    if !(clip >= 0.0) || !(sigma >= 0.0) {
        return Err(invalid("jitter needs sigma >= 0 and clip >= 0"));
    }
    if sigma == 0.0 {
        return Ok(cloud.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
    let mut out = cloud.clone();
    for p in out.points.iter_mut() {
        for c in p.iter_mut() {
            *c += normal.sample(rng).clamp(-clip, clip);
        }
    }
    Ok(out)
}

/// Adds `clamp(N(0, σ²), −clip, clip)` to every coordinate.
pub fn jitter(cloud: &PointCloud, sigma: f64, clip: f64, seed: u64) -> Result<PointCloud> {
    jitter_with(cloud, sigma, clip, &mut rng::stream(seed, "jitter", 0, 0))
}

/// Rotation about +y: `x' = x cos θ + z sin θ`, `z' = −x sin θ + z cos θ`.
pub fn rotate_y(cloud: &PointCloud, angle: f64) -> PointCloud {
    let (s, c) = angle.sin_cos();
    cloud.map_points(|[x, y, z]| [x * c + z * s, y, -x * s + z * c])
}

pub fn random_rotate_y_with(cloud: &PointCloud, rng: &mut Stream) -> PointCloud {
    rotate_y(cloud, 2.0 * PI * rng.random::<f64>())
}

pub fn random_scale_with(cloud: &PointCloud, lo: f64, hi: f64, rng: &mut Stream) -> PointCloud {
    let s = if lo == hi { lo } else { rng.random_range(lo..hi) };
    cloud.map_points(|p| p.map(|v| v * s))
}

/// Multiplies every coordinate by one `s ~ U[lo, hi]`.
pub fn random_scale(cloud: &PointCloud, lo: f64, hi: f64, seed: u64) -> PointCloud {
    random_scale_with(cloud, lo, hi, &mut rng::stream(seed, "scale", 0, 0))
}

pub fn random_translate_with(cloud: &PointCloud, range: f64, rng: &mut Stream) -> PointCloud {
    if range == 0.0 {
        return cloud.clone();
    }
    let t: [f64; 3] = [0; 3].map(|_| rng.random_range(-range..=range));
    cloud.map_points(|p| [p[0] + t[0], p[1] + t[1], p[2] + t[2]])
}

/// Adds one `t ~ U[−range, range]³` to every point.
pub fn random_translate(cloud: &PointCloud, range: f64, seed: u64) -> PointCloud {
    random_translate_with(cloud, range, &mut rng::stream(seed, "translate", 0, 0))
}

/// Applies the enabled operations in `spec.order`. Draws come from one
/// stream keyed by `(seed, id, epoch)`.
pub fn apply(cloud: &PointCloud, spec: &AugmentSpec, seed: u64, id: u64, epoch: u64) -> Result<PointCloud> {
    spec.validate()?;
    let mut rng = rng::stream(seed, "augment", id, epoch);
    let mut out = cloud.clone();
    for op in spec.enabled_ops() {
        out = match op {
            AugmentOp::RotateY => random_rotate_y_with(&out, &mut rng),
            AugmentOp::Scale => random_scale_with(&out, spec.scale.lo, spec.scale.hi, &mut rng),
            AugmentOp::Translate => random_translate_with(&out, spec.translate.range, &mut rng),
            AugmentOp::Jitter => jitter_with(&out, spec.jitter.sigma, spec.jitter.clip, &mut rng)?,
        };
    }
    Ok(out)
}

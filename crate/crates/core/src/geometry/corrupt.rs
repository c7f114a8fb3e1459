use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{dot, norm, sub, DatasetSplit, Point3, PointCloud};
use crate::error::{invalid, Result};
use crate::rng::{self, Stream};

pub const DEFAULT_BACKGROUND: f64 = 0.2;
pub const DEFAULT_HOLE_RADIUS: f64 = 0.25;
pub const DEFAULT_OCCLUSION_TAU: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationAxis {
    /// Axis drawn uniformly from the unit sphere.
    Random,
    Y,
}

/// Which corruptions to apply. Application order is fixed:
/// rotate, hole, occlusion, background.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorruptionSpec {
    /// Fraction β of points replaced by uniform samples in `[-1, 1]³`.
    pub background: Option<f64>,
    /// Radius ρ of a ball, centered on a random cloud point, emptied of points.
    pub hole: Option<f64>,
    /// Threshold τ: points with `p·d > τ` for a random unit `d` are removed.
    pub occlusion: Option<f64>,
    pub rotate: Option<RotationAxis>,
}

impl CorruptionSpec {
    /// Background, hole and random-axis rotation at the default magnitudes.
    pub fn scan_like() -> Self {
        Self {
            background: Some(DEFAULT_BACKGROUND),
            hole: Some(DEFAULT_HOLE_RADIUS),
            occlusion: None,
            rotate: Some(RotationAxis::Random),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.background.is_none() && self.hole.is_none() && self.occlusion.is_none() && self.rotate.is_none()
    }
}

/// The random quantities drawn by [`corrupt_traced`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorruptionTrace {
    pub rotation: Option<(Point3, f64)>,
    pub hole_center: Option<Point3>,
    pub occlusion_dir: Option<Point3>,
    /// Positions replaced by background points.
    pub background_idx: Vec<usize>,
}

fn unit_vector(rng: &mut Stream) -> Point3 {
    loop {
        let v: Point3 = [StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng)];
        let n = norm(v);
        if n > 1e-12 {
            return v.map(|c| c / n);
        }
    }
}

/// Rodrigues rotation by `theta` about the unit vector `axis`.
pub fn rotate_about_axis(cloud: &PointCloud, axis: Point3, theta: f64) -> PointCloud {
    let (s, c) = theta.sin_cos();
    let k = axis;
    cloud.map_points(|p| {
        let kxp = [k[1] * p[2] - k[2] * p[1], k[2] * p[0] - k[0] * p[2], k[0] * p[1] - k[1] * p[0]];
        let kdp = dot(k, p) * (1.0 - c);
        [0, 1, 2].map(|i| p[i] * c + kxp[i] * s + k[i] * kdp)
    })
}

/// Restores `n` points by appending uniformly drawn survivors.
fn refill(kept: Vec<Point3>, n: usize, what: &str, rng: &mut Stream) -> Result<Vec<Point3>> {
    if kept.is_empty() {
        return Err(invalid(format!("{what} removed every point")));
    }
    let mut out = kept;
    let m = out.len();
    while out.len() < n {
        let j = rng.random_range(0..m);
        out.push(out[j]);
    }
    Ok(out)
}

pub fn corrupt(cloud: &PointCloud, spec: &CorruptionSpec, seed: u64) -> Result<PointCloud> {
    corrupt_traced(cloud, spec, seed).map(|(c, _)| c)
}

/// Corrupts every cloud of `split`, each with its own stream keyed by the
/// object id. Labels, ids and role are kept.
pub fn corrupt_split(split: &DatasetSplit, spec: &CorruptionSpec, seed: u64) -> Result<DatasetSplit> {
    let clouds = split
        .clouds
        .iter()
        .zip(&split.ids)
        .map(|(c, &id)| corrupt(c, spec, rng::derive_seed(seed, "corrupt-object", id)))
        .collect::<Result<Vec<_>>>()?;
    DatasetSplit::new(clouds, split.ids.clone(), split.class_names.clone(), split.role)
}

/// [`corrupt`] plus the random draws it made.
pub fn corrupt_traced(cloud: &PointCloud, spec: &CorruptionSpec, seed: u64) -> Result<(PointCloud, CorruptionTrace)> {
    if let Some(b) = spec.background {
        if !(0.0..=1.0).contains(&b) {
            return Err(invalid(format!("background fraction {b} outside [0, 1]")));
        }
    }
    if spec.hole.is_some_and(|r| !(r >= 0.0)) {
        return Err(invalid("hole radius must be non-negative"));
    }
    if spec.occlusion.is_some_and(|t| !t.is_finite()) {
        return Err(invalid("occlusion threshold must be finite"));
    }
    let n = cloud.len();
    let mut trace = CorruptionTrace::default();
    let mut out = cloud.clone();

    if let Some(axis) = spec.rotate {
        let mut rng = rng::stream(seed, "corrupt-rotate", 0, 0);
        let k = match axis {
            RotationAxis::Random => unit_vector(&mut rng),
            RotationAxis::Y => [0.0, 1.0, 0.0],
        };
        let theta = 2.0 * PI * rng.random::<f64>();
        out = rotate_about_axis(&out, k, theta);
        trace.rotation = Some((k, theta));
    }
    if let Some(rho) = spec.hole {
        let mut rng = rng::stream(seed, "corrupt-hole", 0, 0);
        let center = out.points[rng.random_range(0..n)];
        let kept = out.points.iter().copied().filter(|&p| norm(sub(p, center)) > rho).collect();
        out.points = refill(kept, n, "hole", &mut rng)?;
        trace.hole_center = Some(center);
    }
    if let Some(tau) = spec.occlusion {
        let mut rng = rng::stream(seed, "corrupt-occlusion", 0, 0);
        let d = unit_vector(&mut rng);
        let kept = out.points.iter().copied().filter(|&p| dot(p, d) <= tau).collect();
        out.points = refill(kept, n, "occlusion", &mut rng)?;
        trace.occlusion_dir = Some(d);
    }
    if let Some(beta) = spec.background {
        let mut rng = rng::stream(seed, "corrupt-background", 0, 0);
        let m = (beta * n as f64).round() as usize;
        let mut idx = rng::permutation(n, &mut rng);
        idx.truncate(m);
        for &i in &idx {
            out.points[i] = [0; 3].map(|_| rng.random_range(-1.0..=1.0));
        }
        idx.sort_unstable();
        trace.background_idx = idx;
    }
    Ok((out, trace))
}

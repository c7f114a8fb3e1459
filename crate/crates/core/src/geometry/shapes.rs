use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DatasetSplit, Point3, PointCloud, SplitRole};
use crate::error::{invalid, Error, Result};
use crate::rng::{self, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Sphere,
    Box,
    Cylinder,
    Cone,
    Torus,
    Plane,
    Capsule,
    Ellipsoid,
}

impl ShapeKind {
    /// All kinds; position is the class index.
    pub const ALL: [ShapeKind; 8] = [
        ShapeKind::Sphere,
        ShapeKind::Box,
        ShapeKind::Cylinder,
        ShapeKind::Cone,
        ShapeKind::Torus,
        ShapeKind::Plane,
        ShapeKind::Capsule,
        ShapeKind::Ellipsoid,
    ];

    pub fn class_index(self) -> usize {
        Self::ALL.iter().position(|&k| k == self).unwrap_or(0)
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Sphere => "sphere",
            ShapeKind::Box => "box",
            ShapeKind::Cylinder => "cylinder",
            ShapeKind::Cone => "cone",
            ShapeKind::Torus => "torus",
            ShapeKind::Plane => "plane",
            ShapeKind::Capsule => "capsule",
            ShapeKind::Ellipsoid => "ellipsoid",
        }
    }

    /// Base dimensions before per-instance jitter; see [`ShapeParams`].
    pub fn base_params(self) -> ShapeParams {
        let dims = match self {
            ShapeKind::Sphere => [0.5, 0.0, 0.0],
            ShapeKind::Box => [1.0, 0.7, 0.5],
            ShapeKind::Cylinder => [0.3, 1.2, 0.0],
            ShapeKind::Cone => [0.5, 1.0, 0.0],
            ShapeKind::Torus => [0.5, 0.15, 0.0],
            ShapeKind::Plane => [1.0, 0.6, 0.0],
            ShapeKind::Capsule => [0.25, 0.8, 0.0],
            ShapeKind::Ellipsoid => [0.6, 0.4, 0.25],
        };
        ShapeParams { dims }
    }

    fn n_dims(self) -> usize {
        match self {
            ShapeKind::Sphere => 1,
            ShapeKind::Box | ShapeKind::Ellipsoid => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown shape kind {s:?}")))
    }
}

/// Shape dimensions. Only the leading dimensions used by the kind matter:
///
/// | kind | dims |
/// |---|---|
/// | sphere | radius |
/// | box | full extents along x, y, z |
/// | cylinder | radius, length (axis x) |
/// | cone | base radius, height (axis z, apex at +z) |
/// | torus | ring radius R, tube radius r < R (ring in the xy plane) |
/// | plane | extent x, extent y (z = 0) |
/// | capsule | radius, straight length (axis x) |
/// | ellipsoid | semi-axes a, b, c |
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    pub dims: [f64; 3],
}

fn uniform(rng: &mut Stream) -> f64 {
    rng.random::<f64>()
}

fn unit_vector(rng: &mut Stream) -> Point3 {
    loop {
        let v: Point3 = [StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng)];
        let n = super::norm(v);
        if n > 1e-12 {
            return v.map(|c| c / n);
        }
    }
}

/// Uniform point on a disk of radius `r`, as (a, b) offsets.
fn disk(rng: &mut Stream, r: f64) -> (f64, f64) {
    let rho = r * uniform(rng).sqrt();
    let phi = 2.0 * PI * uniform(rng);
    (rho * phi.cos(), rho * phi.sin())
}

fn box_point(rng: &mut Stream, e: [f64; 3]) -> Point3 {
    let areas = [e[1] * e[2], e[0] * e[2], e[0] * e[1]];
    let total: f64 = areas.iter().sum();
    let mut pick = uniform(rng) * total;
    let mut axis = 2;
    for (k, a) in areas.iter().enumerate() {
        if pick < *a {
            axis = k;
            break;
        }
        pick -= a;
    }
    let mut p = [0.0; 3];
    for (k, c) in p.iter_mut().enumerate() {
        *c = (uniform(rng) - 0.5) * e[k];
    }
    p[axis] = if uniform(rng) < 0.5 { -0.5 } else { 0.5 } * e[axis];
    p
}

fn cylinder_point(rng: &mut Stream, r: f64, len: f64) -> Point3 {
    let lateral = 2.0 * PI * r * len;
    let caps = 2.0 * PI * r * r;
    if uniform(rng) * (lateral + caps) < lateral {
        let phi = 2.0 * PI * uniform(rng);
        [(uniform(rng) - 0.5) * len, r * phi.cos(), r * phi.sin()]
    } else {
        let (a, b) = disk(rng, r);
        let x = if uniform(rng) < 0.5 { -0.5 } else { 0.5 } * len;
        [x, a, b]
    }
}

fn cone_point(rng: &mut Stream, r: f64, h: f64) -> Point3 {
    let slant = (r * r + h * h).sqrt();
    let lateral = PI * r * slant;
    let base = PI * r * r;
    if uniform(rng) * (lateral + base) < lateral {
        // Lateral area up to fraction t from the apex grows as t².
        let t = uniform(rng).sqrt();
        let phi = 2.0 * PI * uniform(rng);
        [t * r * phi.cos(), t * r * phi.sin(), h / 2.0 - t * h]
    } else {
        let (a, b) = disk(rng, r);
        [a, b, -h / 2.0]
    }
}

fn torus_point(rng: &mut Stream, big: f64, small: f64) -> Point3 {
    loop {
        let theta = 2.0 * PI * uniform(rng);
        let phi = 2.0 * PI * uniform(rng);
        // Area element ∝ R + r cos φ.
        if uniform(rng) * (big + small) <= big + small * phi.cos() {
            let ring = big + small * phi.cos();
            return [ring * theta.cos(), ring * theta.sin(), small * phi.sin()];
        }
    }
}

fn capsule_point(rng: &mut Stream, r: f64, len: f64) -> Point3 {
    let lateral = 2.0 * PI * r * len;
    let sphere = 4.0 * PI * r * r;
    if uniform(rng) * (lateral + sphere) < lateral {
        let phi = 2.0 * PI * uniform(rng);
        [(uniform(rng) - 0.5) * len, r * phi.cos(), r * phi.sin()]
    } else {
        let d = unit_vector(rng);
        let shift = if d[0] >= 0.0 { len / 2.0 } else { -len / 2.0 };
        [r * d[0] + shift, r * d[1], r * d[2]]
    }
}

fn ellipsoid_point(rng: &mut Stream, a: f64, b: f64, c: f64) -> Point3 {
    let wmax = (b * c).max(a * c).max(a * b);
    loop {
        let u = unit_vector(rng);
        // Surface element of the map u ↦ (a·ux, b·uy, c·uz) relative to the sphere.
        let w = ((b * c * u[0]).powi(2) + (a * c * u[1]).powi(2) + (a * b * u[2]).powi(2)).sqrt();
        if uniform(rng) * wmax <= w {
            return [a * u[0], b * u[1], c * u[2]];
        }
    }
}

/// `n_points` surface samples, uniform by area, labelled with the kind's
/// class index. Deterministic in `(kind, n_points, seed, params)`.
pub fn synth_shape(kind: ShapeKind, n_points: usize, seed: u64, params: &ShapeParams) -> Result<PointCloud> {
    if n_points < 8 {
        return Err(invalid(format!("synth_shape needs at least 8 points, got {n_points}")));
    }
    let d = params.dims;
    if let Some(bad) = d[..kind.n_dims()].iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(invalid(format!("{kind}: dimension {bad} is not positive")));
    }
    if kind == ShapeKind::Torus && d[1] >= d[0] {
        return Err(invalid("torus tube radius must be below the ring radius"));
    }
    let mut rng = rng::stream(seed, "synth", kind.class_index() as u64, 0);
    let rng = &mut rng;
    let points = (0..n_points)
        .map(|_| match kind {
            ShapeKind::Sphere => unit_vector(rng).map(|c| c * d[0]),
            ShapeKind::Box => box_point(rng, d),
            ShapeKind::Cylinder => cylinder_point(rng, d[0], d[1]),
            ShapeKind::Cone => cone_point(rng, d[0], d[1]),
            ShapeKind::Torus => torus_point(rng, d[0], d[1]),
            ShapeKind::Plane => [(uniform(rng) - 0.5) * d[0], (uniform(rng) - 0.5) * d[1], 0.0],
            ShapeKind::Capsule => capsule_point(rng, d[0], d[1]),
            ShapeKind::Ellipsoid => ellipsoid_point(rng, d[0], d[1], d[2]),
        })
        .collect();
    PointCloud::new(points, Some(kind.class_index()))
}

/// Synthetic train/test set over a set of shape kinds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub classes: Vec<ShapeKind>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Points generated per object; training samples a subset.
    pub n_points: usize,
    /// Each used dimension is multiplied by a factor from `U[1 − d, 1 + d]`.
    pub dim_jitter: f64,
    /// Standard deviation of isotropic Gaussian noise added to every point.
    pub point_noise: f64,
    /// Random rotation about y per instance.
    pub random_yaw: bool,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            classes: ShapeKind::ALL.to_vec(),
            train_per_class: 100,
            test_per_class: 25,
            n_points: 512,
            dim_jitter: 0.2,
            point_noise: 0.0,
            random_yaw: false,
            seed: 0,
        }
    }
}

fn make_instance(cfg: &DatasetConfig, class: usize, id: u64) -> Result<PointCloud> {
    let kind = cfg.classes[class];
    let mut rng = rng::stream(cfg.seed, "instance", id, 0);
    let mut params = kind.base_params();
    for v in params.dims.iter_mut() {
        *v *= 1.0 + cfg.dim_jitter * (2.0 * uniform(&mut rng) - 1.0);
    }
    if kind == ShapeKind::Torus {
        params.dims[1] = params.dims[1].min(0.9 * params.dims[0]);
    }
    let mut cloud = synth_shape(kind, cfg.n_points, rng.random(), &params)?;
    if cfg.random_yaw {
        let theta = 2.0 * PI * uniform(&mut rng);
        cloud = super::rotate_about_axis(&cloud, [0.0, 1.0, 0.0], theta);
    }
    if cfg.point_noise > 0.0 {
        for p in cloud.points.iter_mut() {
            for c in p.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *c += cfg.point_noise * z;
            }
        }
    }
    cloud.label = Some(class);
    Ok(cloud.normalize_unit_cube().cloud)
}

/// Train and test splits of normalized clouds. Object ids are unique across
/// both splits (train first, class-major).
pub fn generate_dataset(cfg: &DatasetConfig) -> Result<(DatasetSplit, DatasetSplit)> {
    if cfg.classes.is_empty() {
        return Err(invalid("dataset needs at least one class"));
    }
    if !(0.0..1.0).contains(&cfg.dim_jitter) || !(cfg.point_noise >= 0.0) {
        return Err(invalid("dim_jitter must be in [0, 1) and point_noise non-negative"));
    }
    let names: Vec<String> = cfg.classes.iter().map(|k| k.name().to_string()).collect();
    let mut next_id = 0u64;
    let mut build = |per_class: usize, role| -> Result<DatasetSplit> {
        let mut clouds = Vec::new();
        let mut ids = Vec::new();
        for class in 0..cfg.classes.len() {
            for _ in 0..per_class {
                clouds.push(make_instance(cfg, class, next_id)?);
                ids.push(next_id);
                next_id += 1;
            }
        }
        DatasetSplit::new(clouds, ids, names.clone(), role)
    };
    let train = build(cfg.train_per_class, SplitRole::Train)?;
    let test = build(cfg.test_per_class, SplitRole::Test)?;
    Ok((train, test))
}

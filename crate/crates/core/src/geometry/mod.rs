//! Point clouds, normalization, synthetic shapes, corruptions, point
//! sampling strategies and `.xyz` / dataset-directory I/O.

mod corrupt;
mod io;
mod sampling;
mod shapes;

pub use corrupt::{
    corrupt, corrupt_split, corrupt_traced, rotate_about_axis, CorruptionSpec, CorruptionTrace, RotationAxis, DEFAULT_BACKGROUND,
    DEFAULT_HOLE_RADIUS, DEFAULT_OCCLUSION_TAU,
};
pub(crate) use io::write_atomic;
pub use io::{load_dataset, load_xyz, save_dataset, save_xyz};
pub use sampling::{sample_points, PointStrategy};
pub use shapes::{generate_dataset, synth_shape, DatasetConfig, ShapeKind, ShapeParams};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type Point3 = [f64; 3];

pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

/// An ordered set of 3-D points with an optional class label.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub label: Option<usize>,
}

/// Result of [`PointCloud::normalize_unit_cube`].
#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub cloud: PointCloud,
    /// All points coincide: the cloud was centered but not scaled.
    pub degenerate: bool,
}

impl PointCloud {
    /// Validates that the cloud is non-empty with finite coordinates.
    pub fn new(points: Vec<Point3>, label: Option<usize>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("point cloud has no points"));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(invalid(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self { points, label })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Point3 {
        let n = self.points.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.points {
            for k in 0..3 {
                c[k] += p[k];
            }
        }
        c.map(|v| v / n)
    }

    pub fn map_points(&self, f: impl Fn(Point3) -> Point3) -> Self {
        Self {
            points: self.points.iter().map(|&p| f(p)).collect(),
            label: self.label,
        }
    }

    /// Centers on the centroid and divides by the largest absolute centered
    /// coordinate, so the cloud fits `[-1, 1]³` and touches its boundary.
    pub fn normalize_unit_cube(&self) -> Normalized {
        let c = self.centroid();
        let centered = self.map_points(|p| sub(p, c));
        let scale = centered.points.iter().flat_map(|p| p.iter().map(|v| v.abs())).fold(0.0, f64::max);
        if scale == 0.0 {
            return Normalized {
                cloud: centered,
                degenerate: true,
            };
        }
        Normalized {
            cloud: centered.map_points(|p| p.map(|v| v / scale)),
            degenerate: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRole {
    Train,
    Validation,
    Test,
}

/// Labelled clouds sharing one class-name table.
///
/// `ids` are stable object identifiers (parallel to `clouds`); random
/// streams are keyed by them, so subsets keep their per-object draws.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub clouds: Vec<PointCloud>,
    pub ids: Vec<u64>,
    pub class_names: Vec<String>,
    pub role: SplitRole,
}

impl DatasetSplit {
    pub fn new(clouds: Vec<PointCloud>, ids: Vec<u64>, class_names: Vec<String>, role: SplitRole) -> Result<Self> {
        let split = Self {
            clouds,
            ids,
            class_names,
            role,
        };
        split.validate()?;
        Ok(split)
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_names.is_empty() {
            return Err(invalid("dataset has no classes"));
        }
        let mut names = self.class_names.clone();
        names.sort();
        names.dedup();
        if names.len() != self.class_names.len() {
            return Err(invalid("class names are not unique"));
        }
        if self.ids.len() != self.clouds.len() {
            return Err(invalid("ids and clouds differ in length"));
        }
        let k = self.class_names.len();
        for (i, c) in self.clouds.iter().enumerate() {
            match c.label {
                Some(l) if l < k => {}
                Some(l) => return Err(invalid(format!("cloud {i} has label {l} >= {k} classes"))),
                None => return Err(invalid(format!("cloud {i} is unlabelled"))),
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.clouds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clouds.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.clouds.iter().map(|c| c.label.unwrap_or(0)).collect()
    }

    /// Subset by positions, keeping class names.
    pub fn select(&self, idx: &[usize], role: SplitRole) -> Self {
        Self {
            clouds: idx.iter().map(|&i| self.clouds[i].clone()).collect(),
            ids: idx.iter().map(|&i| self.ids[i]).collect(),
            class_names: self.class_names.clone(),
            role,
        }
    }

    /// Positions grouped by class, in dataset order.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut by = vec![Vec::new(); self.n_classes()];
        for (i, c) in self.clouds.iter().enumerate() {
            by[c.label.unwrap_or(0)].push(i);
        }
        by
    }
}

//! Orthogonal-view depth rendering of point clouds.
//!
//! Each camera sits 1.4 units from the origin on a coordinate axis, looking
//! at the origin with a 90° field of view. A point maps to camera
//! coordinates `(p·right, p·up, (p − position)·forward)`, then to the image
//! plane (divided by depth in perspective mode), then to the 1-based pixel
//! `max(1, ceil((x̃ + 1) / 2 · R))`. Points outside `[-1, 1]²` on the image
//! plane are discarded.
//!
//! Pixel values encode proximity: `v = (2.4 − d) / 2` for the aggregated
//! depth `d`, clamped to `[1/65535, 1]`, and background is exactly 0.
//! Aggregation sorts the depths hitting each pixel before reducing, so
//! images are bit-identical under any point order.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point3, PointCloud};

pub const CAMERA_DISTANCE: f64 = 1.4;
pub const FOV_DEGREES: f64 = 90.0;
pub const Z_NEAR: f64 = 0.4;
pub const Z_FAR: f64 = 2.4;
/// Smallest foreground value; keeps far points distinct from background
/// after 16-bit quantization.
pub const MIN_FOREGROUND: f64 = 1.0 / 65535.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViewId {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
    #[serde(rename = "+z")]
    PosZ,
    #[serde(rename = "-z")]
    NegZ,
}

impl ViewId {
    pub fn name(self) -> &'static str {
        match self {
            ViewId::PosX => "+x",
            ViewId::NegX => "-x",
            ViewId::PosY => "+y",
            ViewId::NegY => "-y",
            ViewId::PosZ => "+z",
            ViewId::NegZ => "-z",
        }
    }

    /// `(forward, up, right)`.
    fn frame(self) -> (Point3, Point3, Point3) {
        match self {
            ViewId::PosX => ([-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]),
            ViewId::NegX => ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]),
            ViewId::PosY => ([0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, 0.0, 0.0]),
            ViewId::NegY => ([0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]),
            ViewId::PosZ => ([0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]),
            ViewId::NegZ => ([0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMode {
    Perspective,
    Orthographic,
}

impl FromStr for ProjectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "persp" | "perspective" => Ok(Self::Perspective),
            "ortho" | "orthographic" => Ok(Self::Orthographic),
            _ => Err(invalid(format!("unknown projection {s:?}"))),
        }
    }
}

impl fmt::Display for ProjectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Perspective => "persp",
            Self::Orthographic => "ortho",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthMode {
    Minimum,
    /// `1/z`-weighted mean depth, i.e. the harmonic mean.
    WeightedAvg,
}

impl FromStr for DepthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" | "minimum" => Ok(Self::Minimum),
            "wavg" | "weighted_avg" => Ok(Self::WeightedAvg),
            _ => Err(invalid(format!("unknown depth mode {s:?}"))),
        }
    }
}

impl fmt::Display for DepthMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Minimum => "min",
            Self::WeightedAvg => "wavg",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViewCamera {
    pub id: ViewId,
    pub position: Point3,
    pub forward: Point3,
    pub up: Point3,
    pub right: Point3,
    pub fov_degrees: f64,
    pub mode: ProjectionMode,
}

impl ViewCamera {
    pub fn new(id: ViewId, mode: ProjectionMode) -> Self {
        let (forward, up, right) = id.frame();
        Self {
            id,
            position: forward.map(|c| -CAMERA_DISTANCE * c),
            forward,
            up,
            right,
            fov_degrees: FOV_DEGREES,
            mode,
        }
    }
}

/// 6 views: ±x, ±y, ±z. 3 views: +x, +y, +z. 1 view: +z.
pub fn make_cameras(n_views: usize, mode: ProjectionMode) -> Result<Vec<ViewCamera>> {
    use ViewId::*;
    let ids: &[ViewId] = match n_views {
        1 => &[PosZ],
        3 => &[PosX, PosY, PosZ],
        6 => &[PosX, NegX, PosY, NegY, PosZ, NegZ],
        _ => return Err(invalid(format!("view count must be 1, 3 or 6, got {n_views}"))),
    };
    Ok(ids.iter().map(|&id| ViewCamera::new(id, mode)).collect())
}

fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Image-plane coordinates and depth `(x̃, ỹ, z)`. Errors when `z <= 0`.
pub fn project_point(p: Point3, cam: &ViewCamera) -> Result<(f64, f64, f64)> {
    let z = dot(
        [p[0] - cam.position[0], p[1] - cam.position[1], p[2] - cam.position[2]],
        cam.forward,
    );
    if !(z > 0.0) {
        return Err(invalid(format!("point {p:?} is behind camera {}", cam.id.name())));
    }
    let (x, y) = (dot(p, cam.right), dot(p, cam.up));
    Ok(match cam.mode {
        ProjectionMode::Perspective => (x / z, y / z, z),
        ProjectionMode::Orthographic => (x, y, z),
    })
}

/// 1-based pixel index of an image-plane coordinate, or `None` outside `[-1, 1]`.
pub fn pixel_index(t: f64, resolution: usize) -> Option<usize> {
    if !(t.abs() <= 1.0) {
        return None;
    }
    let u = (t + 1.0) / 2.0 * resolution as f64;
    Some((u.ceil() as usize).clamp(1, resolution))
}

/// Depth of a pixel from its hitting depths, sorted ascending.
pub fn aggregate_depth(sorted: &[f64], mode: DepthMode) -> f64 {
    match mode {
        DepthMode::Minimum => sorted[0],
        DepthMode::WeightedAvg => {
            let inv: f64 = sorted.iter().map(|z| 1.0 / z).sum();
            sorted.len() as f64 / inv
        }
    }
}

pub fn depth_to_value(d: f64) -> f64 {
    ((Z_FAR - d) / (Z_FAR - Z_NEAR)).clamp(MIN_FOREGROUND, 1.0)
}

/// Row-major `R×R` image; row `r` holds pixel row `r + 1` counted from the
/// bottom (`ỹ = −1`), column `c` holds column `c + 1` from the left.
pub fn rasterize_view(cloud: &PointCloud, cam: &ViewCamera, resolution: usize, depth: DepthMode) -> Result<Vec<f64>> {
    let mut img = vec![0.0; resolution * resolution];
    rasterize_into(cloud, cam, resolution, depth, &mut img, &mut Vec::new())?;
    Ok(img)
}

fn rasterize_into(
    cloud: &PointCloud,
    cam: &ViewCamera,
    r: usize,
    depth: DepthMode,
    img: &mut [f64],
    hits: &mut Vec<(usize, f64)>,
) -> Result<()> {
    if r < 4 {
        return Err(invalid(format!("resolution must be at least 4, got {r}")));
    }
    hits.clear();
    for &p in &cloud.points {
        let Ok((x, y, z)) = project_point(p, cam) else { continue };
        if let (Some(ix), Some(iy)) = (pixel_index(x, r), pixel_index(y, r)) {
            hits.push(((iy - 1) * r + (ix - 1), z));
        }
    }
    hits.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut zs = Vec::new();
    let mut i = 0;
    while i < hits.len() {
        let pix = hits[i].0;
        zs.clear();
        while i < hits.len() && hits[i].0 == pix {
            zs.push(hits[i].1);
            i += 1;
        }
        img[pix] = depth_to_value(aggregate_depth(&zs, depth));
    }
    Ok(())
}

/// Rendering parameters shared by every cloud of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub views: usize,
    pub resolution: usize,
    pub projection: ProjectionMode,
    pub depth: DepthMode,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            views: 6,
            resolution: 32,
            projection: ProjectionMode::Perspective,
            depth: DepthMode::Minimum,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepthImageStack {
    /// `[V, R, R]`, row-major.
    pub data: Vec<f64>,
    pub view_ids: Vec<ViewId>,
    pub resolution: usize,
}

impl DepthImageStack {
    pub fn n_views(&self) -> usize {
        self.view_ids.len()
    }

    pub fn image(&self, view: usize) -> &[f64] {
        let n = self.resolution * self.resolution;
        &self.data[view * n..(view + 1) * n]
    }
}

pub fn render_multiview(cloud: &PointCloud, cfg: &RenderConfig) -> Result<DepthImageStack> {
    let cams = make_cameras(cfg.views, cfg.projection)?;
    let n = cfg.resolution * cfg.resolution;
    let mut data = vec![0.0; cams.len() * n];
    let mut hits = Vec::with_capacity(cloud.len());
    for (k, cam) in cams.iter().enumerate() {
        rasterize_into(cloud, cam, cfg.resolution, cfg.depth, &mut data[k * n..(k + 1) * n], &mut hits)?;
    }
    Ok(DepthImageStack {
        data,
        view_ids: cams.iter().map(|c| c.id).collect(),
        resolution: cfg.resolution,
    })
}

/// Binary 16-bit PGM, top image row first, samples `round(v · 65535)`.
pub fn encode_pgm16(image: &[f64], resolution: usize) -> Vec<u8> {
    let mut out = format!("P5\n{resolution} {resolution}\n65535\n").into_bytes();
    for row in (0..resolution).rev() {
        for &v in &image[row * resolution..(row + 1) * resolution] {
            let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
            out.extend_from_slice(&q.to_be_bytes());
        }
    }
    out
}

/// Writes `<dir>/<id>_view<k>.pgm` for each view; returns the paths.
pub fn save_stack_pgm(stack: &DepthImageStack, dir: &Path, id: &str) -> Result<Vec<std::path::PathBuf>> {
    (0..stack.n_views())
        .map(|k| {
            let path = dir.join(format!("{id}_view{k}.pgm"));
            crate::geometry::write_atomic(&path, &encode_pgm16(stack.image(k), stack.resolution))?;
            Ok(path)
        })
        .collect()
}

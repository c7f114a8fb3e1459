//! Helpers shared by several test targets.

use orthoview::geometry::PointCloud;

/// Straightforward per-pixel reference: for every pixel scan all points.
/// Camera rows are (position, right, up).
pub fn reference(cloud: &PointCloud, views: usize, r: usize, ortho: bool, harmonic: bool) -> Vec<f64> {
    let all = [
        ([1.4, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]),
        ([-1.4, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]),
        ([0.0, 1.4, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
        ([0.0, -1.4, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
        ([0.0, 0.0, 1.4], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
        ([0.0, 0.0, -1.4], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
    ];
    let pick: Vec<usize> = match views {
        1 => vec![4],
        3 => vec![0, 2, 4],
        _ => (0..6).collect(),
    };
    let d = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let mut out = Vec::new();
    for v in pick {
        let (pos, right, up) = all[v];
        let fwd = pos.map(|c| -c / 1.4);
        for row in 1..=r {
            for col in 1..=r {
                let mut zs = Vec::new();
                for p in &cloud.points {
                    let z = d([p[0] - pos[0], p[1] - pos[1], p[2] - pos[2]], fwd);
                    if z <= 0.0 {
                        continue;
                    }
                    let (mut x, mut y) = (d(*p, right), d(*p, up));
                    if !ortho {
                        x /= z;
                        y /= z;
                    }
                    if x.abs() > 1.0 || y.abs() > 1.0 {
                        continue;
                    }
                    let px = (((x + 1.0) / 2.0 * r as f64).ceil() as usize).max(1);
                    let py = (((y + 1.0) / 2.0 * r as f64).ceil() as usize).max(1);
                    if px == col && py == row {
                        zs.push(z);
                    }
                }
                out.push(if zs.is_empty() {
                    0.0
                } else {
                    zs.sort_by(f64::total_cmp);
                    let depth = if harmonic {
                        zs.len() as f64 / zs.iter().map(|z| 1.0 / z).sum::<f64>()
                    } else {
                        zs[0]
                    };
                    ((2.4 - depth) / 2.0).clamp(1.0 / 65535.0, 1.0)
                });
            }
        }
    }
    out
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PointCloud;
use crate::error::{invalid, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStrategy {
    /// The same subset every epoch.
    Fixed,
    /// A fresh subset per epoch.
    Resampled,
}

/// Draws `n` points of `cloud` (object `id`).
///
/// `Fixed` takes the first `n` entries of a permutation that depends only on
/// `(seed, id)`. `Resampled` draws per `(seed, id, epoch)`, without
/// replacement when the cloud has at least `n` points and with replacement
/// otherwise.
pub fn sample_points(cloud: &PointCloud, n: usize, strategy: PointStrategy, epoch: u64, seed: u64, id: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(invalid("cannot sample zero points"));
    }
    let len = cloud.len();
    let idx: Vec<usize> = match strategy {
        PointStrategy::Fixed => {
            if len < n {
                return Err(invalid(format!("fixed sampling of {n} points from a cloud of {len}")));
            }
            let mut perm = rng::permutation(len, &mut rng::stream(seed, "sample-fixed", id, 0));
            perm.truncate(n);
            perm
        }
        PointStrategy::Resampled => {
            let mut r = rng::stream(seed, "sample-resampled", id, epoch);
            if len >= n {
                let mut perm = rng::permutation(len, &mut r);
                perm.truncate(n);
                perm
            } else {
                (0..n).map(|_| r.random_range(0..len)).collect()
            }
        }
    };
    Ok(PointCloud {
        points: idx.iter().map(|&i| cloud.points[i]).collect(),
        label: cloud.label,
    })
}

use std::f64::consts::PI;

use orthoview_nn::loss::softmax;
use serde::{Deserialize, Serialize};

use crate::augment::{random_scale_with, rotate_y};
use crate::error::{invalid, Result};
use crate::geometry::{sample_points, DatasetSplit, PointCloud, PointStrategy};
use crate::models::{argmax, Classifier};
use crate::rng;

/// Evaluation inputs: a fixed `n_points` subset per object (sampled with
/// replacement when an object has fewer points).
pub fn eval_clouds(split: &DatasetSplit, n_points: usize, seed: u64) -> Result<Vec<PointCloud>> {
    split
        .clouds
        .iter()
        .zip(&split.ids)
        .map(|(c, &id)| {
            let strategy = if c.len() >= n_points {
                PointStrategy::Fixed
            } else {
                PointStrategy::Resampled
            };
            sample_points(c, n_points, strategy, 0, seed, id)
        })
        .collect()
}

pub fn predict<C: Classifier + ?Sized>(model: &C, clouds: &[PointCloud]) -> Result<Vec<usize>> {
    Ok(model.logits(clouds)?.iter().map(|l| argmax(l)).collect())
}

fn shuffled(cloud: &PointCloud, seed: u64, object: u64, version: u64) -> PointCloud {
    let perm = rng::permutation(cloud.len(), &mut rng::stream(seed, "vote-shuffle", object, version));
    PointCloud {
        points: perm.iter().map(|&i| cloud.points[i]).collect(),
        label: cloud.label,
    }
}

/// Mean softmax over rotations about y by `2πk/n`, `k = 0..n`, each copy
/// optionally point-shuffled.
pub fn rotation_vote_probs<C: Classifier + ?Sized>(
    model: &C,
    clouds: &[PointCloud],
    n_rotations: usize,
    shuffle: bool,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n_rotations == 0 {
        return Err(invalid("rotation vote needs at least one rotation"));
    }
    let mut sums: Vec<Vec<f64>> = Vec::new();
    for k in 0..n_rotations {
        let angle = 2.0 * PI * k as f64 / n_rotations as f64;
        let copies: Vec<PointCloud> = clouds
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let r = rotate_y(c, angle);
                if shuffle {
                    shuffled(&r, seed, i as u64, k as u64)
                } else {
                    r
                }
            })
            .collect();
        let probs: Vec<Vec<f64>> = model.logits(&copies)?.iter().map(|l| softmax(l)).collect();
        if sums.is_empty() {
            sums = probs;
        } else {
            for (s, p) in sums.iter_mut().zip(&probs) {
                s.iter_mut().zip(p).for_each(|(a, b)| *a += b);
            }
        }
    }
    let n = n_rotations as f64;
    Ok(sums.into_iter().map(|s| s.into_iter().map(|v| v / n).collect()).collect())
}

/// Predicted class of one cloud under [`rotation_vote_probs`].
pub fn rotation_vote<C: Classifier + ?Sized>(model: &C, cloud: &PointCloud, n_rotations: usize, shuffle: bool, seed: u64) -> Result<usize> {
    let probs = rotation_vote_probs(model, std::slice::from_ref(cloud), n_rotations, shuffle, seed)?;
    Ok(argmax(&probs[0]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsVoteResult {
    /// Accuracy of every trial, in order.
    pub trials: Vec<f64>,
    /// Maximum over `trials`.
    pub best: f64,
    /// Earliest trial attaining `best`.
    pub best_trial: usize,
    /// Predictions of that trial.
    pub best_predictions: Vec<usize>,
}

impl RsVoteResult {
    pub fn mean(&self) -> f64 {
        self.trials.iter().sum::<f64>() / self.trials.len() as f64
    }

    /// Best accuracy among the first `k` trials, for `k = 1..=n`.
    pub fn prefix_best(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.trials
            .iter()
            .map(|&t| {
                best = best.max(t);
                best
            })
            .collect()
    }
}

/// Each trial predicts every test object from the mean softmax over
/// `n_versions` copies, each resampled to `n_points` points and scaled by
/// a factor from `U[scale.0, scale.1]`.
pub fn repeated_scaling_vote<C: Classifier + ?Sized>(
    model: &C,
    split: &DatasetSplit,
    n_trials: usize,
    n_versions: usize,
    n_points: usize,
    scale: (f64, f64),
    seed: u64,
) -> Result<RsVoteResult> {
    if n_trials == 0 || n_versions == 0 {
        return Err(invalid("repeated scaling vote needs n_trials, n_versions >= 1"));
    }
    if split.is_empty() {
        return Err(invalid("empty test split"));
    }
    let labels = split.labels();
    let mut trials = Vec::with_capacity(n_trials);
    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    for t in 0..n_trials {
        let mut sums: Vec<Vec<f64>> = Vec::new();
        for v in 0..n_versions {
            let key = (t * n_versions + v) as u64;
            let copies = split
                .clouds
                .iter()
                .zip(&split.ids)
                .map(|(c, &id)| {
                    let s = sample_points(c, n_points, PointStrategy::Resampled, key, seed, id)?;
                    let mut r = rng::stream(seed, "rs-vote-scale", id, key);
                    Ok(random_scale_with(&s, scale.0, scale.1, &mut r))
                })
                .collect::<Result<Vec<_>>>()?;
            let probs: Vec<Vec<f64>> = model.logits(&copies)?.iter().map(|l| softmax(l)).collect();
            if sums.is_empty() {
                sums = probs;
            } else {
                for (s, p) in sums.iter_mut().zip(&probs) {
                    s.iter_mut().zip(p).for_each(|(a, b)| *a += b);
                }
            }
        }
        let pred: Vec<usize> = sums.iter().map(|s| argmax(s)).collect();
        let acc = pred.iter().zip(&labels).filter(|(p, l)| p == l).count() as f64 / labels.len() as f64;
        if best.as_ref().map_or(true, |(_, b, _)| acc > *b) {
            best = Some((t, acc, pred));
        }
        trials.push(acc);
    }
    let (best_trial, best, best_predictions) = best.unwrap_or_default();
    Ok(RsVoteResult {
        trials,
        best,
        best_trial,
        best_predictions,
    })
}

//! Training and evaluation protocols: augmentation set, point sampling,
//! loss, model selection and test-time ensembles, plus the training loop,
//! metrics and multi-seed reports built from them.

mod metrics;
mod run;
mod split;
mod train;
mod vote;

pub use metrics::Metrics;
pub use run::{evaluate, mean_std, run_protocol, run_single, EvalResult, ProtocolReport, RunResult, RunRow, Summary, REPORT_HEADER};
pub use split::{split_validation, stratified_fraction};
pub use train::{select_epoch, train, training_view, EpochRecord, TrainLog, TrainOptions, TrainOutcome};
pub use vote::{eval_clouds, predict, repeated_scaling_vote, rotation_vote, rotation_vote_probs, RsVoteResult};

use std::fmt;
use std::str::FromStr;

use orthoview_nn::optim::{AdamConfig, PlateauConfig};
use serde::{Deserialize, Serialize};

pub use crate::augment::ProtocolId;
use crate::augment::{preset as augment_preset, AugmentSpec};
use crate::error::{invalid, Error, Result};
use crate::geometry::PointStrategy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    /// Cross-entropy against label-smoothed targets.
    Smooth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Epoch count tuned on a validation split, then retrained on all
    /// training data for that many epochs.
    Final,
    /// The epoch with the highest test accuracy.
    BestTest,
    /// The model after the configured number of epochs, no selection.
    Last,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    None,
    RotationVote { n_rotations: usize, shuffle: bool },
    RepeatedScalingVote { n_trials: usize, n_versions: usize },
}

impl Ensemble {
    pub const DEFAULT_ROTATIONS: usize = 12;
    pub const DEFAULT_TRIALS: usize = 300;
    pub const DEFAULT_VERSIONS: usize = 10;

    pub fn rotation_vote() -> Self {
        Self::RotationVote {
            n_rotations: Self::DEFAULT_ROTATIONS,
            shuffle: true,
        }
    }

    pub fn repeated_scaling_vote() -> Self {
        Self::RepeatedScalingVote {
            n_trials: Self::DEFAULT_TRIALS,
            n_versions: Self::DEFAULT_VERSIONS,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::RotationVote { .. } => "rotvote",
            Self::RepeatedScalingVote { .. } => "rsvote",
        }
    }
}

impl FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "rotvote" => Ok(Self::rotation_vote()),
            "rsvote" => Ok(Self::repeated_scaling_vote()),
            _ => Err(invalid(format!("unknown ensemble {s:?}"))),
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    /// Preset this spec was derived from, or a free-form label.
    pub name: String,
    pub augment: AugmentSpec,
    pub point_strategy: PointStrategy,
    /// Points fed to the model per object.
    pub n_points: usize,
    pub loss: LossKind,
    /// Label-smoothing ε, used when `loss` is `smooth`.
    pub smoothing: f64,
    pub selection: Selection,
    pub ensemble: Ensemble,
    pub epochs: usize,
    pub batch_size: usize,
    pub train_fraction: f64,
    /// Validation share for `final` selection.
    pub val_fraction: f64,
    pub adam: AdamConfig,
    pub plateau: PlateauConfig,
}

/// Desk-scale defaults shared by all presets.
fn base(name: &str) -> ProtocolSpec {
    ProtocolSpec {
        name: name.to_owned(),
        augment: AugmentSpec::default(),
        point_strategy: PointStrategy::Fixed,
        n_points: 256,
        loss: LossKind::CrossEntropy,
        smoothing: 0.2,
        selection: Selection::Final,
        ensemble: Ensemble::None,
        epochs: 100,
        batch_size: 18,
        train_fraction: 1.0,
        val_fraction: 0.1,
        adam: AdamConfig::default(),
        plateau: PlateauConfig::default(),
    }
}

/// The protocol of a named method.
///
/// | id | augmentation | points | loss | selection | ensemble |
/// |---|---|---|---|---|---|
/// | pointnet2 | jitter, rotate, scale, translate | fixed | CE | final | rotation vote |
/// | dgcnn | scale, translate | fixed | smooth | best test | none |
/// | rscnn | scale, translate | resampled | CE | best test | repeated scaling vote |
/// | simpleview | scale, translate | fixed | smooth | final | none |
pub fn preset(id: ProtocolId) -> ProtocolSpec {
    let mut p = base(id.name());
    p.augment = augment_preset(id);
    match id {
        ProtocolId::Pointnet2 => {
            p.ensemble = Ensemble::rotation_vote();
        }
        ProtocolId::Dgcnn => {
            p.loss = LossKind::Smooth;
            p.selection = Selection::BestTest;
        }
        ProtocolId::Rscnn => {
            p.point_strategy = PointStrategy::Resampled;
            p.selection = Selection::BestTest;
            p.ensemble = Ensemble::repeated_scaling_vote();
        }
        ProtocolId::Simpleview => {
            p.loss = LossKind::Smooth;
        }
    }
    p
}

impl ProtocolSpec {
    pub fn validate(&self) -> Result<()> {
        self.augment.validate()?;
        if self.n_points == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(invalid("n_points, epochs and batch_size must be positive"));
        }
        if !(self.smoothing >= 0.0 && self.smoothing < 1.0) {
            return Err(invalid("smoothing must lie in [0, 1)"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(invalid("train_fraction must lie in (0, 1]"));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(invalid("val_fraction must lie in (0, 1)"));
        }
        match self.ensemble {
            Ensemble::RotationVote { n_rotations: 0, .. } => Err(invalid("rotation vote needs n_rotations >= 1")),
            Ensemble::RepeatedScalingVote { n_trials, n_versions } if n_trials == 0 || n_versions == 0 => {
                Err(invalid("repeated scaling vote needs n_trials, n_versions >= 1"))
            }
            _ => Ok(()),
        }
    }

    /// ε used in the loss.
    pub fn label_smoothing(&self) -> f64 {
        match self.loss {
            LossKind::CrossEntropy => 0.0,
            LossKind::Smooth => self.smoothing,
        }
    }
}

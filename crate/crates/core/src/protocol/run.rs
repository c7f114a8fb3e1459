use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::split::{split_validation, stratified_fraction};
use super::train::{select_epoch, train, TrainLog, TrainOptions};
use super::vote::{eval_clouds, predict, repeated_scaling_vote, rotation_vote_probs, RsVoteResult};
use super::{Ensemble, Metrics, ProtocolSpec, Selection};
use crate::error::{invalid, Result};
use crate::geometry::DatasetSplit;
use crate::models::{argmax, Model, ModelConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub metrics: Metrics,
    /// Per-trial accuracies for the repeated scaling vote; `metrics` then
    /// describe its best trial.
    pub rs_vote: Option<RsVoteResult>,
}

/// Metrics of `model` on `split` under `spec.ensemble`.
pub fn evaluate(model: &Model, split: &DatasetSplit, spec: &ProtocolSpec, seed: u64) -> Result<EvalResult> {
    if split.is_empty() {
        return Err(invalid("cannot evaluate on an empty split"));
    }
    let labels = split.labels();
    let k = split.n_classes();
    let (pred, rs_vote) = match spec.ensemble {
        Ensemble::None => (predict(model, &eval_clouds(split, spec.n_points, seed)?)?, None),
        Ensemble::RotationVote { n_rotations, shuffle } => {
            let clouds = eval_clouds(split, spec.n_points, seed)?;
            let probs = rotation_vote_probs(model, &clouds, n_rotations, shuffle, seed)?;
            (probs.iter().map(|p| argmax(p)).collect(), None)
        }
        Ensemble::RepeatedScalingVote { n_trials, n_versions } => {
            let scale = (spec.augment.scale.lo, spec.augment.scale.hi);
            let r = repeated_scaling_vote(model, split, n_trials, n_versions, spec.n_points, scale, seed)?;
            (r.best_predictions.clone(), Some(r))
        }
    };
    Ok(EvalResult {
        metrics: Metrics::from_predictions(&pred, &labels, k)?,
        rs_vote,
    })
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub seed: u64,
    /// Epoch count of the selected model.
    pub selected_epoch: usize,
    /// Selected model under the protocol's ensemble.
    pub eval: EvalResult,
    /// Log of the run that produced the selected model.
    pub log: TrainLog,
    /// Validation-tuning log of `final` selection.
    pub tuning_log: Option<TrainLog>,
    pub model: Model,
}

impl RunResult {
    /// Plain test accuracy after the last epoch, when the run tracked it.
    pub fn last_epoch_test_acc(&self) -> Option<f64> {
        self.log.epochs.last().and_then(|e| e.test_acc)
    }

    /// Highest plain test accuracy over epochs, when the run tracked it.
    pub fn best_test_acc(&self) -> Option<f64> {
        let curve = self.log.test_curve()?;
        Some(curve[argmax(&curve)])
    }
}

/// Trains and evaluates one seed under `spec`. With `track_test`, test
/// accuracy is also logged every epoch of the final training run; it never
/// feeds back into training.
pub fn run_single(
    config: &ModelConfig,
    spec: &ProtocolSpec,
    train_split: &DatasetSplit,
    test: &DatasetSplit,
    seed: u64,
    track_test: bool,
) -> Result<RunResult> {
    spec.validate()?;
    let data = if spec.train_fraction < 1.0 {
        stratified_fraction(train_split, spec.train_fraction, seed)?
    } else {
        train_split.clone()
    };
    let observe = TrainOptions {
        test: track_test.then_some(test),
        ..Default::default()
    };
    let (log, tuning_log, model, selected_epoch) = match spec.selection {
        Selection::Final => {
            let (tr, val) = split_validation(&data, spec.val_fraction, seed)?;
            let tune = train(
                config,
                spec,
                &tr,
                &TrainOptions {
                    val: Some(&val),
                    ..Default::default()
                },
                seed,
            )?;
            let epochs = select_epoch(&tune.log, Selection::Final)?;
            let retrain = ProtocolSpec { epochs, ..spec.clone() };
            let out = train(config, &retrain, &data, &observe, seed)?;
            (out.log, Some(tune.log), out.model, epochs)
        }
        Selection::BestTest => {
            let opts = TrainOptions {
                test: Some(test),
                keep_best_test: true,
                ..Default::default()
            };
            let out = train(config, spec, &data, &opts, seed)?;
            let (epoch, model) = out.best_test.ok_or_else(|| invalid("no best-test snapshot"))?;
            (out.log, None, model, epoch)
        }
        Selection::Last => {
            let out = train(config, spec, &data, &observe, seed)?;
            (out.log, None, out.model, spec.epochs)
        }
    };
    let eval = evaluate(&model, test, spec, seed)?;
    Ok(RunResult {
        seed,
        selected_epoch,
        eval,
        log,
        tuning_log,
        model,
    })
}

/// Mean and sample standard deviation (0 for a single value). Computed
/// relative to the first value, so identical values give exactly that value
/// and exactly 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let v0 = values[0];
    let shift = values.iter().map(|v| v - v0).sum::<f64>() / n as f64;
    if n == 1 {
        return (v0, 0.0);
    }
    let var = values.iter().map(|v| (v - v0 - shift).powi(2)).sum::<f64>() / (n - 1) as f64;
    (v0 + shift, var.sqrt())
}

pub const REPORT_HEADER: &str = "arch,protocol,seed,overall_acc,class_acc,selected_epoch,ensemble,fraction";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub arch: String,
    pub protocol: String,
    pub seed: u64,
    pub overall_acc: f64,
    pub class_acc: f64,
    pub selected_epoch: usize,
    pub ensemble: String,
    pub fraction: f64,
}

impl RunRow {
    /// CSV line; floats use the shortest exact representation.
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.arch, self.protocol, self.seed, self.overall_acc, self.class_acc, self.selected_epoch, self.ensemble, self.fraction
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean_overall: f64,
    pub std_overall: f64,
    pub mean_class: f64,
    pub std_class: f64,
}

#[derive(Clone, Debug)]
pub struct ProtocolReport {
    pub rows: Vec<RunRow>,
    pub summary: Summary,
    pub runs: Vec<RunResult>,
}

/// Maps `f` over `0..n` on up to `jobs` threads; results keep index order.
pub(crate) fn parallel_map<T: Send>(n: usize, jobs: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let jobs = jobs.clamp(1, n.max(1));
    if jobs == 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T>>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let r = f(i);
                if let Ok(mut s) = slots.lock() {
                    s[i] = Some(r);
                }
            });
        }
    });
    let slots = slots.into_inner().map_err(|_| invalid("worker panicked"))?;
    slots
        .into_iter()
        .map(|s| s.unwrap_or_else(|| Err(invalid("worker panicked"))))
        .collect()
}

/// One [`run_single`] per seed, summarized by mean ± sample std.
pub fn run_protocol(
    config: &ModelConfig,
    spec: &ProtocolSpec,
    train_split: &DatasetSplit,
    test: &DatasetSplit,
    seeds: &[u64],
    jobs: usize,
) -> Result<ProtocolReport> {
    if seeds.is_empty() {
        return Err(invalid("at least one seed is required"));
    }
    let runs = parallel_map(seeds.len(), jobs, |i| run_single(config, spec, train_split, test, seeds[i], false))?;
    let rows: Vec<RunRow> = runs
        .iter()
        .map(|r| RunRow {
            arch: config.arch.to_string(),
            protocol: spec.name.clone(),
            seed: r.seed,
            overall_acc: r.eval.metrics.overall_acc,
            class_acc: r.eval.metrics.class_acc,
            selected_epoch: r.selected_epoch,
            ensemble: spec.ensemble.name().to_owned(),
            fraction: spec.train_fraction,
        })
        .collect();
    let (mean_overall, std_overall) = mean_std(&rows.iter().map(|r| r.overall_acc).collect::<Vec<_>>());
    let (mean_class, std_class) = mean_std(&rows.iter().map(|r| r.class_acc).collect::<Vec<_>>());
    Ok(ProtocolReport {
        rows,
        summary: Summary {
            mean_overall,
            std_overall,
            mean_class,
            std_class,
        },
        runs,
    })
}

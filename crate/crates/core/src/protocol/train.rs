use orthoview_nn::loss::softmax_cross_entropy;
use orthoview_nn::optim::{Adam, PlateauMode, PlateauScheduler};
use orthoview_nn::Session;
use serde::{Deserialize, Serialize};

use super::vote::{eval_clouds, predict};
use super::{ProtocolSpec, Selection};
use crate::augment;
use crate::error::{invalid, Error, Result};
use crate::geometry::{sample_points, DatasetSplit, PointCloud};
use crate::models::{argmax, Model, ModelConfig};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    /// Accuracy of the train-mode forward passes during the epoch.
    pub train_acc: f64,
    pub val_acc: Option<f64>,
    pub test_acc: Option<f64>,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn test_curve(&self) -> Option<Vec<f64>> {
        self.epochs.iter().map(|e| e.test_acc).collect()
    }

    pub fn val_curve(&self) -> Option<Vec<f64>> {
        self.epochs.iter().map(|e| e.val_acc).collect()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TrainOptions<'a> {
    /// Evaluated every epoch; drives the learning-rate schedule when present.
    pub val: Option<&'a DatasetSplit>,
    /// Evaluated every epoch.
    pub test: Option<&'a DatasetSplit>,
    /// Keep a copy of the model at the earliest epoch of maximal test accuracy.
    pub keep_best_test: bool,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub log: TrainLog,
    /// The model after the last epoch.
    pub model: Model,
    pub optimizer: Adam,
    /// `(epoch, model)` at the best test accuracy.
    pub best_test: Option<(usize, Model)>,
}

fn first_argmax(curve: &[f64]) -> usize {
    argmax(curve)
}

/// 1-based epoch chosen by `mode`: maximal validation accuracy for `final`,
/// maximal test accuracy for `best_test`, the last epoch for `last`.
/// Ties go to the earliest epoch.
pub fn select_epoch(log: &TrainLog, mode: Selection) -> Result<usize> {
    if log.epochs.is_empty() {
        return Err(invalid("empty training log"));
    }
    let curve = match mode {
        Selection::Last => return Ok(log.epochs.len()),
        Selection::Final => log.val_curve().ok_or_else(|| invalid("final selection needs a validation curve"))?,
        Selection::BestTest => log.test_curve().ok_or_else(|| invalid("best-test selection needs a test curve"))?,
    };
    Ok(first_argmax(&curve) + 1)
}

/// Batches of `order`; a trailing batch of one joins the previous batch so
/// batch norm always sees at least two samples.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if out.len() >= 2 && out[out.len() - 1].len() == 1 {
        let n = order.len();
        out.pop();
        let last = out.len() - 1;
        let start = last * size;
        out[last] = &order[start..n];
    }
    out
}

/// The cloud a training step sees for object `id` at `epoch`: points
/// sampled per the protocol, then augmented.
pub fn training_view(spec: &ProtocolSpec, cloud: &PointCloud, id: u64, epoch: u64, seed: u64) -> Result<PointCloud> {
    let c = sample_points(cloud, spec.n_points, spec.point_strategy, epoch, seed, id)?;
    augment::apply(&c, &spec.augment, seed, id, epoch)
}

fn accuracy(pred: &[usize], labels: &[usize]) -> f64 {
    pred.iter().zip(labels).filter(|(p, l)| p == l).count() as f64 / labels.len().max(1) as f64
}

/// Trains a freshly initialized model on `data` for `spec.epochs` epochs.
/// Every random draw is keyed by `seed`, so equal arguments give
/// bit-identical logs and parameters.
pub fn train(config: &ModelConfig, spec: &ProtocolSpec, data: &DatasetSplit, opts: &TrainOptions<'_>, seed: u64) -> Result<TrainOutcome> {
    spec.validate()?;
    if data.is_empty() {
        return Err(invalid("training split is empty"));
    }
    if config.n_classes != data.n_classes() {
        return Err(invalid(format!(
            "model has {} classes, data has {}",
            config.n_classes,
            data.n_classes()
        )));
    }
    let mut model = Model::new(config, rng::derive_seed(seed, "model-init", 0))?;
    let mut adam = Adam::new(spec.adam.clone(), &model.store);
    let monitor = if opts.val.is_some() { PlateauMode::Max } else { PlateauMode::Min };
    let mut sched = PlateauScheduler::new(spec.plateau.clone(), monitor, spec.adam.lr);
    let eps = spec.label_smoothing();

    let prepare = |split: Option<&DatasetSplit>| -> Result<Option<(Vec<PointCloud>, Vec<usize>)>> {
        split.map(|s| Ok((eval_clouds(s, spec.n_points, seed)?, s.labels()))).transpose()
    };
    let val = prepare(opts.val)?;
    let test = prepare(opts.test)?;

    let mut log = TrainLog::default();
    let mut best_test: Option<(usize, f64, Model)> = None;
    for epoch in 0..spec.epochs as u64 {
        let lr = sched.lr;
        let order = rng::permutation(data.len(), &mut rng::stream(seed, "epoch-order", 0, epoch));
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (b, idx) in batches(&order, spec.batch_size).into_iter().enumerate() {
            let clouds = idx
                .iter()
                .map(|&i| training_view(spec, &data.clouds[i], data.ids[i], epoch, seed))
                .collect::<Result<Vec<_>>>()?;
            let labels: Vec<usize> = idx.iter().map(|&i| data.clouds[i].label.unwrap_or(0)).collect();
            let x = model.net.input_tensor(&clouds)?;
            let mut s = Session::train(&mut model.store);
            let xv = s.input(x);
            let logits = model.net.forward(&mut s, xv, idx.len())?;
            let loss = softmax_cross_entropy(&mut s.tape, logits, &labels, eps)?;
            let value = s.value(loss).item();
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch: epoch as usize,
                    batch: b,
                    seed,
                });
            }
            let k = config.n_classes;
            correct += s
                .value(logits)
                .data()
                .chunks(k)
                .zip(&labels)
                .filter(|(row, &l)| argmax(row) == l)
                .count();
            loss_sum += value * idx.len() as f64;
            s.backward(loss)?;
            drop(s);
            adam.step(&mut model.store, lr);
            model.store.zero_grad();
        }
        let train_loss = loss_sum / data.len() as f64;
        let val_acc = val.as_ref().map(|(c, l)| predict(&model, c).map(|p| accuracy(&p, l))).transpose()?;
        let test_acc = test
            .as_ref()
            .map(|(c, l)| predict(&model, c).map(|p| accuracy(&p, l)))
            .transpose()?;
        let e = epoch as usize + 1;
        if opts.keep_best_test {
            if let Some(acc) = test_acc {
                if best_test.as_ref().map_or(true, |(_, b, _)| acc > *b) {
                    best_test = Some((e, acc, model.clone()));
                }
            }
        }
        sched.step(val_acc.unwrap_or(train_loss));
        log.epochs.push(EpochRecord {
            epoch: e,
            train_loss,
            train_acc: correct as f64 / data.len() as f64,
            val_acc,
            test_acc,
            lr,
        });
    }
    Ok(TrainOutcome {
        log,
        model,
        optimizer: adam,
        best_test: best_test.map(|(e, _, m)| (e, m)),
    })
}

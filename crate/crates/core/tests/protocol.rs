use orthoview::augment::ProtocolId;
use orthoview::cli::loss_selection_grid;
use orthoview::geometry::*;
use orthoview::models::{Classifier, Model, ModelConfig};
use orthoview::protocol::*;
use orthoview::Result;
use proptest::prelude::*;

fn data(train: usize, test: usize, n_points: usize) -> (DatasetSplit, DatasetSplit) {
    generate_dataset(&DatasetConfig {
        train_per_class: train,
        test_per_class: test,
        n_points,
        ..Default::default()
    })
    .unwrap()
}

fn tiny_pointnet(k: usize) -> ModelConfig {
    ModelConfig {
        head_hidden: 16,
        point_widths: vec![16, 32],
        ..ModelConfig::pointnet(k)
    }
}

fn quick(epochs: usize) -> ProtocolSpec {
    ProtocolSpec {
        n_points: 64,
        epochs,
        selection: Selection::Last,
        ..preset(ProtocolId::Dgcnn)
    }
}

#[test]
fn validation_split_is_a_stratified_partition() {
    let (train, _) = data(10, 1, 16);
    let (keep, val) = split_validation(&train, 0.2, 3).unwrap();
    assert_eq!(val.len(), 16);
    assert_eq!(keep.len() + val.len(), train.len());
    for idx in val.indices_by_class() {
        assert_eq!(idx.len(), 2);
    }
    let mut ids: Vec<u64> = keep.ids.iter().chain(&val.ids).copied().collect();
    ids.sort_unstable();
    let mut all = train.ids.clone();
    all.sort_unstable();
    assert_eq!(ids, all);
    assert_eq!(split_validation(&train, 0.2, 3).unwrap().1, val);
    assert_ne!(split_validation(&train, 0.2, 4).unwrap().1.ids, val.ids);
    assert!(split_validation(&train, 0.0, 3).is_err());

    let (one, _) = data(1, 1, 16);
    assert!(split_validation(&one, 0.5, 0).is_err());
}

#[test]
fn fraction_subsets_are_nested_and_stratified() {
    let (train, _) = data(8, 1, 16);
    let quarter = stratified_fraction(&train, 0.25, 5).unwrap();
    let half = stratified_fraction(&train, 0.5, 5).unwrap();
    assert_eq!(quarter.len(), 16);
    assert_eq!(half.len(), 32);
    assert!(quarter.ids.iter().all(|id| half.ids.contains(id)));
    assert_eq!(stratified_fraction(&train, 1.0, 5).unwrap(), train);
}

#[test]
fn metrics_on_a_hand_example() {
    let m = Metrics::from_predictions(&[0, 1, 1, 2, 2, 0], &[0, 1, 2, 2, 2, 1], 3).unwrap();
    assert_eq!(m.overall_acc, 4.0 / 6.0);
    assert!((m.class_acc - (1.0 + 0.5 + 2.0 / 3.0) / 3.0).abs() < 1e-15);
    assert_eq!(m.confusion, vec![vec![1, 0, 0], vec![1, 1, 0], vec![0, 1, 2]]);
    let csv = m.confusion_csv(&["a".into(), "b".into(), "c".into()]);
    assert_eq!(csv.lines().next(), Some("true\\pred,a,b,c"));
    assert_eq!(csv.lines().nth(2), Some("b,1,1,0"));
}

#[test]
fn zero_learning_rate_leaves_weights_unchanged() {
    let (train, _) = data(3, 1, 64);
    let mut spec = quick(2);
    spec.adam.lr = 0.0;
    let cfg = tiny_pointnet(8);
    let out = train_model(&cfg, &spec, &train, 1).unwrap();
    let init = Model::new(&cfg, orthoview::rng::derive_seed(1, "model-init", 0)).unwrap();
    for ((_, a), (_, b)) in out.model.store.iter().zip(init.store.iter()) {
        if a.trainable {
            assert_eq!(a.value, b.value, "{}", a.name);
        }
    }
}

fn train_model(cfg: &ModelConfig, spec: &ProtocolSpec, data: &DatasetSplit, seed: u64) -> Result<TrainOutcome> {
    train(cfg, spec, data, &TrainOptions::default(), seed)
}

#[test]
fn a_tiny_training_set_is_memorized() {
    let (full, _) = data(1, 1, 64);
    let two = full.select(&[0, 1], SplitRole::Train);
    let mut spec = quick(60);
    spec.augment = Default::default();
    spec.adam.lr = 0.01;
    let cfg = ModelConfig {
        n_classes: 8,
        ..tiny_pointnet(8)
    };
    let out = train_model(&cfg, &spec, &two, 0).unwrap();
    let last = out.log.epochs.last().unwrap();
    assert_eq!(last.train_acc, 1.0);
    assert!(last.train_loss < out.log.epochs[0].train_loss);
    let pred = predict(&out.model, &eval_clouds(&two, 64, 0).unwrap()).unwrap();
    assert_eq!(pred, two.labels());
}

#[test]
fn training_is_deterministic() {
    let (train, test) = data(2, 1, 64);
    let spec = quick(2);
    let cfg = tiny_pointnet(8);
    let a = run_single(&cfg, &spec, &train, &test, 9, true).unwrap();
    let b = run_single(&cfg, &spec, &train, &test, 9, true).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.eval, b.eval);
}

#[test]
fn fixed_and_resampled_training_views() {
    let (train, _) = data(1, 1, 64);
    let c = &train.clouds[0];
    let mut spec = quick(1);
    spec.augment = Default::default();
    let f0 = training_view(&spec, c, 0, 0, 1).unwrap();
    assert_eq!(f0, training_view(&spec, c, 0, 3, 1).unwrap());
    let mut sorted = f0.points.clone();
    let mut orig = c.points.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    orig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(sorted, orig);
    spec.point_strategy = PointStrategy::Resampled;
    assert_ne!(training_view(&spec, c, 0, 0, 1).unwrap(), training_view(&spec, c, 0, 1, 1).unwrap());
}

#[test]
fn selection_modes() {
    let rec = |epoch, val, test| EpochRecord {
        epoch,
        train_loss: 1.0,
        train_acc: 0.5,
        val_acc: Some(val),
        test_acc: Some(test),
        lr: 1e-3,
    };
    let log = TrainLog {
        epochs: vec![rec(1, 0.5, 0.4), rec(2, 0.7, 0.6), rec(3, 0.7, 0.9), rec(4, 0.6, 0.5)],
    };
    assert_eq!(select_epoch(&log, Selection::Final).unwrap(), 2);
    assert_eq!(select_epoch(&log, Selection::BestTest).unwrap(), 3);
    assert_eq!(select_epoch(&log, Selection::Last).unwrap(), 4);
    assert!(select_epoch(&TrainLog::default(), Selection::Last).is_err());
}

/// Logits `[x̄ + 1, 0]` from the mean x coordinate.
struct MeanX;

impl Classifier for MeanX {
    fn logits(&self, clouds: &[PointCloud]) -> Result<Vec<Vec<f64>>> {
        Ok(clouds.iter().map(|c| vec![c.centroid()[0] + 1.0, 0.0]).collect())
    }
}

/// Always predicts class 1.
struct Constant;

impl Classifier for Constant {
    fn logits(&self, clouds: &[PointCloud]) -> Result<Vec<Vec<f64>>> {
        Ok(clouds.iter().map(|_| vec![0.0, 1.0, 0.0]).collect())
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[test]
fn rotation_vote_on_a_hand_built_classifier() {
    let c = PointCloud::new(vec![[1.0, 0.0, 0.0]], None).unwrap();
    // Quarter turns send x to 1, 0, -1, 0, so the first logit runs 2, 1, 0, 1.
    let probs = rotation_vote_probs(&MeanX, &[c.clone()], 4, false, 0).unwrap();
    let expected = (sigmoid(2.0) + sigmoid(1.0) + sigmoid(0.0) + sigmoid(1.0)) / 4.0;
    assert!((probs[0][0] - expected).abs() < 1e-12);
    assert!((probs[0][0] + probs[0][1] - 1.0).abs() < 1e-12);
    assert_eq!(rotation_vote(&MeanX, &c, 4, true, 0).unwrap(), 0);

    let single = rotation_vote_probs(&MeanX, &[c.clone()], 1, true, 0).unwrap();
    assert!((single[0][0] - sigmoid(2.0)).abs() < 1e-12);
}

#[test]
fn single_rotation_vote_equals_plain_prediction() {
    let (_, test) = data(1, 2, 64);
    let model = Model::new(&tiny_pointnet(8), 3).unwrap();
    let clouds = eval_clouds(&test, 64, 0).unwrap();
    let plain = predict(&model, &clouds).unwrap();
    for shuffle in [false, true] {
        let voted: Vec<usize> = clouds.iter().map(|c| rotation_vote(&model, c, 1, shuffle, 0).unwrap()).collect();
        assert_eq!(plain, voted);
    }
    let probs = rotation_vote_probs(&model, &clouds, 1, false, 0).unwrap();
    let logits = model.logits(&clouds).unwrap();
    for (p, l) in probs.iter().zip(&logits) {
        assert_eq!(p, &orthoview_nn::loss::softmax(l));
    }
}

#[test]
fn constant_model_scaling_vote_has_no_spread() {
    let (_, test) = data(1, 2, 64);
    let test3 = test.select(&test.indices_by_class()[..3].concat(), SplitRole::Test);
    let three = DatasetSplit::new(
        test3.clouds.clone(),
        test3.ids.clone(),
        test.class_names[..3].to_vec(),
        SplitRole::Test,
    )
    .unwrap();
    let r = repeated_scaling_vote(&Constant, &three, 20, 2, 32, (0.8, 1.25), 0).unwrap();
    assert!(r.trials.iter().all(|&t| t == r.trials[0]));
    assert!((r.best - r.mean()).abs() < 1e-15);
    assert_eq!(r.best, 1.0 / 3.0);
    assert_eq!(r.best_trial, 0);
}

#[test]
fn scaling_vote_best_is_the_maximum_trial() {
    let (_, test) = data(1, 2, 64);
    let model = Model::new(&tiny_pointnet(8), 4).unwrap();
    let r = repeated_scaling_vote(&model, &test, 25, 2, 64, (0.8, 1.25), 1).unwrap();
    let prefix = r.prefix_best();
    assert_eq!(prefix.len(), 25);
    assert!(prefix.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(*prefix.last().unwrap(), r.best);
    assert!(r.best >= r.mean());
    assert_eq!(r.trials[r.best_trial], r.best);
    assert!(r.trials[..r.best_trial].iter().all(|&t| t < r.best));
    let again = repeated_scaling_vote(&model, &test, 25, 2, 64, (0.8, 1.25), 1).unwrap();
    assert_eq!(again, r);
}

#[test]
fn repeated_seeds_give_zero_spread() {
    let (train, test) = data(2, 1, 64);
    let rep = run_protocol(&tiny_pointnet(8), &quick(1), &train, &test, &[5, 5, 5], 1).unwrap();
    assert_eq!(rep.summary.std_overall, 0.0);
    assert_eq!(rep.summary.mean_overall, rep.rows[0].overall_acc);
    let threaded = run_protocol(&tiny_pointnet(8), &quick(1), &train, &test, &[5, 5, 5], 3).unwrap();
    assert_eq!(threaded.rows, rep.rows);
}

#[test]
fn loss_selection_grid_runs_four_protocols() {
    let (train, test) = data(3, 1, 64);
    let base = ProtocolSpec {
        n_points: 64,
        epochs: 2,
        ..preset(ProtocolId::Simpleview)
    };
    let grid = loss_selection_grid(&base);
    assert_eq!(grid.len(), 4);
    let names: Vec<&str> = grid.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(
        names,
        [
            "simpleview+ce+final",
            "simpleview+ce+best_test",
            "simpleview+smooth+final",
            "simpleview+smooth+best_test"
        ]
    );
    for spec in &grid {
        let rep = run_protocol(&tiny_pointnet(8), spec, &train, &test, &[0], 1).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert!(rep.rows[0].selected_epoch >= 1 && rep.rows[0].selected_epoch <= 2);
    }
}

#[test]
fn best_test_selection_never_trails_the_last_epoch() {
    let (train, test) = data(3, 2, 64);
    let spec = ProtocolSpec {
        selection: Selection::BestTest,
        ..quick(4)
    };
    let r = run_single(&tiny_pointnet(8), &spec, &train, &test, 2, true).unwrap();
    assert!(r.best_test_acc().unwrap() >= r.last_epoch_test_acc().unwrap());
    assert_eq!(r.eval.metrics.overall_acc, r.best_test_acc().unwrap());
}

#[test]
fn presets_validate_and_reject_bad_values() {
    for id in ProtocolId::ALL {
        preset(id).validate().unwrap();
    }
    assert_eq!(preset(ProtocolId::Rscnn).ensemble.name(), "rsvote");
    assert_eq!(preset(ProtocolId::Pointnet2).ensemble.name(), "rotvote");
    let bad = ProtocolSpec {
        smoothing: 1.0,
        ..preset(ProtocolId::Dgcnn)
    };
    assert!(bad.validate().is_err());
    let bad = ProtocolSpec {
        ensemble: Ensemble::RotationVote {
            n_rotations: 0,
            shuffle: false,
        },
        ..preset(ProtocolId::Dgcnn)
    };
    assert!(bad.validate().is_err());
}

proptest! {
    #[test]
    fn mean_std_of_constants(v in -1.0f64..1.0, n in 1usize..10) {
        let (m, s) = mean_std(&vec![v; n]);
        prop_assert_eq!(m, v);
        prop_assert_eq!(s, 0.0);
    }

    #[test]
    fn metrics_accuracy_matches_count(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..50)) {
        let (p, l): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let m = Metrics::from_predictions(&p, &l, 4).unwrap();
        let correct = pairs.iter().filter(|(a, b)| a == b).count();
        prop_assert_eq!(m.overall_acc, correct as f64 / pairs.len() as f64);
        prop_assert_eq!(m.confusion.iter().flatten().sum::<u64>() as usize, pairs.len());
    }
}

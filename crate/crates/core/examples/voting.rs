//! Test-time ensembles on one trained model: plain prediction, rotation
//! voting, and the repeated scaling vote whose best-of-N trial is an
//! optimistic statistic.
//!
//! cargo run --release --example voting

use orthoview::geometry::{generate_dataset, DatasetConfig};
use orthoview::models::ModelConfig;
use orthoview::protocol::*;

fn main() -> orthoview::Result<()> {
    let (train_split, test) = generate_dataset(&DatasetConfig {
        train_per_class: 12,
        test_per_class: 8,
        ..Default::default()
    })?;
    let config = ModelConfig::pointnet(train_split.n_classes());
    let spec = ProtocolSpec {
        epochs: 15,
        selection: Selection::Last,
        ..preset(ProtocolId::Pointnet2)
    };
    let model = train(&config, &spec, &train_split, &TrainOptions::default(), 0)?.model;

    let clouds = eval_clouds(&test, spec.n_points, 0)?;
    let labels = test.labels();
    let acc = |pred: &[usize]| pred.iter().zip(&labels).filter(|(p, l)| p == l).count() as f64 / labels.len() as f64;
    println!("plain prediction:        {:.3}", acc(&predict(&model, &clouds)?));

    for n in [4, 12] {
        let probs = rotation_vote_probs(&model, &clouds, n, true, 0)?;
        let pred: Vec<usize> = probs.iter().map(|p| orthoview::models::argmax(p)).collect();
        println!("rotation vote, {n:>2} views: {:.3}", acc(&pred));
    }

    let rs = repeated_scaling_vote(&model, &test, 100, 3, spec.n_points, (0.8, 1.25), 0)?;
    let prefix = rs.prefix_best();
    println!("scaling vote trial mean:  {:.3}", rs.mean());
    for k in [1, 10, 100] {
        println!("  best of first {k:>3} trials: {:.3}", prefix[k - 1]);
    }
    Ok(())
}

//! Clean vs scan-like corrupted test accuracy (background points, a hole,
//! random rotation), and how rotation augmentation changes accuracy on a
//! test set rotated about the vertical axis.
//!
//! cargo run --release --example corruption_robustness -- [epochs]

use orthoview::geometry::*;
use orthoview::models::{Model, ModelConfig};
use orthoview::protocol::*;

fn accuracy(model: &Model, split: &DatasetSplit, n_points: usize) -> orthoview::Result<f64> {
    let pred = predict(model, &eval_clouds(split, n_points, 0)?)?;
    Ok(Metrics::from_predictions(&pred, &split.labels(), split.n_classes())?.overall_acc)
}

fn main() -> orthoview::Result<()> {
    let epochs: usize = std::env::args()
        .nth(1)
        .map_or(Ok(20), |s| s.parse())
        .map_err(|e: std::num::ParseIntError| orthoview::Error::Invalid(e.to_string()))?;
    let (train_split, test) = generate_dataset(&DatasetConfig {
        train_per_class: 16,
        test_per_class: 10,
        ..Default::default()
    })?;
    let corrupted = corrupt_split(&test, &CorruptionSpec::scan_like(), 1)?;
    let rotated = corrupt_split(
        &test,
        &CorruptionSpec {
            rotate: Some(RotationAxis::Y),
            ..Default::default()
        },
        2,
    )?;

    let plain = ProtocolSpec {
        epochs,
        selection: Selection::Last,
        ..preset(ProtocolId::Simpleview)
    };
    let mut with_rotation = plain.clone();
    with_rotation.augment.rotate_y.enabled = true;

    for mut config in [ModelConfig::simpleview(8), ModelConfig::pointnet(8)] {
        config.width_divisor = 8;
        for (label, spec) in [("scale+translate", &plain), ("+rotate_y", &with_rotation)] {
            let model = train(&config, spec, &train_split, &TrainOptions::default(), 0)?.model;
            println!(
                "{:<10} {:<16} clean {:.3}  corrupted {:.3}  y-rotated {:.3}",
                config.arch.to_string(),
                label,
                accuracy(&model, &test, spec.n_points)?,
                accuracy(&model, &corrupted, spec.n_points)?,
                accuracy(&model, &rotated, spec.n_points)?
            );
        }
    }
    Ok(())
}

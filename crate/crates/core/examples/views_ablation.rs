//! Accuracy of SimpleView with 1, 3 and 6 views, plus orthographic vs
//! perspective projection at 6 views. Small scale: expect a few minutes.
//!
//! cargo run --release --example views_ablation -- [epochs] [seeds]

use orthoview::geometry::{generate_dataset, DatasetConfig};
use orthoview::models::ModelConfig;
use orthoview::projection::ProjectionMode;
use orthoview::protocol::{preset, run_protocol, ProtocolId, ProtocolSpec, Selection};

fn main() -> orthoview::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>());
    let bad = |e: std::num::ParseIntError| orthoview::Error::Invalid(e.to_string());
    let epochs = args.next().transpose().map_err(bad)?.unwrap_or(30);
    let n_seeds = args.next().transpose().map_err(bad)?.unwrap_or(2) as u64;
    let seeds: Vec<u64> = (0..n_seeds).collect();

    let (train, test) = generate_dataset(&DatasetConfig {
        train_per_class: 16,
        test_per_class: 10,
        ..Default::default()
    })?;
    let spec = ProtocolSpec {
        epochs,
        selection: Selection::Last,
        ..preset(ProtocolId::Simpleview)
    };
    let mut cells = vec![];
    for views in [1, 3, 6] {
        cells.push((views, ProjectionMode::Perspective));
    }
    cells.push((6, ProjectionMode::Orthographic));
    for (views, projection) in cells {
        let mut config = ModelConfig::simpleview(train.n_classes());
        config.width_divisor = 8;
        config.render.views = views;
        config.render.projection = projection;
        let rep = run_protocol(&config, &spec, &train, &test, &seeds, 1)?;
        let s = &rep.summary;
        println!(
            "{views} views, {projection}: {:.2} ± {:.2} %",
            100.0 * s.mean_overall,
            100.0 * s.std_overall
        );
    }
    Ok(())
}

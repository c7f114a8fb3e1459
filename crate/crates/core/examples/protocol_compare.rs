//! The same architecture under the four training/evaluation protocols,
//! plus the same runs scored with best-test selection. The gap between
//! the two columns is accuracy gained purely from peeking at the test set.
//!
//! cargo run --release --example protocol_compare -- [epochs]

use orthoview::geometry::{generate_dataset, DatasetConfig};
use orthoview::models::ModelConfig;
use orthoview::protocol::{mean_std, preset, run_single, Ensemble, ProtocolId, ProtocolSpec};

fn main() -> orthoview::Result<()> {
    let epochs: usize = std::env::args()
        .nth(1)
        .map_or(Ok(15), |s| s.parse())
        .map_err(|e: std::num::ParseIntError| orthoview::Error::Invalid(e.to_string()))?;
    let (train, test) = generate_dataset(&DatasetConfig {
        train_per_class: 12,
        test_per_class: 8,
        ..Default::default()
    })?;
    let config = ModelConfig::pointnet(train.n_classes());
    println!(
        "{:<12} {:>10} {:>14} {:>18}",
        "protocol", "ensemble", "reported acc", "best-test curve"
    );
    for id in ProtocolId::ALL {
        let mut spec = ProtocolSpec { epochs, ..preset(id) };
        if let Ensemble::RepeatedScalingVote { .. } = spec.ensemble {
            spec.ensemble = Ensemble::RepeatedScalingVote {
                n_trials: 30,
                n_versions: 2,
            };
        }
        let mut reported = vec![];
        let mut peeked = vec![];
        for seed in 0..2 {
            let run = run_single(&config, &spec, &train, &test, seed, true)?;
            reported.push(run.eval.metrics.overall_acc);
            peeked.push(run.best_test_acc().unwrap_or(f64::NAN));
        }
        println!(
            "{:<12} {:>10} {:>13.1}% {:>17.1}%",
            spec.name,
            spec.ensemble.name(),
            100.0 * mean_std(&reported).0,
            100.0 * mean_std(&peeked).0
        );
    }
    Ok(())
}

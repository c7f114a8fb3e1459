//! Trains SimpleView on the synthetic benchmark with the simpleview
//! protocol (validation-tuned epoch count, label smoothing), prints the
//! learning curve and saves a checkpoint.
//!
//! cargo run --release --example train_classifier -- [epochs] [checkpoint]

use std::path::PathBuf;

use orthoview::geometry::{generate_dataset, DatasetConfig};
use orthoview::models::{load_checkpoint, save_checkpoint, Checkpoint, ModelConfig};
use orthoview::protocol::{evaluate, preset, run_single, ProtocolId};

fn main() -> orthoview::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args
        .next()
        .map_or(Ok(20), |s| s.parse())
        .map_err(|e: std::num::ParseIntError| orthoview::Error::Invalid(format!("epochs: {e}")))?;
    let path = PathBuf::from(args.next().unwrap_or_else(|| "simpleview.ovck".into()));

    let (train, test) = generate_dataset(&DatasetConfig {
        train_per_class: 16,
        test_per_class: 10,
        ..Default::default()
    })?;
    let mut config = ModelConfig::simpleview(train.n_classes());
    config.width_divisor = 8;
    let spec = orthoview::protocol::ProtocolSpec {
        epochs,
        ..preset(ProtocolId::Simpleview)
    };

    let run = run_single(&config, &spec, &train, &test, 0, true)?;
    if let Some(tuning) = &run.tuning_log {
        let val: Vec<String> = tuning.epochs.iter().map(|e| format!("{:.2}", e.val_acc.unwrap_or(0.0))).collect();
        println!("validation curve: {}", val.join(" "));
    }
    println!("retrained for {} epochs on all training data", run.selected_epoch);
    for e in &run.log.epochs {
        println!(
            "epoch {:>3}  loss {:.4}  train {:.3}  test {:.3}  lr {:.1e}",
            e.epoch,
            e.train_loss,
            e.train_acc,
            e.test_acc.unwrap_or(f64::NAN),
            e.lr
        );
    }
    let m = &run.eval.metrics;
    println!("test: overall {:.3}, class-mean {:.3}", m.overall_acc, m.class_acc);

    save_checkpoint(
        &Checkpoint {
            model: run.model,
            epoch: run.selected_epoch as u64,
            adam: None,
        },
        &path,
    )?;
    let back = load_checkpoint(&path, Some(&config))?;
    let again = evaluate(&back.model, &test, &spec, 0)?;
    println!("reloaded {} -> overall {:.3}", path.display(), again.metrics.overall_acc);
    Ok(())
}

//! Synthesizes the 8-class shape benchmark and writes it as `.xyz` files.
//!
//! cargo run --release --example generate_dataset -- [out_dir]

use std::path::PathBuf;

use orthoview::geometry::{generate_dataset, save_dataset, DatasetConfig};

fn main() -> orthoview::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "shapes".into()));
    let cfg = DatasetConfig {
        train_per_class: 16,
        test_per_class: 10,
        ..Default::default()
    };
    let (train, test) = generate_dataset(&cfg)?;
    save_dataset(&train, &out.join("train"))?;
    save_dataset(&test, &out.join("test"))?;
    for (k, name) in train.class_names.iter().enumerate() {
        let n_train = train.indices_by_class()[k].len();
        let n_test = test.indices_by_class()[k].len();
        println!("{name:>10}: {n_train} train, {n_test} test");
    }
    println!("wrote {}", out.display());
    Ok(())
}

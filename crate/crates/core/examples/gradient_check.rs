//! Compares backpropagated gradients of a small SimpleView and a small
//! PointNet-lite against central finite differences over every parameter.
//!
//! cargo run --release --example gradient_check

use orthoview::geometry::{synth_shape, PointCloud, ShapeKind};
use orthoview::models::{Model, ModelConfig};
use orthoview::projection::RenderConfig;
use orthoview_nn::gradcheck::{grad_check, DEFAULT_FLOOR, DEFAULT_STEP};
use orthoview_nn::{loss, Mode, NnError};

fn check(name: &str, config: &ModelConfig, clouds: &[PointCloud]) -> orthoview::Result<()> {
    let mut model = Model::new(config, 1)?;
    let x = model.net.input_tensor(clouds)?;
    let labels: Vec<usize> = (0..clouds.len()).collect();
    let net = model.net.clone();
    let report = grad_check(&mut model.store, Mode::Train, DEFAULT_STEP, DEFAULT_FLOOR, |s| {
        let xv = s.input(x.clone());
        let y = net.forward(s, xv, clouds.len()).map_err(|e| NnError::InvalidArgument {
            op: "forward",
            msg: e.to_string(),
        })?;
        loss::softmax_cross_entropy(&mut s.tape, y, &labels, 0.2)
    })?;
    println!(
        "{name}: {} coordinates, max relative error {:.2e} at {:?} (analytic {:.3e}, numeric {:.3e})",
        report.checked, report.max_rel_error, report.worst, report.worst_analytic, report.worst_numeric
    );
    Ok(())
}

fn main() -> orthoview::Result<()> {
    let shape = |k: ShapeKind, n, seed| synth_shape(k, n, seed, &k.base_params()).map(|c| c.normalize_unit_cube().cloud);
    let sv = ModelConfig {
        width_divisor: 32,
        head_hidden: 16,
        render: RenderConfig {
            views: 3,
            resolution: 16,
            ..Default::default()
        },
        ..ModelConfig::simpleview(4)
    };
    check(
        "SimpleView (ResNet18/32, 3 views, 16x16)",
        &sv,
        &[shape(ShapeKind::Sphere, 256, 0)?, shape(ShapeKind::Cone, 256, 1)?],
    )?;
    let pn = ModelConfig {
        head_hidden: 16,
        point_widths: vec![8, 16],
        ..ModelConfig::pointnet(4)
    };
    check(
        "PointNet-lite (8-16)",
        &pn,
        &[shape(ShapeKind::Box, 32, 2)?, shape(ShapeKind::Torus, 32, 3)?],
    )?;
    Ok(())
}

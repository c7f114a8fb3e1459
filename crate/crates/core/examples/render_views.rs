//! Renders one shape from the six axis-aligned cameras, in both projection
//! modes, and writes 16-bit PGM images. Also prints a coarse ASCII preview
//! of the +z view.
//!
//! cargo run --release --example render_views -- [shape] [out_dir]

use std::path::PathBuf;

use orthoview::geometry::{synth_shape, ShapeKind};
use orthoview::projection::{render_multiview, save_stack_pgm, ProjectionMode, RenderConfig};

fn main() -> orthoview::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "torus".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| "views".into()));
    let kind: ShapeKind = name.parse()?;
    let cloud = synth_shape(kind, 2048, 0, &kind.base_params())?.normalize_unit_cube().cloud;

    for projection in [ProjectionMode::Perspective, ProjectionMode::Orthographic] {
        let cfg = RenderConfig {
            projection,
            ..Default::default()
        };
        let stack = render_multiview(&cloud, &cfg)?;
        let paths = save_stack_pgm(&stack, &out, &format!("{name}_{projection}"))?;
        println!("{projection}: {} images, first {}", paths.len(), paths[0].display());
        if projection == ProjectionMode::Perspective {
            let r = stack.resolution;
            let img = stack.image(4);
            for row in (0..r).rev().step_by(2) {
                let line: String = (0..r)
                    .map(|c| match img[row * r + c] {
                        v if v == 0.0 => ' ',
                        v if v < 0.35 => '.',
                        v if v < 0.5 => 'o',
                        _ => '#',
                    })
                    .collect();
                println!("|{line}|");
            }
        }
    }
    Ok(())
}

//! Command layer: every command resolves an [`ExperimentConfig`], writes it
//! as `manifest.json` into the output directory, then writes its artifacts.
//! Re-running a command with `--config <manifest>` reproduces its numbers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::ProtocolId;
use crate::error::{invalid, Result};
use crate::geometry::{generate_dataset, load_dataset, load_xyz, save_dataset, write_atomic, DatasetConfig, DatasetSplit, SplitRole};
use crate::models::{load_checkpoint, save_checkpoint, Arch, Checkpoint, Fusion, ModelConfig};
use crate::projection::{render_multiview, save_stack_pgm, DepthMode, ProjectionMode};
use crate::protocol::{evaluate, preset, run_protocol, run_single, Ensemble, EvalResult, ProtocolSpec, RunRow, TrainLog, REPORT_HEADER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Gen,
    Render,
    Train,
    Ablate,
    Compare,
    Eval,
}

/// Where clouds come from: a directory with `train/` and `test/`
/// subdirectories, or the synthetic generator.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSource {
    pub dir: Option<PathBuf>,
    pub synthetic: DatasetConfig,
}

impl DatasetSource {
    pub fn load(&self) -> Result<(DatasetSplit, DatasetSplit)> {
        match &self.dir {
            Some(d) => Ok((
                load_dataset(&d.join("train"), SplitRole::Train)?,
                load_dataset(&d.join("test"), SplitRole::Test)?,
            )),
            None => generate_dataset(&self.synthetic),
        }
    }
}

/// Fully resolved description of one command invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub command: Command,
    pub dataset: DatasetSource,
    pub model: ModelConfig,
    pub protocol: ProtocolSpec,
    /// Architectures compared by `compare`.
    pub archs: Vec<Arch>,
    /// Protocols compared by `compare`.
    pub protocols: Vec<ProtocolSpec>,
    /// Training fractions swept by `compare`.
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    pub jobs: usize,
    pub out: PathBuf,
    /// Checkpoint evaluated by `eval`.
    pub checkpoint: Option<PathBuf>,
    /// `render`: a single `.xyz` file instead of the dataset.
    pub xyz: Option<PathBuf>,
    /// `render`: number of dataset clouds rendered.
    pub render_limit: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: Command::Train,
            dataset: DatasetSource::default(),
            model: ModelConfig::simpleview(8),
            protocol: preset(ProtocolId::Simpleview),
            archs: vec![Arch::Simpleview, Arch::Pointnet],
            protocols: ProtocolId::ALL.iter().map(|&p| preset(p)).collect(),
            fractions: vec![1.0],
            seeds: vec![0],
            jobs: 1,
            out: PathBuf::from("out"),
            checkpoint: None,
            xyz: None,
            render_limit: 8,
        }
    }
}

/// Command-line values that override a config file. `None` keeps the file
/// (or default) value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub arch: Option<Arch>,
    pub protocol: Option<ProtocolId>,
    pub views: Option<usize>,
    pub projection: Option<ProjectionMode>,
    pub fusion: Option<Fusion>,
    pub depth: Option<DepthMode>,
    pub resolution: Option<usize>,
    pub points: Option<usize>,
    pub epochs: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub fraction: Option<f64>,
    pub ensemble: Option<Ensemble>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub xyz: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
}

fn override_spec(spec: &mut ProtocolSpec, o: &Overrides) {
    if let Some(p) = o.protocol {
        *spec = preset(p);
    }
    if let Some(n) = o.points {
        spec.n_points = n;
    }
    if let Some(e) = o.epochs {
        spec.epochs = e;
    }
    if let Some(f) = o.fraction {
        spec.train_fraction = f;
    }
    if let Some(e) = o.ensemble {
        spec.ensemble = e;
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(crate::error::io_err(path))?;
        Self::from_json(&text)
    }

    /// Applies command-line overrides. `env_seed` seeds the run when neither
    /// `--seeds` nor the config file gave seeds.
    pub fn apply(&mut self, o: &Overrides, env_seed: Option<u64>, seeds_from_file: bool) {
        if let Some(a) = o.arch {
            self.model.arch = a;
            self.archs = vec![a];
        }
        let m = &mut self.model;
        if let Some(v) = o.views {
            m.render.views = v;
        }
        if let Some(p) = o.projection {
            m.render.projection = p;
        }
        if let Some(f) = o.fusion {
            m.fusion = f;
        }
        if let Some(d) = o.depth {
            m.render.depth = d;
        }
        if let Some(r) = o.resolution {
            m.render.resolution = r;
        }
        override_spec(&mut self.protocol, o);
        if o.protocol.is_some() {
            self.protocols = vec![self.protocol.clone()];
        }
        for spec in &mut self.protocols {
            override_spec(
                spec,
                &Overrides {
                    protocol: None,
                    ..o.clone()
                },
            );
        }
        if let Some(f) = o.fraction {
            self.fractions = vec![f];
        }
        match (&o.seeds, env_seed) {
            (Some(s), _) => self.seeds = s.clone(),
            (None, Some(s)) if !seeds_from_file => {
                let n = self.seeds.len().max(1) as u64;
                self.seeds = (0..n).map(|i| s.wrapping_add(i)).collect();
            }
            _ => {}
        }
        if let Some(j) = o.jobs {
            self.jobs = j;
        }
        if let Some(p) = &o.out {
            self.out = p.clone();
        }
        if let Some(p) = &o.checkpoint {
            self.checkpoint = Some(p.clone());
        }
        if let Some(p) = &o.xyz {
            self.xyz = Some(p.clone());
        }
        if let Some(p) = &o.dataset {
            self.dataset.dir = Some(p.clone());
        }
    }

    /// Defaults for a command before any file or flag is applied.
    pub fn for_command(command: Command) -> Self {
        let mut c = Self {
            command,
            ..Default::default()
        };
        if matches!(command, Command::Ablate | Command::Compare) {
            c.seeds = vec![0, 1, 2, 3];
        }
        c
    }

    fn write_manifest(&self) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        write_atomic(&self.out.join("manifest.json"), json.as_bytes())
    }
}

fn report_csv(header: &str, lines: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    s
}

pub fn log_csv(log: &TrainLog) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    report_csv(
        "epoch,train_loss,train_acc,val_acc,test_acc,lr",
        log.epochs.iter().map(|e| {
            format!(
                "{},{},{},{},{},{}",
                e.epoch,
                e.train_loss,
                e.train_acc,
                opt(e.val_acc),
                opt(e.test_acc),
                e.lr
            )
        }),
    )
}

/// Writes `train/` and `test/` dataset directories under `out`.
pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<(DatasetSplit, DatasetSplit)> {
    cfg.write_manifest()?;
    let (train, test) = generate_dataset(&cfg.dataset.synthetic)?;
    save_dataset(&train, &cfg.out.join("train"))?;
    save_dataset(&test, &cfg.out.join("test"))?;
    Ok((train, test))
}

/// Renders `cfg.xyz` (as given) or the first `render_limit` test clouds of
/// the dataset to `<id>_view<k>.pgm` files. Returns the written paths.
pub fn cmd_render(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.write_manifest()?;
    let render = &cfg.model.render;
    let mut written = Vec::new();
    if let Some(path) = &cfg.xyz {
        let cloud = load_xyz(path)?;
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("cloud");
        written.extend(save_stack_pgm(&render_multiview(&cloud, render)?, &cfg.out, id)?);
    } else {
        let (_, test) = cfg.dataset.load()?;
        for (cloud, id) in test.clouds.iter().zip(&test.ids).take(cfg.render_limit) {
            written.extend(save_stack_pgm(&render_multiview(cloud, render)?, &cfg.out, &id.to_string())?);
        }
    }
    Ok(written)
}

fn row(arch: Arch, spec: &ProtocolSpec, seed: u64, eval: &EvalResult, epoch: usize) -> RunRow {
    RunRow {
        arch: arch.to_string(),
        protocol: spec.name.clone(),
        seed,
        overall_acc: eval.metrics.overall_acc,
        class_acc: eval.metrics.class_acc,
        selected_epoch: epoch,
        ensemble: spec.ensemble.name().to_owned(),
        fraction: spec.train_fraction,
    }
}

/// One training run with the first seed. Writes `log.csv`, `report.csv`,
/// `confusion.csv` and `model.ovck`.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<RunRow> {
    cfg.write_manifest()?;
    let seed = *cfg.seeds.first().ok_or_else(|| invalid("no seed given"))?;
    let (train, test) = cfg.dataset.load()?;
    let mut model = cfg.model.clone();
    model.n_classes = train.n_classes();
    let run = run_single(&model, &cfg.protocol, &train, &test, seed, false)?;
    let r = row(model.arch, &cfg.protocol, seed, &run.eval, run.selected_epoch);
    write_atomic(&cfg.out.join("log.csv"), log_csv(&run.log).as_bytes())?;
    if let Some(t) = &run.tuning_log {
        write_atomic(&cfg.out.join("tuning_log.csv"), log_csv(t).as_bytes())?;
    }
    write_atomic(&cfg.out.join("report.csv"), report_csv(REPORT_HEADER, [r.csv()]).as_bytes())?;
    write_atomic(
        &cfg.out.join("confusion.csv"),
        run.eval.metrics.confusion_csv(&test.class_names).as_bytes(),
    )?;
    let ck = Checkpoint {
        model: run.model,
        epoch: run.selected_epoch as u64,
        adam: None,
    };
    save_checkpoint(&ck, &cfg.out.join("model.ovck"))?;
    Ok(r)
}

/// Evaluates `cfg.checkpoint` on the test split with `cfg.protocol.ensemble`.
/// Writes `metrics.json` and `confusion.csv`.
pub fn cmd_eval(cfg: &ExperimentConfig) -> Result<EvalResult> {
    cfg.write_manifest()?;
    let path = cfg.checkpoint.as_ref().ok_or_else(|| invalid("eval needs --checkpoint"))?;
    let ck = load_checkpoint(path, None)?;
    let (_, test) = cfg.dataset.load()?;
    if ck.model.config().n_classes != test.n_classes() {
        return Err(invalid("checkpoint and dataset disagree on the number of classes"));
    }
    let seed = cfg.seeds.first().copied().unwrap_or(0);
    let res = evaluate(&ck.model, &test, &cfg.protocol, seed)?;
    write_atomic(&cfg.out.join("metrics.json"), serde_json::to_string_pretty(&res)?.as_bytes())?;
    write_atomic(
        &cfg.out.join("confusion.csv"),
        res.metrics.confusion_csv(&test.class_names).as_bytes(),
    )?;
    Ok(res)
}

/// One cell of the view/projection/fusion/depth grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationCell {
    pub views: usize,
    pub projection: ProjectionMode,
    pub fusion: Fusion,
    pub depth: DepthMode,
}

/// All 3 · 2 · 2 · 2 = 24 cells.
pub fn ablation_grid() -> Vec<AblationCell> {
    let mut cells = Vec::new();
    for views in [1, 3, 6] {
        for projection in [ProjectionMode::Orthographic, ProjectionMode::Perspective] {
            for fusion in [Fusion::Pool, Fusion::Concat] {
                for depth in [DepthMode::Minimum, DepthMode::WeightedAvg] {
                    cells.push(AblationCell {
                        views,
                        projection,
                        fusion,
                        depth,
                    });
                }
            }
        }
    }
    cells
}

/// SimpleView over [`ablation_grid`], every cell for every seed. Writes
/// `report.csv` with the cell appended to each row.
pub fn cmd_ablate(cfg: &ExperimentConfig) -> Result<Vec<(AblationCell, RunRow)>> {
    cfg.write_manifest()?;
    let (train, test) = cfg.dataset.load()?;
    let mut out = Vec::new();
    for cell in ablation_grid() {
        let mut model = cfg.model.clone();
        model.arch = Arch::Simpleview;
        model.n_classes = train.n_classes();
        model.render.views = cell.views;
        model.render.projection = cell.projection;
        model.fusion = cell.fusion;
        model.render.depth = cell.depth;
        let rep = run_protocol(&model, &cfg.protocol, &train, &test, &cfg.seeds, cfg.jobs)?;
        out.extend(rep.rows.into_iter().map(|r| (cell, r)));
    }
    let lines = out
        .iter()
        .map(|(c, r)| format!("{},{},{},{},{}", r.csv(), c.views, c.projection, c.fusion, c.depth));
    let csv = report_csv(&format!("{REPORT_HEADER},views,projection,fusion,depth"), lines);
    write_atomic(&cfg.out.join("report.csv"), csv.as_bytes())?;
    Ok(out)
}

/// Every architecture × protocol × training fraction, every seed.
/// Writes `report.csv` and `summary.csv` (mean ± sample std per cell).
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<Vec<RunRow>> {
    cfg.write_manifest()?;
    let (train, test) = cfg.dataset.load()?;
    let mut rows = Vec::new();
    let mut summary =
        String::from("arch,protocol,ensemble,fraction,n_seeds,mean_overall_acc,std_overall_acc,mean_class_acc,std_class_acc\n");
    for &arch in &cfg.archs {
        let mut model = cfg.model.clone();
        model.arch = arch;
        model.n_classes = train.n_classes();
        for spec in &cfg.protocols {
            for &fraction in &cfg.fractions {
                let spec = ProtocolSpec {
                    train_fraction: fraction,
                    ..spec.clone()
                };
                let rep = run_protocol(&model, &spec, &train, &test, &cfg.seeds, cfg.jobs)?;
                let s = &rep.summary;
                let _ = writeln!(
                    summary,
                    "{arch},{},{},{fraction},{},{},{},{},{}",
                    spec.name,
                    spec.ensemble.name(),
                    cfg.seeds.len(),
                    s.mean_overall,
                    s.std_overall,
                    s.mean_class,
                    s.std_class
                );
                rows.extend(rep.rows);
            }
        }
    }
    write_atomic(
        &cfg.out.join("report.csv"),
        report_csv(REPORT_HEADER, rows.iter().map(RunRow::csv)).as_bytes(),
    )?;
    write_atomic(&cfg.out.join("summary.csv"), summary.as_bytes())?;
    Ok(rows)
}

/// Runs `cfg.command`.
pub fn run(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.command {
        Command::Gen => cmd_gen(cfg).map(|_| ()),
        Command::Render => cmd_render(cfg).map(|_| ()),
        Command::Train => cmd_train(cfg).map(|_| ()),
        Command::Ablate => cmd_ablate(cfg).map(|_| ()),
        Command::Compare => cmd_compare(cfg).map(|_| ()),
        Command::Eval => cmd_eval(cfg).map(|_| ()),
    }
}

/// The 2 × 2 grid of {cross-entropy, smooth} × {final, best-test} built
/// on `base`.
pub fn loss_selection_grid(base: &ProtocolSpec) -> Vec<ProtocolSpec> {
    use crate::protocol::{LossKind, Selection};
    let mut out = Vec::new();
    for loss in [LossKind::CrossEntropy, LossKind::Smooth] {
        for selection in [Selection::Final, Selection::BestTest] {
            let l = if loss == LossKind::Smooth { "smooth" } else { "ce" };
            let s = if selection == Selection::Final { "final" } else { "best_test" };
            out.push(ProtocolSpec {
                name: format!("{}+{l}+{s}", base.name),
                loss,
                selection,
                ..base.clone()
            });
        }
    }
    out
}

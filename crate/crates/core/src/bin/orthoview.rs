use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orthoview::augment::ProtocolId;
use orthoview::cli::{self, Command, ExperimentConfig, Overrides};
use orthoview::models::{Arch, Fusion};
use orthoview::projection::{DepthMode, ProjectionMode};
use orthoview::protocol::Ensemble;
use orthoview::Error;

#[derive(Parser)]
#[command(
    name = "orthoview",
    version,
    about = "Orthogonal-view point-cloud classification and protocol harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize the shape dataset into <out>/train and <out>/test.
    Gen(Flags),
    /// Dump depth images as 16-bit PGM files.
    Render(Flags),
    /// Train one (arch, protocol, seed) run.
    Train(Flags),
    /// Views × projection × fusion × depth grid.
    Ablate(Flags),
    /// Architecture × protocol × training-fraction grid.
    Compare(Flags),
    /// Evaluate a checkpoint.
    Eval(Flags),
}

fn seeds(s: &str) -> Result<Vec<u64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

#[derive(Args, Clone)]
struct Flags {
    /// JSON experiment config (e.g. an emitted manifest.json).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = |s: &str| s.parse::<Arch>().map_err(|e| e.to_string()))]
    arch: Option<Arch>,
    #[arg(long, value_parser = |s: &str| s.parse::<ProtocolId>().map_err(|e| e.to_string()))]
    protocol: Option<ProtocolId>,
    #[arg(long, value_parser = clap::builder::TypedValueParser::map(clap::builder::PossibleValuesParser::new(["1", "3", "6"]), |s: String| s.parse::<usize>().unwrap_or(6)))]
    views: Option<usize>,
    #[arg(long, value_parser = |s: &str| s.parse::<ProjectionMode>().map_err(|e| e.to_string()))]
    projection: Option<ProjectionMode>,
    #[arg(long, value_parser = |s: &str| s.parse::<Fusion>().map_err(|e| e.to_string()))]
    fusion: Option<Fusion>,
    #[arg(long, value_parser = |s: &str| s.parse::<DepthMode>().map_err(|e| e.to_string()))]
    depth: Option<DepthMode>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Comma-separated seeds; defaults to ORTHOVIEW_SEED when absent.
    #[arg(long, value_parser = seeds)]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long, value_parser = |s: &str| s.parse::<Ensemble>().map_err(|e| e.to_string()))]
    ensemble: Option<Ensemble>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dataset directory with train/ and test/ (default: synthetic).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Checkpoint for `eval`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Single .xyz file for `render`.
    #[arg(long)]
    xyz: Option<PathBuf>,
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Invalid(_) => "invalid",
        Error::Parse { .. } => "parse",
        Error::Nn(_) => "nn",
        Error::Io { .. } => "io",
        Error::Json(_) => "config",
        Error::Checkpoint(_) => "checkpoint",
        Error::NonFiniteLoss { .. } => "non_finite_loss",
    }
}

fn resolve(command: Command, f: Flags) -> orthoview::Result<ExperimentConfig> {
    let (mut cfg, from_file) = match &f.config {
        Some(p) => {
            let mut c = ExperimentConfig::load(p)?;
            c.command = command;
            (c, true)
        }
        None => (ExperimentConfig::for_command(command), false),
    };
    let env_seed = match std::env::var("ORTHOVIEW_SEED") {
        Ok(s) => Some(
            s.trim()
                .parse::<u64>()
                .map_err(|_| orthoview::Error::Invalid(format!("ORTHOVIEW_SEED={s:?} is not an integer")))?,
        ),
        Err(_) => None,
    };
    let o = Overrides {
        arch: f.arch,
        protocol: f.protocol,
        views: f.views,
        projection: f.projection,
        fusion: f.fusion,
        depth: f.depth,
        resolution: f.resolution,
        points: f.points,
        epochs: f.epochs,
        seeds: f.seeds,
        fraction: f.fraction,
        ensemble: f.ensemble,
        jobs: f.jobs,
        out: f.out,
        checkpoint: f.checkpoint,
        xyz: f.xyz,
        dataset: f.dataset,
    };
    cfg.apply(&o, env_seed, from_file);
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Cmd::Gen(f) => (Command::Gen, f),
        Cmd::Render(f) => (Command::Render, f),
        Cmd::Train(f) => (Command::Train, f),
        Cmd::Ablate(f) => (Command::Ablate, f),
        Cmd::Compare(f) => (Command::Compare, f),
        Cmd::Eval(f) => (Command::Eval, f),
    };
    match resolve(command, flags).and_then(|cfg| cli::run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error kind={} msg={msg:?}", error_kind(&e));
            ExitCode::from(2)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cucumis::dataset::Split;
use cucumis::pipeline::{self, RunConfig, RunDirs};
use cucumis::Error;

/// Cucumber disease classification: dataset fixture, augmentation,
/// training, evaluation and field survey mapping.
#[derive(Parser)]
#[command(name = "cucumis", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic eight-class image corpus.
    Fixture(Common),
    /// Ingest, expand five-fold and split the dataset.
    Augment(Common),
    /// Train the network and save the best checkpoint.
    Train(Common),
    /// Evaluate the checkpoint on the test split.
    Eval(Common),
    /// Classify a field mosaic tile by tile and write the disease map.
    Survey(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; unspecified fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: runs/<config stem>, or runs/default).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<(RunConfig, RunDirs), Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| default_out(self.config.as_deref()));
        Ok((cfg, RunDirs::new(out)))
    }
}

fn default_out(config: Option<&Path>) -> PathBuf {
    let stem = config
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "default".into());
    Path::new("runs").join(stem)
}

enum Stage {
    Fixture,
    Augment,
    Train,
    Eval,
    Survey,
}

fn split(command: Command) -> (Stage, Common) {
    match command {
        Command::Fixture(c) => (Stage::Fixture, c),
        Command::Augment(c) => (Stage::Augment, c),
        Command::Train(c) => (Stage::Train, c),
        Command::Eval(c) => (Stage::Eval, c),
        Command::Survey(c) => (Stage::Survey, c),
    }
}

fn run(stage: Stage, cfg: &RunConfig, dirs: &RunDirs) -> Result<(), Error> {
    match stage {
        Stage::Fixture => {
            let corpus = pipeline::cmd_fixture(cfg, dirs)?;
            println!(
                "fixture: {} images in {}",
                corpus.len(),
                dirs.fixture().display()
            );
        }
        Stage::Augment => {
            let corpus = pipeline::cmd_augment(cfg, dirs)?;
            let count = |s| {
                corpus
                    .manifest
                    .records
                    .iter()
                    .filter(|r| r.split == Some(s))
                    .count()
            };
            println!(
                "augment: {} images (train {}, val {}, test {}) in {}",
                corpus.len(),
                count(Split::Train),
                count(Split::Val),
                count(Split::Test),
                dirs.augmented().display()
            );
        }
        Stage::Train => {
            let summary = pipeline::cmd_train(cfg, dirs)?;
            for r in &summary.records {
                println!(
                    "epoch {:>3}  loss {:.4}  acc {:.4}  val_acc {}",
                    r.epoch,
                    r.train_loss,
                    r.train_accuracy,
                    r.val_accuracy.map_or("-".into(), |a| format!("{a:.4}"))
                );
            }
            println!(
                "train: best epoch {}, checkpoint {}",
                summary.best_epoch,
                dirs.checkpoint().display()
            );
        }
        Stage::Eval => {
            let summary = pipeline::cmd_eval(cfg, dirs)?;
            print!("{}", summary.table);
        }
        Stage::Survey => {
            let summary = pipeline::cmd_survey(cfg, dirs)?;
            let r = &summary.report;
            println!(
                "survey: {}x{} tiles, healthy {:.3}, diseased {:.3}",
                r.grid_rows, r.grid_cols, r.healthy_fraction, r.diseased_fraction
            );
            if let Some(acc) = summary.map_accuracy() {
                println!("survey: tile agreement with known labels {acc:.3}");
            }
            println!("survey: outputs in {}", dirs.survey().display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (stage, common) = split(Cli::parse().command);
    let (cfg, dirs) = match common.resolve() {
        Ok(resolved) => resolved,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(stage, &cfg, &dirs) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

//! End-to-end run configuration and the five pipeline stages behind the CLI:
//! `fixture`, `augment`, `train`, `eval`, `survey`.
//!
//! Every stage reads and writes inside one output directory:
//!
//! ```text
//! <out>/config.json                 resolved run configuration
//! <out>/fixture/<class>/<id>.ppm    generated originals (+ manifest.jsonl)
//! <out>/augmented/...               augmented, split-tagged corpus
//! <out>/model/checkpoint.bin        trained network
//! <out>/model/train_log.jsonl       one TrainRecord per epoch
//! <out>/eval/report.json|.txt       classification report
//! <out>/survey/{mosaic,map,health_map}.ppm, survey.json
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{augment_dataset, AugmentationSpec};
use crate::class::ClassId;
use crate::dataset::{
    generate_fixture, image_io, ingest, stratified_split, Corpus, Split, SplitFractions,
};
use crate::error::{Error, Result};
use crate::hyperspectral::{CalibrationProfile, DataCube};
use crate::metrics::{render_report, ConfusionMatrix, ReportFile};
use crate::nn::{
    build_micro_vgg, checkpoint, evaluate, train, HyperParams, Network, NetworkConfig,
};
use crate::survey::{
    mosaic_from_tiles, plan_survey, render_map, run_survey, FieldMosaic, SurveyReport,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Class-per-directory image tree; when absent the synthetic fixture is used.
    pub root: Option<PathBuf>,
    pub fixture_per_class: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            root: None,
            fixture_per_class: 160,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub conv_blocks: Vec<Vec<usize>>,
    pub dense: Vec<usize>,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        let vgg = NetworkConfig::default();
        Self {
            conv_blocks: vgg.conv_blocks,
            dense: vgg.dense,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub patience: Option<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let hp = HyperParams::default();
        Self {
            epochs: hp.epochs,
            batch_size: hp.batch_size,
            learning_rate: hp.learning_rate,
            momentum: hp.momentum,
            patience: hp.patience,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurveyConfig {
    pub stride: usize,
    /// PNG/PPM field image; takes precedence over `cube`.
    pub mosaic: Option<PathBuf>,
    /// Hyperspectral cube file, calibrated with `calibration` (identity if absent).
    pub cube: Option<PathBuf>,
    pub calibration: Option<CalibrationProfile>,
    /// Tiles per side of the mosaic assembled from test images when neither
    /// `mosaic` nor `cube` is given.
    pub grid: usize,
    pub ground_resolution_m: f64,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        Self {
            stride: 50,
            mosaic: None,
            cube: None,
            calibration: None,
            grid: 4,
            ground_resolution_m: 0.01,
        }
    }
}

/// Complete, serializable description of a run. Stage seeds derive from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct RunConfig {
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub split: SplitFractions,
    pub network: LayoutConfig,
    pub training: TrainingConfig,
    pub survey: SurveyConfig,
    pub output_dir: Option<PathBuf>,
}

/// Offsets separating the per-stage random streams.
mod stage {
    pub const FIXTURE: u64 = 0;
    pub const AUGMENT: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const INIT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.split
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.network_config().validate_vgg16()?;
        if self.dataset.fixture_per_class == 0 {
            return Err(Error::Config("fixture_per_class must be at least 1".into()));
        }
        if self.training.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(1..=crate::survey::TILE).contains(&self.survey.stride) {
            return Err(Error::Config(format!(
                "survey stride {} outside 1..=50",
                self.survey.stride
            )));
        }
        if self.survey.grid == 0 {
            return Err(Error::Config("survey grid must be positive".into()));
        }
        Ok(())
    }

    fn stage_seed(&self, stage: u64) -> u64 {
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(stage)
    }

    pub fn network_config(&self) -> NetworkConfig {
        NetworkConfig {
            conv_blocks: self.network.conv_blocks.clone(),
            dense: self.network.dense.clone(),
            seed: self.stage_seed(stage::INIT),
            ..NetworkConfig::default()
        }
    }

    pub fn hyper_params(&self) -> HyperParams {
        HyperParams {
            epochs: self.training.epochs,
            batch_size: self.training.batch_size,
            learning_rate: self.training.learning_rate,
            momentum: self.training.momentum,
            patience: self.training.patience,
            seed: self.stage_seed(stage::SHUFFLE),
        }
    }

    pub fn augmentation(&self) -> AugmentationSpec {
        AugmentationSpec {
            seed: self.stage_seed(stage::AUGMENT),
        }
    }
}

/// Resolved locations for one run.
#[derive(Clone, Debug)]
pub struct RunDirs {
    pub root: PathBuf,
}

impl RunDirs {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn fixture(&self) -> PathBuf {
        self.root.join("fixture")
    }
    pub fn augmented(&self) -> PathBuf {
        self.root.join("augmented")
    }
    pub fn model(&self) -> PathBuf {
        self.root.join("model")
    }
    pub fn checkpoint(&self) -> PathBuf {
        self.model().join("checkpoint.bin")
    }
    pub fn eval(&self) -> PathBuf {
        self.root.join("eval")
    }
    pub fn survey(&self) -> PathBuf {
        self.root.join("survey")
    }
}

fn mkdir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Records the resolved configuration alongside the run's outputs.
pub fn persist_config(cfg: &RunConfig, dirs: &RunDirs) -> Result<()> {
    mkdir(&dirs.root)?;
    write(&dirs.root.join("config.json"), cfg.to_json())
}

/// Generates the synthetic corpus into `<out>/fixture`.
pub fn cmd_fixture(cfg: &RunConfig, dirs: &RunDirs) -> Result<Corpus<f64>> {
    persist_config(cfg, dirs)?;
    let mut corpus = generate_fixture(
        cfg.dataset.fixture_per_class,
        cfg.stage_seed(stage::FIXTURE),
    );
    let dir = dirs.fixture();
    mkdir(&dir)?;
    corpus.write(&dir)?;
    log::info!("wrote {} fixture images to {}", corpus.len(), dir.display());
    Ok(corpus)
}

/// Ingests the dataset root (or the generated fixture), expands it five-fold,
/// assigns stratified splits, and writes `<out>/augmented`.
pub fn cmd_augment(cfg: &RunConfig, dirs: &RunDirs) -> Result<Corpus<f64>> {
    persist_config(cfg, dirs)?;
    let root = cfg.dataset.root.clone().unwrap_or_else(|| dirs.fixture());
    if !root.is_dir() {
        return Err(Error::Input(format!(
            "dataset root {} does not exist (run `fixture` first or set dataset.root)",
            root.display()
        )));
    }
    let ingested = ingest(&root)?;
    log::info!("{}", ingested.summary());
    let mut corpus = augment_dataset(&ingested.corpus, &cfg.augmentation())?;
    stratified_split(
        &mut corpus.manifest,
        cfg.split,
        cfg.stage_seed(stage::SPLIT),
    )?;
    let dir = dirs.augmented();
    mkdir(&dir)?;
    corpus.write(&dir)?;
    log::info!(
        "wrote {} augmented images to {}",
        corpus.len(),
        dir.display()
    );
    Ok(corpus)
}

fn load_augmented(dirs: &RunDirs) -> Result<Corpus<f64>> {
    let manifest = dirs.augmented().join("manifest.jsonl");
    if !manifest.is_file() {
        return Err(Error::Input(format!(
            "{} not found (run `augment` first)",
            manifest.display()
        )));
    }
    Corpus::read(&manifest)
}

fn load_network(dirs: &RunDirs) -> Result<Network<f64>> {
    let path = dirs.checkpoint();
    if !path.is_file() {
        return Err(Error::Input(format!(
            "{} not found (run `train` first)",
            path.display()
        )));
    }
    checkpoint::load(&path)
}

pub struct TrainSummary {
    pub network: Network<f64>,
    pub records: Vec<crate::nn::TrainRecord>,
    pub best_epoch: usize,
}

/// Trains on the train split, selecting by validation accuracy, and writes
/// the checkpoint and per-epoch log.
pub fn cmd_train(cfg: &RunConfig, dirs: &RunDirs) -> Result<TrainSummary> {
    persist_config(cfg, dirs)?;
    let corpus = load_augmented(dirs)?;
    let train_set = corpus.labeled(Split::Train);
    let val_set = corpus.labeled(Split::Val);
    let network = build_micro_vgg::<f64>(&cfg.network_config())?;
    let trained = train(network, &train_set, &val_set, &cfg.hyper_params())?;
    let dir = dirs.model();
    mkdir(&dir)?;
    checkpoint::save(&trained.network, &dirs.checkpoint())?;
    let log: String = trained
        .records
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect();
    write(&dir.join("train_log.jsonl"), log)?;
    Ok(TrainSummary {
        network: trained.network,
        records: trained.records,
        best_epoch: trained.best_epoch,
    })
}

pub struct EvalSummary {
    pub matrix: ConfusionMatrix,
    pub file: ReportFile,
    pub table: String,
}

/// Evaluates the checkpoint on the test split and writes the report files.
pub fn cmd_eval(cfg: &RunConfig, dirs: &RunDirs) -> Result<EvalSummary> {
    persist_config(cfg, dirs)?;
    let corpus = load_augmented(dirs)?;
    let network = load_network(dirs)?;
    let test = corpus.labeled(Split::Test);
    if test.is_empty() {
        return Err(Error::Input("test split is empty".into()));
    }
    let ev = evaluate(&network, &test)?;
    let pairs = test
        .iter()
        .zip(&ev.predictions)
        .map(|(s, &p)| Ok((s.label, ClassId::new(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let matrix = ConfusionMatrix::accumulate(pairs);
    let report = matrix.report()?;
    let table = render_report(&report);
    let file = ReportFile::new(report, &matrix);
    let dir = dirs.eval();
    mkdir(&dir)?;
    write(&dir.join("report.json"), file.to_json())?;
    write(&dir.join("report.txt"), &table)?;
    Ok(EvalSummary {
        matrix,
        file,
        table,
    })
}

pub struct SurveySummary {
    pub report: SurveyReport,
    /// Known tile labels when the mosaic was assembled from test images.
    pub truth: Option<Vec<ClassId>>,
}

impl SurveySummary {
    /// Share of tiles whose mapped class matches the known label.
    pub fn map_accuracy(&self) -> Option<f64> {
        let truth = self.truth.as_ref()?;
        let hits = self
            .report
            .tiles
            .iter()
            .filter(|t| truth[t.row * self.report.grid_cols + t.col] == t.class)
            .count();
        Some(hits as f64 / truth.len() as f64)
    }
}

fn build_mosaic(
    cfg: &RunConfig,
    dirs: &RunDirs,
) -> Result<(FieldMosaic<f64>, Option<Vec<ClassId>>)> {
    let res = cfg.survey.ground_resolution_m;
    if let Some(path) = &cfg.survey.mosaic {
        return Ok((FieldMosaic::new(image_io::read_image(path)?, res)?, None));
    }
    if let Some(path) = &cfg.survey.cube {
        let cube = DataCube::<f64>::read(path)?;
        let profile = cfg
            .survey
            .calibration
            .clone()
            .unwrap_or_else(|| CalibrationProfile::identity(cube.bands()));
        return Ok((FieldMosaic::from_cube(&cube, &profile, res)?, None));
    }
    let corpus = load_augmented(dirs)?;
    let test = corpus.labeled(Split::Test);
    if test.is_empty() {
        return Err(Error::Input(
            "no test images to assemble a mosaic from".into(),
        ));
    }
    let n = cfg.survey.grid;
    let picks: Vec<_> = (0..n * n).map(|k| &test[k % test.len()]).collect();
    let tiles: Vec<_> = picks.iter().map(|s| s.image.clone()).collect();
    let truth = picks.iter().map(|s| s.label).collect();
    let image = mosaic_from_tiles(&tiles, n, n)?;
    Ok((FieldMosaic::new(image, res)?, Some(truth)))
}

/// Flies the serpentine survey over the configured mosaic and writes the
/// class map, the healthy/diseased map, and the JSON report.
pub fn cmd_survey(cfg: &RunConfig, dirs: &RunDirs) -> Result<SurveySummary> {
    persist_config(cfg, dirs)?;
    let network = load_network(dirs)?;
    let (mosaic, truth) = build_mosaic(cfg, dirs)?;
    let plan = plan_survey(&mosaic, cfg.survey.stride)?;
    let map = run_survey(&mosaic, &plan, &network)?;
    let (raster, report) = render_map(&map);
    let dir = dirs.survey();
    mkdir(&dir)?;
    image_io::write_ppm(&dir.join("mosaic.ppm"), mosaic.image())?;
    raster.write(&dir.join("map.ppm"))?;
    map.binary_raster().write(&dir.join("health_map.ppm"))?;
    write(&dir.join("survey.json"), report.to_json())?;
    Ok(SurveySummary { report, truth })
}

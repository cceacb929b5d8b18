use cucumis::dataset::{Corpus, Split};
use cucumis::pipeline::{
    cmd_augment, cmd_eval, cmd_fixture, cmd_survey, cmd_train, RunConfig, RunDirs,
};
use cucumis::Error;

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::from_json(
        r#"{"seed": 3, "dataset": {"fixture_per_class": 5}, "training": {"epochs": 2}}"#,
    )
    .unwrap();
    cfg.survey.grid = 2;
    cfg
}

#[test]
fn stages_compose_and_persist_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let dirs = RunDirs::new(dir.path());
    let cfg = small_config();

    let fixture = cmd_fixture(&cfg, &dirs).unwrap();
    assert_eq!(fixture.len(), 40);
    let augmented = cmd_augment(&cfg, &dirs).unwrap();
    assert_eq!(augmented.len(), 200);
    let on_disk = Corpus::<f64>::read(&dirs.augmented().join("manifest.jsonl")).unwrap();
    assert_eq!(on_disk, augmented);
    let per_split: Vec<usize> = Split::ALL
        .iter()
        .map(|&s| on_disk.labeled(s).len())
        .collect();
    assert_eq!(per_split, [120, 40, 40]);

    let trained = cmd_train(&cfg, &dirs).unwrap();
    assert_eq!(trained.records.len(), 2);
    let log = std::fs::read_to_string(dirs.model().join("train_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2);

    let eval = cmd_eval(&cfg, &dirs).unwrap();
    assert_eq!(eval.matrix.total(), 40);
    assert!(eval.table.contains("Weighted Avg"));
    assert!(dirs.eval().join("report.json").is_file());

    let survey = cmd_survey(&cfg, &dirs).unwrap();
    assert_eq!((survey.report.grid_rows, survey.report.grid_cols), (2, 2));
    assert!(survey.map_accuracy().is_some());
    for name in ["mosaic.ppm", "map.ppm", "health_map.ppm", "survey.json"] {
        assert!(dirs.survey().join(name).is_file(), "{name}");
    }

    let saved = RunConfig::load(&dir.path().join("config.json")).unwrap();
    assert_eq!(saved, cfg);
}

#[test]
fn stages_report_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let dirs = RunDirs::new(dir.path());
    let cfg = small_config();
    assert!(matches!(cmd_augment(&cfg, &dirs), Err(Error::Input(_))));
    assert!(matches!(cmd_train(&cfg, &dirs), Err(Error::Input(_))));
    assert!(matches!(cmd_eval(&cfg, &dirs), Err(Error::Input(_))));
    assert!(matches!(cmd_survey(&cfg, &dirs), Err(Error::Input(_))));
}

#[test]
fn survey_from_cube_file() {
    use cucumis::hyperspectral::{even_bands, synthesize_cube};
    use cucumis::survey::mosaic_from_tiles;

    let dir = tempfile::tempdir().unwrap();
    let dirs = RunDirs::new(dir.path().join("run"));
    let mut cfg = small_config();
    cmd_fixture(&cfg, &dirs).unwrap();
    cmd_augment(&cfg, &dirs).unwrap();
    cfg.training.epochs = 1;
    cmd_train(&cfg, &dirs).unwrap();

    let fx = cucumis::dataset::generate_fixture(1, 4);
    let scene = mosaic_from_tiles(&fx.images[..6], 2, 3).unwrap();
    let cube = synthesize_cube(&scene, &even_bands(450.0, 900.0, 10), 0).unwrap();
    let path = dir.path().join("field.cube");
    cube.write(&path).unwrap();
    cfg.survey.cube = Some(path);
    let survey = cmd_survey(&cfg, &dirs).unwrap();
    assert_eq!((survey.report.grid_rows, survey.report.grid_cols), (2, 3));
    assert!(survey.map_accuracy().is_none());
}

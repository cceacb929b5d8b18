use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use cucumis::dataset::image_io::{write_image, Rgb8};
use cucumis::dataset::{
    generate_fixture, ingest, resize_bilinear, stratified_split, Corpus, DatasetManifest,
    ManifestRecord, Provenance, Split, SplitFractions,
};
use cucumis::tensor::Tensor;
use cucumis::{ClassId, Error, NUM_CLASSES};
use proptest::prelude::*;

/// Manifest of `originals` groups per class, each an original plus `variants`.
fn grouped_manifest(originals: usize, variants: usize) -> DatasetManifest {
    let mut records = Vec::new();
    for class in ClassId::all() {
        for o in 0..originals {
            let original = format!("{}-{o:04}", class.dir_name());
            for v in 0..=variants {
                let id = if v == 0 {
                    original.clone()
                } else {
                    format!("{original}__v{v}")
                };
                records.push(ManifestRecord {
                    path: format!("{}/{id}.ppm", class.dir_name()),
                    id,
                    class,
                    split: None,
                    provenance: Provenance::original(&original),
                });
            }
        }
    }
    DatasetManifest { records }
}

fn per_class_split_counts(m: &DatasetManifest) -> BTreeMap<(usize, Split), usize> {
    let mut counts = BTreeMap::new();
    for r in &m.records {
        *counts
            .entry((r.class.index(), r.split.unwrap()))
            .or_default() += 1;
    }
    counts
}

#[test]
fn augmented_sized_corpus_splits_560_120_120() {
    let mut m = grouped_manifest(160, 4);
    assert_eq!(m.len(), 6400);
    stratified_split(&mut m, SplitFractions::default(), 7).unwrap();
    let counts = per_class_split_counts(&m);
    for k in 0..NUM_CLASSES {
        assert_eq!(counts[&(k, Split::Train)], 560);
        assert_eq!(counts[&(k, Split::Val)], 120);
        assert_eq!(counts[&(k, Split::Test)], 120);
    }
}

#[test]
fn variants_follow_their_original() {
    let mut m = grouped_manifest(13, 4);
    stratified_split(&mut m, SplitFractions::default(), 8).unwrap();
    let mut by_original: BTreeMap<&str, BTreeSet<Split>> = BTreeMap::new();
    for r in &m.records {
        by_original
            .entry(&r.provenance.original_id)
            .or_default()
            .insert(r.split.unwrap());
    }
    assert!(by_original.values().all(|s| s.len() == 1));
}

#[test]
fn split_is_deterministic_and_seed_dependent() {
    let run = |seed| {
        let mut m = grouped_manifest(20, 1);
        stratified_split(&mut m, SplitFractions::default(), seed).unwrap();
        m.records
            .into_iter()
            .map(|r| r.split.unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(run(1), run(1));
    assert_ne!(run(1), run(2));
}

#[test]
fn all_train_fraction() {
    let mut m = grouped_manifest(1, 0);
    let f = SplitFractions {
        train: 1.0,
        val: 0.0,
        test: 0.0,
    };
    stratified_split(&mut m, f, 0).unwrap();
    assert!(m.records.iter().all(|r| r.split == Some(Split::Train)));
}

#[test]
fn split_rejects_small_classes_and_bad_fractions() {
    let mut m = grouped_manifest(2, 4);
    assert!(matches!(
        stratified_split(&mut m, SplitFractions::default(), 0),
        Err(Error::Input(_))
    ));
    let bad = SplitFractions {
        train: 0.5,
        val: 0.3,
        test: 0.3,
    };
    assert!(stratified_split(&mut grouped_manifest(5, 0), bad, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn split_is_a_stratified_partition(originals in 3usize..40, variants in 0usize..5, seed in any::<u64>()) {
        let mut m = grouped_manifest(originals, variants);
        stratified_split(&mut m, SplitFractions::default(), seed).unwrap();
        let counts = per_class_split_counts(&m);
        let group = variants + 1;
        for k in 0..NUM_CLASSES {
            let mut total = 0;
            for (split, frac) in Split::ALL.into_iter().zip([0.70, 0.15, 0.15]) {
                let n = counts.get(&(k, split)).copied().unwrap_or(0);
                prop_assert_eq!(n % group, 0);
                let groups = (n / group) as f64;
                prop_assert!((groups - frac * originals as f64).abs() <= 1.0);
                total += n;
            }
            prop_assert_eq!(total, originals * group);
        }
    }
}

#[test]
fn fixture_counts_and_determinism() {
    let a = generate_fixture(20, 3);
    assert_eq!(a.len(), 160);
    assert_eq!(a.manifest.class_counts(), [20; NUM_CLASSES]);
    assert_eq!(a, generate_fixture(20, 3));
    assert_ne!(a.images, generate_fixture(20, 4).images);
    let big = generate_fixture(160, 0);
    assert_eq!(big.len(), 1280);
    assert_eq!(big.manifest.class_counts(), [160; NUM_CLASSES]);
}

#[test]
fn fixture_class_means_are_distinct() {
    let c = generate_fixture(10, 5);
    let mut means = vec![vec![0.0; 3 * 50 * 50]; NUM_CLASSES];
    for (rec, img) in c.manifest.records.iter().zip(&c.images) {
        for (m, v) in means[rec.class.index()].iter_mut().zip(img.data()) {
            *m += v / 10.0;
        }
    }
    for a in 0..NUM_CLASSES {
        for b in a + 1..NUM_CLASSES {
            let d: f64 = means[a]
                .iter()
                .zip(&means[b])
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(d > 1.0, "classes {a} and {b} too close: {d}");
        }
    }
}

#[test]
fn fixture_ingest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut fixture = generate_fixture(3, 1);
    fixture.write(dir.path()).unwrap();
    let ingested = ingest(dir.path()).unwrap();
    assert!(ingested.failures.is_empty());
    let by_id = |c: &Corpus<f64>| -> BTreeMap<String, (ClassId, Tensor<f64>)> {
        c.manifest
            .records
            .iter()
            .zip(&c.images)
            .map(|(r, i)| (r.id.clone(), (r.class, i.clone())))
            .collect()
    };
    let (got, want) = (by_id(&ingested.corpus), by_id(&fixture));
    assert_eq!(got.len(), want.len());
    assert!(
        got == want,
        "ingested fixture differs from the generated one"
    );

    let out = tempfile::tempdir().unwrap();
    let mut corpus = ingested.corpus.clone();
    corpus.write(out.path()).unwrap();
    let back = Corpus::<f64>::read(&out.path().join("manifest.jsonl")).unwrap();
    assert_eq!(back, corpus);
    assert_eq!(back.manifest, ingested.corpus.manifest);
}

fn write_rgb(path: &Path, w: usize, h: usize, f: impl Fn(usize) -> f64) {
    let img = Tensor::from_fn(&[3, h, w], f).unwrap();
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    write_image(path, &img).unwrap();
}

#[test]
fn ingest_layouts_formats_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_rgb(&root.join("Downy Mildew/a.png"), 80, 60, |i| {
        (i % 7) as f64 / 7.0
    });
    write_rgb(&root.join("fresh_cucumber/b.ppm"), 50, 50, |_| 0.5);
    write_rgb(&root.join("BELLY-ROT/c.ppm"), 20, 30, |_| 1.0);
    std::fs::write(root.join("BELLY-ROT/broken.ppm"), b"P6\n9 9\n255\nxx").unwrap();
    std::fs::write(root.join("BELLY-ROT/.hidden"), b"junk").unwrap();
    std::fs::write(root.join("README.txt"), b"ignored").unwrap();
    // grayscale PGM becomes three identical channels
    std::fs::write(
        root.join("fresh_cucumber/g.pgm"),
        [b"P5\n2 2\n255\n".as_slice(), &[0, 255, 255, 0]].concat(),
    )
    .unwrap();

    let got = ingest(root).unwrap();
    assert_eq!(got.failures.len(), 1);
    assert!(got.failures[0].path.ends_with("broken.ppm"));
    assert!(got.summary().contains("1 failed"));
    let labels: Vec<_> = got
        .corpus
        .manifest
        .records
        .iter()
        .map(|r| (r.id.as_str(), r.class.index()))
        .collect();
    assert_eq!(
        labels,
        [
            ("belly-rot-c", 2),
            ("downy_mildew-a", 3),
            ("fresh_cucumber-b", 7),
            ("fresh_cucumber-g", 7)
        ]
    );
    for img in &got.corpus.images {
        assert_eq!(img.shape(), &[3, 50, 50]);
        assert!(img.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
    assert!(got.corpus.images[0].data().iter().all(|&v| v == 1.0));
    assert!(got.corpus.images[2]
        .data()
        .iter()
        .all(|&v| v == 128.0 / 255.0));
    let g = &got.corpus.images[3];
    assert_eq!(g.data()[..2500], g.data()[2500..5000]);
}

#[test]
fn unknown_class_directory_is_a_labeling_error() {
    let dir = tempfile::tempdir().unwrap();
    write_rgb(&dir.path().join("Powdery Mildew/x.ppm"), 4, 4, |_| 0.2);
    assert!(matches!(ingest(dir.path()), Err(Error::Labeling(_))));
}

#[test]
fn resize_identity_and_constant() {
    let img = Tensor::from_fn(&[3, 50, 50], |i| (i as f64 * 0.01).sin().abs()).unwrap();
    assert_eq!(resize_bilinear(&img, 50, 50).unwrap(), img);
    let flat = Tensor::full(&[3, 2, 2], 0.625).unwrap();
    let small = resize_bilinear(&flat, 1, 1).unwrap();
    assert!(small.data().iter().all(|&v| v == 0.625));
}

#[test]
fn ppm_and_png_round_trip_8bit() {
    let dir = tempfile::tempdir().unwrap();
    let img = Tensor::from_fn(&[3, 5, 7], |i| (i % 256) as f64 / 255.0).unwrap();
    for name in ["x.ppm", "x.png"] {
        let path = dir.path().join(name);
        write_image(&path, &img).unwrap();
        let back = cucumis::dataset::image_io::read_image(&path).unwrap();
        assert_eq!(back, img);
    }
    let rgb = Rgb8::from_tensor(&img).unwrap();
    assert!(rgb.encode_ppm().starts_with(b"P6\n7 5\n255\n"));
}

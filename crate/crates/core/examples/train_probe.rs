//! Trains the default micro-VGG16 on an augmented synthetic fixture and prints
//! the per-epoch log. Usage: `train_probe [per_class] [epochs] [f32|f64]`.

use std::time::Instant;

use cucumis::augment::{augment_dataset, AugmentationSpec};
use cucumis::dataset::{generate_fixture, stratified_split, Split, SplitFractions};
use cucumis::nn::{build_micro_vgg, evaluate, train_with, HyperParams, NetworkConfig};
use cucumis::Scalar;

fn run<T: Scalar>(per_class: usize, epochs: usize) {
    let fixture = generate_fixture(per_class, 0);
    let mut corpus = augment_dataset(&fixture, &AugmentationSpec { seed: 1 }).unwrap();
    stratified_split(&mut corpus.manifest, SplitFractions::default(), 2).unwrap();
    let corpus = corpus.cast::<T>();
    let (tr, va, te) = (
        corpus.labeled(Split::Train),
        corpus.labeled(Split::Val),
        corpus.labeled(Split::Test),
    );
    println!("train {} val {} test {}", tr.len(), va.len(), te.len());
    let net = build_micro_vgg::<T>(&NetworkConfig::micro_vgg16(3)).unwrap();
    let hp = HyperParams {
        epochs,
        seed: 4,
        ..HyperParams::default()
    };
    let start = Instant::now();
    let trained = train_with(net, &tr, &va, &hp, |r, _| {
        println!("{:?} t={:.1}s", r, start.elapsed().as_secs_f64());
        std::ops::ControlFlow::Continue(())
    })
    .unwrap();
    let ev = evaluate(&trained.network, &te).unwrap();
    println!(
        "best epoch {} test acc {:.4}",
        trained.best_epoch, ev.accuracy
    );
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let per_class = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let epochs = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    match args.get(3).map(String::as_str) {
        Some("f32") => run::<f32>(per_class, epochs),
        _ => run::<f64>(per_class, epochs),
    }
}

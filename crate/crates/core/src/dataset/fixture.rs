use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::manifest::{ManifestRecord, Provenance};
use super::{quantize, Corpus, IMAGE_SIZE};
use crate::class::{ClassId, NUM_CLASSES};
use crate::tensor::Tensor;

/// HSV (hue in degrees) to RGB, all components in `[0, 1]`.
fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = h.rem_euclid(360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

fn render(class: ClassId, rng: &mut ChaCha8Rng, noise: &Normal<f64>) -> Tensor<f64> {
    let k = class.index() as f64;
    let n = IMAGE_SIZE;
    let background: [f64; 3] = [0.35, 0.40, 0.30].map(|c| c + rng.gen_range(-0.05..0.05));
    let color = hsv_to_rgb(
        k * 45.0 + rng.gen_range(-5.0..5.0),
        rng.gen_range(0.75..0.95),
        0.9,
    );
    let centre = (n as f64 - 1.0) / 2.0;
    let angle = (k * 45.0).to_radians();
    let cx = centre + 10.0 * angle.cos() + rng.gen_range(-3.0..3.0);
    let cy = centre + 10.0 * angle.sin() + rng.gen_range(-3.0..3.0);
    let sigma: f64 = rng.gen_range(7.0..9.0);
    let mut img = Tensor::zeros(&[3, n, n]).expect("positive extents");
    let data = img.data_mut();
    for y in 0..n {
        for x in 0..n {
            let r2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            let alpha = 0.9 * (-r2 / (2.0 * sigma * sigma)).exp();
            for ch in 0..3 {
                let v = background[ch] * (1.0 - alpha) + color[ch] * alpha + noise.sample(rng);
                data[(ch * n + y) * n + x] = quantize(v);
            }
        }
    }
    img
}

/// Synthetic stand-in for the photograph corpus: `per_class` 50x50 images for
/// each of the eight classes. Each class is a Gaussian colour blob with its
/// own hue and anchor position on a neutral background, plus seeded pixel
/// noise. Images are generated class by class from one seeded stream.
pub fn generate_fixture(per_class: usize, seed: u64) -> Corpus<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.03).expect("positive std");
    let mut corpus = Corpus::default();
    for class in ClassId::all() {
        for i in 0..per_class {
            let id = format!("{}-{i:04}", class.dir_name());
            let img = render(class, &mut rng, &noise);
            corpus.push(
                ManifestRecord {
                    provenance: Provenance::original(&id),
                    path: format!("{}/{id}.ppm", class.dir_name()),
                    id,
                    class,
                    split: None,
                },
                img,
            );
        }
    }
    debug_assert_eq!(corpus.len(), per_class * NUM_CLASSES);
    corpus
}

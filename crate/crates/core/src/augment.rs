//! Label-preserving augmentation: every original yields itself plus four
//! variants (horizontal flip, vertical flip, small rotation, brightness scale).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{quantize_image, Corpus, ManifestRecord, Provenance};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Samples produced per original (the original plus four variants).
pub const EXPANSION: usize = 5;

pub const MAX_ROTATION_DEG: f64 = 15.0;
pub const BRIGHTNESS_RANGE: (f64, f64) = (0.8, 1.2);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    HorizontalFlip,
    VerticalFlip,
    Rotation,
    Brightness,
}

impl Transform {
    pub const ALL: [Transform; 4] = [
        Transform::HorizontalFlip,
        Transform::VerticalFlip,
        Transform::Rotation,
        Transform::Brightness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Transform::HorizontalFlip => "hflip",
            Transform::VerticalFlip => "vflip",
            Transform::Rotation => "rotate",
            Transform::Brightness => "brightness",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub seed: u64,
}

/// Per-original random draws.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentParams {
    pub angle_deg: f64,
    pub brightness: f64,
}

impl AugmentParams {
    pub fn sample(rng: &mut impl Rng) -> Self {
        Self {
            angle_deg: rng.gen_range(-MAX_ROTATION_DEG..=MAX_ROTATION_DEG),
            brightness: rng.gen_range(BRIGHTNESS_RANGE.0..=BRIGHTNESS_RANGE.1),
        }
    }

    fn params_for(&self, t: Transform) -> BTreeMap<String, f64> {
        match t {
            Transform::Rotation => BTreeMap::from([("angle_deg".to_string(), self.angle_deg)]),
            Transform::Brightness => BTreeMap::from([("factor".to_string(), self.brightness)]),
            _ => BTreeMap::new(),
        }
    }
}

fn dims<T: Scalar>(img: &Tensor<T>) -> Result<(usize, usize, usize)> {
    img.expect_rank(3, "augment input")?;
    Ok((img.shape()[0], img.shape()[1], img.shape()[2]))
}

pub fn flip_horizontal<T: Scalar>(img: &Tensor<T>) -> Result<Tensor<T>> {
    let (c, h, w) = dims(img)?;
    Tensor::from_fn(&[c, h, w], |i| {
        let x = i % w;
        img.data()[i - x + (w - 1 - x)]
    })
}

pub fn flip_vertical<T: Scalar>(img: &Tensor<T>) -> Result<Tensor<T>> {
    let (c, h, w) = dims(img)?;
    Tensor::from_fn(&[c, h, w], |i| {
        let (ch, y, x) = (i / (h * w), (i / w) % h, i % w);
        img.at3(ch, h - 1 - y, x)
    })
}

/// Rotates about the image centre by `angle_deg` (counter-clockwise in image
/// coordinates), sampling bilinearly; neighbours outside the image count as 0.
pub fn rotate<T: Scalar>(img: &Tensor<T>, angle_deg: f64) -> Result<Tensor<T>> {
    let (c, h, w) = dims(img)?;
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let fetch = |ch: usize, y: i64, x: i64| -> f64 {
        if y < 0 || x < 0 || y >= h as i64 || x >= w as i64 {
            0.0
        } else {
            img.at3(ch, y as usize, x as usize).as_f64()
        }
    };
    Tensor::from_fn(&[c, h, w], |i| {
        let (ch, y, x) = (i / (h * w), (i / w) % h, i % w);
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        // inverse map: rotate the output position back by -angle
        let sx = cos * dx + sin * dy + cx;
        let sy = -sin * dx + cos * dy + cy;
        let (x0, y0) = (sx.floor(), sy.floor());
        let (fx, fy) = (sx - x0, sy - y0);
        let (x0, y0) = (x0 as i64, y0 as i64);
        let v = fetch(ch, y0, x0) * (1.0 - fx) * (1.0 - fy)
            + fetch(ch, y0, x0 + 1) * fx * (1.0 - fy)
            + fetch(ch, y0 + 1, x0) * (1.0 - fx) * fy
            + fetch(ch, y0 + 1, x0 + 1) * fx * fy;
        T::of(v)
    })
}

/// Multiplies every pixel by `factor`, clamping to `[0, 1]`.
pub fn scale_brightness<T: Scalar>(img: &Tensor<T>, factor: f64) -> Tensor<T> {
    let f = T::of(factor);
    img.map(|v| (v * f).max(T::zero()).min(T::one()))
}

/// The four variants of one image, in [`Transform::ALL`] order.
pub fn augment_image<T: Scalar>(img: &Tensor<T>, params: &AugmentParams) -> Result<Vec<Tensor<T>>> {
    if let Some(v) = img.data().iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite pixel value {v}")));
    }
    Ok(vec![
        flip_horizontal(img)?,
        flip_vertical(img)?,
        rotate(img, params.angle_deg)?,
        scale_brightness(img, params.brightness),
    ])
}

/// Expands a corpus five-fold. Parameters are drawn per original in manifest
/// order from a generator seeded with `spec.seed`. The output lists each
/// original followed by its variants; variant ids are `<original>__<transform>`
/// and variant pixels are snapped to 8-bit levels. Split tags carry over.
pub fn augment_dataset<T: Scalar>(
    corpus: &Corpus<T>,
    spec: &AugmentationSpec,
) -> Result<Corpus<T>> {
    corpus.manifest.check_unique_ids()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let params: Vec<AugmentParams> = corpus
        .images
        .iter()
        .map(|_| AugmentParams::sample(&mut rng))
        .collect();
    let mut out = Corpus {
        manifest: Default::default(),
        images: Vec::with_capacity(corpus.len() * EXPANSION),
    };
    out.manifest.records.reserve(corpus.len() * EXPANSION);
    for ((rec, img), p) in corpus
        .manifest
        .records
        .iter()
        .zip(&corpus.images)
        .zip(&params)
    {
        out.push(rec.clone(), img.clone());
        for (t, variant) in Transform::ALL.into_iter().zip(augment_image(img, p)?) {
            let id = format!("{}__{}", rec.id, t.name());
            out.push(
                ManifestRecord {
                    path: String::new(),
                    class: rec.class,
                    split: rec.split,
                    provenance: Provenance {
                        original_id: rec.provenance.original_id.clone(),
                        transform: t.name().to_string(),
                        params: p.params_for(t),
                    },
                    id,
                },
                quantize_image(&variant),
            );
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_fixture;

    fn grid() -> Tensor<f64> {
        Tensor::from_vec(&[1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn horizontal_flip_reverses_rows() {
        assert_eq!(
            flip_horizontal(&grid()).unwrap().data(),
            &[2.0, 1.0, 4.0, 3.0]
        );
        assert_eq!(
            flip_vertical(&grid()).unwrap().data(),
            &[3.0, 4.0, 1.0, 2.0]
        );
    }

    #[test]
    fn flips_are_involutions() {
        let img = Tensor::<f64>::from_fn(&[3, 5, 7], |i| (i as f64 * 0.13).fract()).unwrap();
        assert_eq!(
            flip_horizontal(&flip_horizontal(&img).unwrap()).unwrap(),
            img
        );
        assert_eq!(flip_vertical(&flip_vertical(&img).unwrap()).unwrap(), img);
    }

    #[test]
    fn unit_brightness_and_zero_rotation_are_identity() {
        let img = Tensor::<f64>::from_fn(&[3, 6, 6], |i| (i % 7) as f64 / 7.0).unwrap();
        assert_eq!(scale_brightness(&img, 1.0), img);
        let r = rotate(&img, 0.0).unwrap();
        for (a, b) in r.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn brightness_inverse_recovers_without_clamping() {
        let img = Tensor::<f64>::from_fn(&[3, 4, 4], |i| 0.1 + (i % 9) as f64 * 0.08).unwrap();
        let back = scale_brightness(&scale_brightness(&img, 1.15), 1.0 / 1.15);
        for (a, b) in back.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn quarter_turn_moves_corners() {
        // 90 degrees on a square image is an exact permutation
        let img = Tensor::<f64>::from_fn(&[1, 3, 3], |i| i as f64).unwrap();
        let r = rotate(&img, 90.0).unwrap();
        let mut sorted = r.data().to_vec();
        sorted.sort_by(f64::total_cmp);
        for (a, b) in sorted.iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((r.data()[4] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_fills_corners_with_zero() {
        let img = Tensor::<f64>::full(&[1, 20, 20], 1.0).unwrap();
        let r = rotate(&img, 15.0).unwrap();
        assert_eq!(r.at3(0, 0, 0), 0.0);
        assert!((r.at3(0, 10, 10) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_pixels_rejected() {
        let mut img = Tensor::<f64>::zeros(&[3, 4, 4]).unwrap();
        img.data_mut()[5] = f64::NAN;
        let p = AugmentParams {
            angle_deg: 0.0,
            brightness: 1.0,
        };
        assert!(matches!(augment_image(&img, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn eight_originals_become_forty() {
        let fx = generate_fixture(1, 5);
        let out = augment_dataset(&fx, &AugmentationSpec { seed: 9 }).unwrap();
        assert_eq!(out.len(), 40);
        assert_eq!(out.manifest.class_counts(), [5; 8]);
        out.manifest.check_unique_ids().unwrap();
        for r in &out.manifest.records {
            let orig = fx
                .manifest
                .records
                .iter()
                .find(|o| o.id == r.provenance.original_id)
                .unwrap();
            assert_eq!(orig.class, r.class);
        }
        let rot = out
            .manifest
            .records
            .iter()
            .find(|r| r.provenance.transform == "rotate")
            .unwrap();
        let a = rot.provenance.params["angle_deg"];
        assert!(a.abs() <= MAX_ROTATION_DEG);
    }

    #[test]
    fn empty_in_empty_out() {
        let out = augment_dataset(&Corpus::<f64>::default(), &AugmentationSpec::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut fx = generate_fixture(1, 5);
        fx.manifest.records[1].id = fx.manifest.records[0].id.clone();
        assert!(matches!(
            augment_dataset(&fx, &AugmentationSpec::default()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        let fx = generate_fixture(2, 1);
        let a = augment_dataset(&fx, &AugmentationSpec { seed: 4 }).unwrap();
        assert_eq!(
            a,
            augment_dataset(&fx, &AugmentationSpec { seed: 4 }).unwrap()
        );
        assert_ne!(
            a,
            augment_dataset(&fx, &AugmentationSpec { seed: 5 }).unwrap()
        );
    }
}

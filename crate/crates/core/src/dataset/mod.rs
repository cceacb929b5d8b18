//! Corpus handling: image codecs, class-per-directory ingestion, manifests,
//! stratified splitting, and the synthetic fixture generator.

mod fixture;
pub mod image_io;
mod ingest;
mod manifest;
mod resize;
mod split;

pub use fixture::generate_fixture;
pub use ingest::{ingest, IngestFailure, Ingested};
pub use manifest::{DatasetManifest, ManifestRecord, Provenance, Split};
pub use resize::resize_bilinear;
pub use split::{stratified_split, SplitFractions};

use std::path::Path;

use crate::class::ClassId;
use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Side length of every classifier input.
pub const IMAGE_SIZE: usize = 50;

/// One `[3, 50, 50]` image with its class.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledImage<T> {
    pub id: String,
    pub image: Tensor<T>,
    pub label: ClassId,
}

/// Manifest records with their decoded images, index-aligned.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus<T> {
    pub manifest: DatasetManifest,
    pub images: Vec<Tensor<T>>,
}

impl<T: Scalar> Default for Corpus<T> {
    fn default() -> Self {
        Self {
            manifest: DatasetManifest::default(),
            images: Vec::new(),
        }
    }
}

impl<T: Scalar> Corpus<T> {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn push(&mut self, record: ManifestRecord, image: Tensor<T>) {
        self.manifest.records.push(record);
        self.images.push(image);
    }

    /// Samples carrying the given split tag, in manifest order.
    pub fn labeled(&self, split: Split) -> Vec<LabeledImage<T>> {
        self.iter_labeled()
            .filter(|(r, _)| r.split == Some(split))
            .map(|(_, s)| s)
            .collect()
    }

    pub fn all_labeled(&self) -> Vec<LabeledImage<T>> {
        self.iter_labeled().map(|(_, s)| s).collect()
    }

    fn iter_labeled(&self) -> impl Iterator<Item = (&ManifestRecord, LabeledImage<T>)> {
        self.manifest
            .records
            .iter()
            .zip(&self.images)
            .map(|(r, img)| {
                (
                    r,
                    LabeledImage {
                        id: r.id.clone(),
                        image: img.clone(),
                        label: r.class,
                    },
                )
            })
    }

    pub fn cast<U: Scalar>(&self) -> Corpus<U> {
        Corpus {
            manifest: self.manifest.clone(),
            images: self.images.iter().map(Tensor::cast).collect(),
        }
    }

    /// Writes every image as binary PPM under `dir/<class>/<id>.ppm` and the
    /// manifest as `dir/manifest.jsonl` with paths relative to `dir`.
    pub fn write(&mut self, dir: &Path) -> Result<()> {
        for (rec, img) in self.manifest.records.iter_mut().zip(&self.images) {
            let rel = Path::new(&rec.class.dir_name()).join(format!("{}.ppm", rec.id));
            let full = dir.join(&rel);
            if let Some(parent) = full.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            image_io::write_ppm(&full, img)?;
            rec.path = rel.to_string_lossy().replace('\\', "/");
        }
        self.manifest.write(&dir.join("manifest.jsonl"))
    }

    /// Loads a manifest and decodes each record's image relative to the
    /// manifest's directory. Every image must decode to `[3, 50, 50]`.
    pub fn read(manifest_path: &Path) -> Result<Self> {
        let manifest = DatasetManifest::read(manifest_path)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let mut images = Vec::with_capacity(manifest.records.len());
        for rec in &manifest.records {
            let path = base.join(&rec.path);
            let img = image_io::read_image(&path)?;
            if img.shape() != [3, IMAGE_SIZE, IMAGE_SIZE] {
                return Err(shape_err!(
                    "{} decodes to {:?}, expected [3, 50, 50]",
                    path.display(),
                    img.shape()
                ));
            }
            images.push(img.cast());
        }
        Ok(Self { manifest, images })
    }
}

/// Snaps a value in `[0, 1]` to the nearest 8-bit level, so corpus images
/// survive a PPM round trip unchanged.
pub fn quantize<T: Scalar>(v: T) -> T {
    let q = (v.as_f64().clamp(0.0, 1.0) * 255.0).round() / 255.0;
    T::of(q)
}

pub fn quantize_image<T: Scalar>(img: &Tensor<T>) -> Tensor<T> {
    img.map(quantize)
}

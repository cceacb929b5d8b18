use std::path::{Path, PathBuf};

use super::image_io::read_image;
use super::manifest::{ManifestRecord, Provenance};
use super::{quantize_image, resize_bilinear, Corpus, IMAGE_SIZE};
use crate::class::ClassId;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct IngestFailure {
    pub path: PathBuf,
    pub message: String,
}

/// Result of ingesting a class-per-directory tree.
#[derive(Clone, Debug)]
pub struct Ingested {
    pub corpus: Corpus<f64>,
    /// Files that could not be decoded; ingestion continues past them.
    pub failures: Vec<IngestFailure>,
}

impl Ingested {
    pub fn summary(&self) -> String {
        let counts = self.corpus.manifest.class_counts();
        let per_class: Vec<String> = ClassId::all()
            .map(|c| format!("{}={}", c.dir_name(), counts[c.index()]))
            .collect();
        format!(
            "ingested {} images ({}), {} failed",
            self.corpus.len(),
            per_class.join(" "),
            self.failures.len()
        )
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    entries.retain(|p| {
        !p.file_name()
            .is_some_and(|n| n.to_string_lossy().starts_with('.'))
    });
    entries.sort();
    Ok(entries)
}

/// Decodes every image under `root/<class name>/`, converting to three
/// channels in `[0, 1]` and resizing to 50x50 bilinearly (then snapping to
/// 8-bit levels). Files directly under `root` are ignored.
pub fn ingest(root: &Path) -> Result<Ingested> {
    let mut corpus = Corpus::default();
    let mut failures = Vec::new();
    for dir in sorted_entries(root)? {
        if !dir.is_dir() {
            continue;
        }
        let dir_name = dir
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let class =
            ClassId::from_name(&dir_name).ok_or_else(|| Error::Labeling(dir_name.clone()))?;
        for file in sorted_entries(&dir)? {
            if !file.is_file() {
                continue;
            }
            let img =
                match read_image(&file).and_then(|t| resize_bilinear(&t, IMAGE_SIZE, IMAGE_SIZE)) {
                    Ok(img) => quantize_image(&img),
                    Err(e) => {
                        log::warn!("skipping {}: {e}", file.display());
                        failures.push(IngestFailure {
                            path: file.clone(),
                            message: e.to_string(),
                        });
                        continue;
                    }
                };
            let stem = file.file_stem().unwrap_or_default().to_string_lossy();
            let prefix = format!("{}-", dir_name.to_lowercase().replace(' ', "_"));
            let id = if stem.starts_with(&prefix) {
                stem.into_owned()
            } else {
                format!("{prefix}{stem}")
            };
            let rel = file
                .strip_prefix(root)
                .unwrap_or(&file)
                .to_string_lossy()
                .replace('\\', "/");
            corpus.push(
                ManifestRecord {
                    provenance: Provenance::original(&id),
                    id,
                    path: rel,
                    class,
                    split: None,
                },
                img,
            );
        }
    }
    corpus.manifest.check_unique_ids()?;
    Ok(Ingested { corpus, failures })
}

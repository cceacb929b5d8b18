use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, Split};
use crate::error::{Error, Result};

/// Train / validation / test proportions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitFractions {
    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.val, self.test]
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.as_array();
        if f.iter().any(|v| !v.is_finite() || *v < 0.0)
            || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::Input(format!(
                "split fractions {f:?} must be nonnegative and sum to 1"
            )));
        }
        Ok(())
    }

    /// Largest-remainder apportionment of `n` items; leftover units go to the
    /// largest fractional parts, earlier splits first on ties.
    pub fn apportion(&self, n: usize) -> [usize; 3] {
        let f = self.as_array();
        let exact: Vec<f64> = f.iter().map(|v| v * n as f64).collect();
        // tolerate representation error such as 0.7 * 160 = 111.99999999999999
        let mut counts: Vec<usize> = exact.iter().map(|e| (e + 1e-9).floor() as usize).collect();
        let mut left = n - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - counts[a] as f64;
            let rb = exact[b] - counts[b] as f64;
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            if f[i] > 0.0 {
                counts[i] += 1;
                left -= 1;
            }
        }
        [counts[0], counts[1], counts[2]]
    }
}

/// Tags every record with a split, stratified per class. Records sharing a
/// `provenance.original_id` form one group and always land in the same split,
/// so augmented variants never leak across splits. Counts are apportioned
/// over groups.
pub fn stratified_split(
    manifest: &mut DatasetManifest,
    fractions: SplitFractions,
    seed: u64,
) -> Result<()> {
    fractions.validate()?;
    manifest.check_unique_ids()?;
    let splitting = fractions.as_array().iter().filter(|v| **v > 0.0).count() > 1;
    let min_groups = if splitting { 3 } else { 1 };
    // class -> original id -> record indices, all in sorted order
    let mut groups: BTreeMap<usize, BTreeMap<&str, Vec<usize>>> = BTreeMap::new();
    for (i, r) in manifest.records.iter().enumerate() {
        groups
            .entry(r.class.index())
            .or_default()
            .entry(r.provenance.original_id.as_str())
            .or_default()
            .push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![Split::Train; manifest.records.len()];
    for (class, by_original) in &groups {
        if by_original.len() < min_groups {
            return Err(Error::Input(format!(
                "class {class} has {} originals; need at least {min_groups} to split",
                by_original.len()
            )));
        }
        let mut keys: Vec<&&str> = by_original.keys().collect();
        keys.shuffle(&mut rng);
        let counts = fractions.apportion(keys.len());
        let mut cursor = 0;
        for (split, count) in Split::ALL.into_iter().zip(counts) {
            for key in &keys[cursor..cursor + count] {
                for &i in &by_original[**key] {
                    assignment[i] = split;
                }
            }
            cursor += count;
        }
    }
    // an original filed under one class with variants under another is malformed
    let mut split_of_original: BTreeMap<&str, Split> = BTreeMap::new();
    for (r, s) in manifest.records.iter().zip(&assignment) {
        if let Some(prev) = split_of_original.insert(r.provenance.original_id.as_str(), *s) {
            if prev != *s {
                return Err(Error::Input(format!(
                    "original `{}` has records in more than one class",
                    r.provenance.original_id
                )));
            }
        }
    }
    for (r, s) in manifest.records.iter_mut().zip(assignment) {
        r.split = Some(s);
    }
    Ok(())
}

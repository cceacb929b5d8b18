//! The eight cucumber condition classes in their canonical order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_CLASSES: usize = 8;

const NAMES: [&str; NUM_CLASSES] = [
    "Anthracnose",
    "Bacterial Wilt",
    "Belly Rot",
    "Downy Mildew",
    "Pythium Fruit Rot",
    "Gummy Stem Blight",
    "Fresh Leaves",
    "Fresh Cucumber",
];

/// Class label in `0..8`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ClassId(u8);

impl ClassId {
    pub const ANTHRACNOSE: ClassId = ClassId(0);
    pub const FRESH_LEAVES: ClassId = ClassId(6);
    pub const FRESH_CUCUMBER: ClassId = ClassId(7);

    pub fn new(index: usize) -> Result<Self> {
        if index < NUM_CLASSES {
            Ok(ClassId(index as u8))
        } else {
            Err(Error::Domain(format!(
                "class id {index} outside 0..{NUM_CLASSES}"
            )))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = ClassId> {
        (0..NUM_CLASSES as u8).map(ClassId)
    }

    pub fn name(self) -> &'static str {
        NAMES[self.index()]
    }

    /// Directory-friendly form, e.g. `bacterial_wilt`.
    pub fn dir_name(self) -> String {
        self.name().to_lowercase().replace(' ', "_")
    }

    /// Case-insensitive lookup; `_` and `-` are accepted in place of spaces.
    pub fn from_name(name: &str) -> Option<Self> {
        let norm = normalize(name);
        NAMES
            .iter()
            .position(|n| normalize(n) == norm)
            .map(|i| ClassId(i as u8))
    }

    /// Fresh leaves and fresh cucumbers are the healthy classes.
    pub fn is_healthy(self) -> bool {
        self == Self::FRESH_LEAVES || self == Self::FRESH_CUCUMBER
    }
}

fn normalize(s: &str) -> String {
    s.trim()
        .chars()
        .map(|c| match c {
            '_' | '-' => ' ',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}

impl TryFrom<u8> for ClassId {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        ClassId::new(v as usize)
    }
}

impl From<ClassId> for u8 {
    fn from(c: ClassId) -> u8 {
        c.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

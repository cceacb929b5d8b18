use serde::{Deserialize, Serialize};

use crate::class::NUM_CLASSES;
use crate::error::{Error, Result};

/// Layer layout of a VGG-style network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    /// `[channels, height, width]`
    pub input: [usize; 3],
    /// Conv widths per block; every block ends in a 2x2 max pool.
    pub conv_blocks: Vec<Vec<usize>>,
    /// Fully connected widths; the last one is the class count.
    pub dense: Vec<usize>,
    pub classes: usize,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self::micro_vgg16(0)
    }
}

impl NetworkConfig {
    /// 13 conv + 3 dense layers with widths scaled for 50x50 inputs.
    pub fn micro_vgg16(seed: u64) -> Self {
        Self {
            input: [3, 50, 50],
            conv_blocks: vec![
                vec![32, 32],
                vec![64, 64],
                vec![128, 128, 128],
                vec![128, 128, 128],
                vec![128, 128, 128],
            ],
            dense: vec![256, 256, NUM_CLASSES],
            classes: NUM_CLASSES,
            seed,
        }
    }

    pub fn conv_layer_count(&self) -> usize {
        self.conv_blocks.iter().map(Vec::len).sum()
    }

    /// Spatial extents after each pooling stage, starting with the input.
    pub fn spatial_chain(&self) -> Vec<(usize, usize)> {
        let mut hw = (self.input[1], self.input[2]);
        let mut chain = vec![hw];
        for _ in &self.conv_blocks {
            hw = (hw.0 / 2, hw.1 / 2);
            chain.push(hw);
        }
        chain
    }

    /// Width of the flattened feature vector entering the first dense layer.
    pub fn flatten_features(&self) -> usize {
        let (h, w) = *self.spatial_chain().last().expect("chain is non-empty");
        let channels = self
            .conv_blocks
            .iter()
            .rev()
            .find_map(|b| b.last().copied())
            .unwrap_or(self.input[0]);
        channels * h * w
    }

    /// Structural consistency, independent of depth.
    pub fn validate(&self) -> Result<()> {
        if self.input.contains(&0) {
            return Err(Error::Config(format!(
                "input shape {:?} has a zero extent",
                self.input
            )));
        }
        if self
            .conv_blocks
            .iter()
            .any(|b| b.is_empty() || b.contains(&0))
        {
            return Err(Error::Config(
                "conv blocks must be non-empty with positive widths".into(),
            ));
        }
        let mut hw = (self.input[1], self.input[2]);
        for (i, _) in self.conv_blocks.iter().enumerate() {
            if hw.0 < 2 || hw.1 < 2 {
                return Err(Error::Config(format!(
                    "block {i} pools a {}x{} map; needs at least 2x2",
                    hw.0, hw.1
                )));
            }
            hw = (hw.0 / 2, hw.1 / 2);
        }
        if self.dense.is_empty() || self.dense.contains(&0) {
            return Err(Error::Config(
                "dense widths must be non-empty and positive".into(),
            ));
        }
        if self.classes == 0 || *self.dense.last().unwrap() != self.classes {
            return Err(Error::Config(format!(
                "final dense width {} must equal class count {}",
                self.dense.last().unwrap(),
                self.classes
            )));
        }
        Ok(())
    }

    /// The 16-weight-layer layout: 13 conv, 3 dense, 8 classes.
    pub fn validate_vgg16(&self) -> Result<()> {
        self.validate()?;
        let conv = self.conv_layer_count();
        if conv != 13 || self.dense.len() != 3 {
            return Err(Error::Config(format!(
                "VGG16 layout needs 13 conv + 3 dense layers, got {conv} + {}",
                self.dense.len()
            )));
        }
        if self.classes != NUM_CLASSES {
            return Err(Error::Config(format!(
                "expected {NUM_CLASSES} classes, got {}",
                self.classes
            )));
        }
        Ok(())
    }
}

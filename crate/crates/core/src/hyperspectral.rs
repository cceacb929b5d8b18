//! Hyperspectral data cubes: per-band radiometric calibration, projection to
//! the three-channel classifier input, synthetic cubes, and the cube file
//! format.
//!
//! # Cube file layout
//!
//! All fields little-endian:
//!
//! | offset        | size        | content                                   |
//! |---------------|-------------|-------------------------------------------|
//! | 0             | 8           | magic `CUKECUBE`                          |
//! | 8             | 4           | width `W` (u32)                           |
//! | 12            | 4           | height `H` (u32)                          |
//! | 16            | 4           | band count `B` (u32)                      |
//! | 20            | 4·B         | wavelengths in nm (f32, ascending)        |
//! | 20 + 4·B      | 4·W·H·B     | raw intensities (f32), band-major: band, row, column |

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Sensor range, visible to near-infrared.
pub const MIN_WAVELENGTH_NM: f64 = 400.0;
pub const MAX_WAVELENGTH_NM: f64 = 1000.0;

/// Wavelengths sampled for the red, green and blue output channels.
pub const RGB_WAVELENGTHS_NM: [f64; 3] = [660.0, 550.0, 470.0];

const MAGIC: &[u8; 8] = b"CUKECUBE";

/// `W x H x B` block of intensities with per-band wavelengths.
#[derive(Clone, Debug, PartialEq)]
pub struct DataCube<T> {
    width: usize,
    height: usize,
    wavelengths: Vec<f64>,
    raw: Vec<T>,
    calibrated: Option<Vec<T>>,
}

/// Per-band affine correction `gain * I + offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProfile {
    pub gains: Vec<f64>,
    pub offsets: Vec<f64>,
}

impl CalibrationProfile {
    pub fn identity(bands: usize) -> Self {
        Self {
            gains: vec![1.0; bands],
            offsets: vec![0.0; bands],
        }
    }

    pub fn new(gains: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        if gains.len() != offsets.len() {
            return Err(shape_err!(
                "{} gains but {} offsets",
                gains.len(),
                offsets.len()
            ));
        }
        if let Some(g) = gains.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::Domain(format!(
                "calibration gain {g} must be positive"
            )));
        }
        if let Some(o) = offsets.iter().find(|o| !o.is_finite()) {
            return Err(Error::Domain(format!(
                "calibration offset {o} must be finite"
            )));
        }
        Ok(Self { gains, offsets })
    }

    pub fn bands(&self) -> usize {
        self.gains.len()
    }
}

fn check_wavelengths(wl: &[f64]) -> Result<()> {
    if wl.is_empty() {
        return Err(Error::Input("a cube needs at least one band".into()));
    }
    if let Some(w) = wl
        .iter()
        .find(|w| !(MIN_WAVELENGTH_NM..=MAX_WAVELENGTH_NM).contains(*w))
    {
        return Err(Error::Domain(format!(
            "wavelength {w} nm outside {MIN_WAVELENGTH_NM}..{MAX_WAVELENGTH_NM} nm"
        )));
    }
    if wl.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Domain(
            "band wavelengths must be strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Index of the band closest to `target`; equidistant bands resolve to the
/// lower wavelength.
pub fn nearest_band(wavelengths: &[f64], target: f64) -> usize {
    let mut best = 0;
    for (i, w) in wavelengths.iter().enumerate() {
        if (w - target).abs() < (wavelengths[best] - target).abs() {
            best = i;
        }
    }
    best
}

impl<T: Scalar> DataCube<T> {
    /// `raw` is band-major: `raw[(b * height + y) * width + x]`.
    pub fn new(width: usize, height: usize, wavelengths: Vec<f64>, raw: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(shape_err!(
                "cube extents must be positive, got {width}x{height}"
            ));
        }
        check_wavelengths(&wavelengths)?;
        let expected = width * height * wavelengths.len();
        if raw.len() != expected {
            return Err(shape_err!(
                "raw block has {} values, expected {expected}",
                raw.len()
            ));
        }
        if let Some(v) = raw.iter().find(|v| !(v.is_finite() && **v >= T::zero())) {
            return Err(Error::Domain(format!(
                "raw intensity {v} must be finite and nonnegative"
            )));
        }
        Ok(Self {
            width,
            height,
            wavelengths,
            raw,
            calibrated: None,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn raw(&self) -> &[T] {
        &self.raw
    }

    pub fn calibrated(&self) -> Option<&[T]> {
        self.calibrated.as_deref()
    }

    fn offset(&self, x: usize, y: usize, band: usize) -> usize {
        (band * self.height + y) * self.width + x
    }

    /// Raw intensity `I(x, y, λ_band)`.
    pub fn raw_at(&self, x: usize, y: usize, band: usize) -> T {
        self.raw[self.offset(x, y, band)]
    }

    /// Calibrated intensity `X(x, y, λ_band)`, if calibrated.
    pub fn calibrated_at(&self, x: usize, y: usize, band: usize) -> Option<T> {
        self.calibrated.as_ref().map(|c| c[self.offset(x, y, band)])
    }

    fn band_slice(block: &[T], plane: usize, band: usize) -> &[T] {
        &block[band * plane..(band + 1) * plane]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 4 * (self.bands() + self.raw.len()));
        out.extend_from_slice(MAGIC);
        for v in [self.width, self.height, self.bands()] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for &w in &self.wavelengths {
            out.extend_from_slice(&(w as f32).to_le_bytes());
        }
        for v in &self.raw {
            out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
        out
    }

    /// Parses the cube file layout, validating the header against the block
    /// length.
    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let bad = |msg: String| Error::format(origin, msg);
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a cube file (bad magic)".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        let (w, h, b) = (word(8), word(12), word(16));
        let expected = 20u64 + 4 * b as u64 + 4 * (w as u64 * h as u64 * b as u64);
        if bytes.len() as u64 != expected {
            return Err(bad(format!(
                "header declares {w}x{h}x{b} ({expected} bytes) but file has {} bytes",
                bytes.len()
            )));
        }
        let floats = bytes[20..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64);
        let values: Vec<f64> = floats.collect();
        let (wl, raw) = values.split_at(b);
        Self::new(w, h, wl.to_vec(), raw.iter().map(|&v| T::of(v)).collect())
            .map_err(|e| bad(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

/// Applies `X = max(0, gain_i * I + offset_i)` band by band; with the identity
/// profile the calibrated block equals the raw block exactly.
pub fn calibrate<T: Scalar>(
    cube: &DataCube<T>,
    profile: &CalibrationProfile,
) -> Result<DataCube<T>> {
    if profile.bands() != cube.bands() {
        return Err(shape_err!(
            "profile has {} bands, cube has {}",
            profile.bands(),
            cube.bands()
        ));
    }
    let plane = cube.width * cube.height;
    let mut out = Vec::with_capacity(cube.raw.len());
    for (b, (&g, &o)) in profile.gains.iter().zip(&profile.offsets).enumerate() {
        let (g, o) = (T::of(g), T::of(o));
        out.extend(
            DataCube::band_slice(&cube.raw, plane, b)
                .iter()
                .map(|&v| (g * v + o).max(T::zero())),
        );
    }
    Ok(DataCube {
        calibrated: Some(out),
        ..cube.clone()
    })
}

/// Builds a `[3, H, W]` image from the calibrated bands nearest 660, 550 and
/// 470 nm, each min-max normalised to `[0, 1]` over the cube (a constant band
/// maps to zeros).
pub fn project_to_rgb<T: Scalar>(cube: &DataCube<T>) -> Result<Tensor<T>> {
    let block = cube
        .calibrated
        .as_ref()
        .ok_or_else(|| Error::Input("cube must be calibrated before projection".into()))?;
    let bands = rgb_bands(cube.wavelengths())?;
    let plane = cube.width * cube.height;
    let mut data = Vec::with_capacity(3 * plane);
    for b in bands {
        let src = DataCube::band_slice(block, plane, b);
        let lo = src.iter().copied().fold(T::infinity(), T::min);
        let hi = src.iter().copied().fold(T::neg_infinity(), T::max);
        let span = hi - lo;
        if span > T::zero() {
            data.extend(src.iter().map(|&v| ((v - lo) / span).min(T::one())));
        } else {
            data.extend(std::iter::repeat_n(T::zero(), plane));
        }
    }
    Tensor::from_vec(&[3, cube.height, cube.width], data)
}

/// Band indices feeding red, green, blue.
pub fn rgb_bands(wavelengths: &[f64]) -> Result<[usize; 3]> {
    let lo = wavelengths.first().copied().unwrap_or(f64::NAN);
    let hi = wavelengths.last().copied().unwrap_or(f64::NAN);
    let (need_lo, need_hi) = (RGB_WAVELENGTHS_NM[2], RGB_WAVELENGTHS_NM[0]);
    if !(lo <= need_lo && hi >= need_hi) {
        return Err(Error::Coverage {
            lo,
            hi,
            need_lo,
            need_hi,
        });
    }
    Ok(RGB_WAVELENGTHS_NM.map(|t| nearest_band(wavelengths, t)))
}

/// `count` evenly spaced wavelengths over `[lo, hi]` nm.
pub fn even_bands(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Synthesises a raw cube from a three-channel scene in `[0, 1]`.
///
/// The bands picked by [`project_to_rgb`] carry an affine copy of the matching
/// scene channel, so projecting the identity-calibrated cube returns the scene
/// min-max normalised per channel. Remaining bands blend the channels by
/// spectral proximity, add a near-infrared plateau driven by the green
/// channel, and carry seeded noise.
pub fn synthesize_cube<T: Scalar>(
    scene: &Tensor<T>,
    wavelengths: &[f64],
    seed: u64,
) -> Result<DataCube<T>> {
    scene.expect_rank(3, "scene")?;
    if scene.shape()[0] != 3 {
        return Err(shape_err!(
            "scene must have 3 channels, got {:?}",
            scene.shape()
        ));
    }
    check_wavelengths(wavelengths)?;
    let selected = rgb_bands(wavelengths)?;
    if selected[0] == selected[1] || selected[1] == selected[2] || selected[0] == selected[2] {
        return Err(Error::Input(format!(
            "bands {wavelengths:?} too sparse: red, green and blue resolve to the same band"
        )));
    }
    let (h, w) = (scene.shape()[1], scene.shape()[2]);
    let plane = h * w;
    let sd = scene.data();
    let channel = |c: usize, p: usize| sd[c * plane + p].as_f64().clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.01).expect("positive std");
    let mut raw = Vec::with_capacity(plane * wavelengths.len());
    for (b, &wl) in wavelengths.iter().enumerate() {
        if let Some(c) = selected.iter().position(|&s| s == b) {
            raw.extend((0..plane).map(|p| T::of(0.05 + 0.9 * channel(c, p))));
            continue;
        }
        let weights =
            RGB_WAVELENGTHS_NM.map(|centre| (-((wl - centre) / 50.0).powi(2) / 2.0).exp());
        let total: f64 = weights.iter().sum::<f64>().max(1e-12);
        let nir = ((wl - 700.0) / 50.0).clamp(0.0, 1.0);
        for p in 0..plane {
            let visible: f64 = (0..3).map(|c| weights[c] * channel(c, p)).sum::<f64>() / total;
            let v =
                (1.0 - nir) * visible + nir * (0.3 + 0.5 * channel(1, p)) + noise.sample(&mut rng);
            raw.push(T::of(v.max(0.0)));
        }
    }
    DataCube::new(w, h, wavelengths.to_vec(), raw)
}

//! Simulated drone survey: serpentine tiling of a field mosaic, per-tile
//! classification, and the resulting disease map.

use serde::{Deserialize, Serialize};

use crate::class::{ClassId, NUM_CLASSES};
use crate::dataset::image_io::Rgb8;
use crate::dataset::IMAGE_SIZE;
use crate::error::{shape_err, Error, Result};
use crate::hyperspectral::{calibrate, project_to_rgb, CalibrationProfile, DataCube};
use crate::nn::Network;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Edge length of one survey tile, equal to the classifier input size.
pub const TILE: usize = IMAGE_SIZE;

/// Display colour per class, indexed by [`ClassId`].
pub const PALETTE: [[u8; 3]; NUM_CLASSES] = [
    [230, 25, 75],  // Anthracnose
    [245, 130, 48], // Bacterial Wilt
    [255, 225, 25], // Belly Rot
    [145, 30, 180], // Downy Mildew
    [70, 240, 240], // Pythium Fruit Rot
    [240, 50, 230], // Gummy Stem Blight
    [60, 180, 75],  // Fresh Leaves
    [0, 130, 200],  // Fresh Cucumber
];
pub const UNCOVERED: [u8; 3] = [0, 0, 0];
pub const HEALTHY_COLOR: [u8; 3] = [60, 180, 75];
pub const DISEASED_COLOR: [u8; 3] = [230, 25, 75];

/// Three-channel field image in `[0, 1]`, at least one tile in each direction.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldMosaic<T> {
    image: Tensor<T>,
    /// Metres per pixel; carried through to the report only.
    pub ground_resolution_m: f64,
}

impl<T: Scalar> FieldMosaic<T> {
    pub fn new(image: Tensor<T>, ground_resolution_m: f64) -> Result<Self> {
        image.expect_rank(3, "mosaic")?;
        let s = image.shape();
        if s[0] != 3 {
            return Err(shape_err!("mosaic must have 3 channels, got {s:?}"));
        }
        if s[1] < TILE || s[2] < TILE {
            return Err(Error::Input(format!(
                "mosaic {}x{} is smaller than one {TILE}x{TILE} tile",
                s[1], s[2]
            )));
        }
        if let Some(v) = image
            .data()
            .iter()
            .find(|v| !(**v >= T::zero() && **v <= T::one()))
        {
            return Err(Error::Domain(format!("mosaic pixel {v} outside [0, 1]")));
        }
        Ok(Self {
            image,
            ground_resolution_m,
        })
    }

    /// Calibrates a cube and projects it to RGB.
    pub fn from_cube(
        cube: &DataCube<T>,
        profile: &CalibrationProfile,
        ground_resolution_m: f64,
    ) -> Result<Self> {
        let rgb = project_to_rgb(&calibrate(cube, profile)?)?;
        Self::new(rgb, ground_resolution_m)
    }

    pub fn image(&self) -> &Tensor<T> {
        &self.image
    }

    pub fn height(&self) -> usize {
        self.image.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.image.shape()[2]
    }

    /// Copies the `[3, 50, 50]` window with top-left corner `(y, x)`.
    pub fn tile(&self, y: usize, x: usize) -> Result<Tensor<T>> {
        let (h, w) = (self.height(), self.width());
        if y + TILE > h || x + TILE > w {
            return Err(Error::Input(format!(
                "tile at ({y}, {x}) leaves the {h}x{w} mosaic"
            )));
        }
        let mut data = Vec::with_capacity(3 * TILE * TILE);
        for c in 0..3 {
            for row in y..y + TILE {
                let start = (c * h + row) * w + x;
                data.extend_from_slice(&self.image.data()[start..start + TILE]);
            }
        }
        Tensor::from_vec(&[3, TILE, TILE], data)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileOrigin {
    pub row: usize,
    pub col: usize,
    pub y: usize,
    pub x: usize,
}

/// Ordered tile positions over a mosaic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurveyPlan {
    pub stride: usize,
    pub height: usize,
    pub width: usize,
    pub rows: usize,
    pub cols: usize,
    /// Serpentine order: even grid rows left to right, odd rows right to left.
    pub origins: Vec<TileOrigin>,
}

impl SurveyPlan {
    pub fn new(height: usize, width: usize, stride: usize) -> Result<Self> {
        if !(1..=TILE).contains(&stride) {
            return Err(Error::Input(format!("stride {stride} outside 1..={TILE}")));
        }
        if height < TILE || width < TILE {
            return Err(Error::Input(format!(
                "mosaic {height}x{width} is smaller than one {TILE}x{TILE} tile"
            )));
        }
        let rows = (height - TILE) / stride + 1;
        let cols = (width - TILE) / stride + 1;
        let mut origins = Vec::with_capacity(rows * cols);
        for row in 0..rows {
            let order: Box<dyn Iterator<Item = usize>> = if row % 2 == 0 {
                Box::new(0..cols)
            } else {
                Box::new((0..cols).rev())
            };
            for col in order {
                origins.push(TileOrigin {
                    row,
                    col,
                    y: row * stride,
                    x: col * stride,
                });
            }
        }
        Ok(Self {
            stride,
            height,
            width,
            rows,
            cols,
            origins,
        })
    }

    /// The same tiles flown in the opposite direction.
    pub fn reversed(&self) -> Self {
        let mut plan = self.clone();
        plan.origins.reverse();
        plan
    }
}

pub fn plan_survey<T: Scalar>(mosaic: &FieldMosaic<T>, stride: usize) -> Result<SurveyPlan> {
    SurveyPlan::new(mosaic.height(), mosaic.width(), stride)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileResult {
    pub origin: TileOrigin,
    pub class: ClassId,
    pub confidence: f64,
}

/// Per-tile grid of labels plus the broadcast per-pixel raster.
#[derive(Clone, Debug, PartialEq)]
pub struct DiseaseMap {
    pub rows: usize,
    pub cols: usize,
    pub stride: usize,
    pub height: usize,
    pub width: usize,
    /// Row-major over the tile grid.
    pub tiles: Vec<TileResult>,
    /// Row-major over the mosaic; `None` outside the surveyed region.
    pub pixels: Vec<Option<ClassId>>,
}

/// Classifies every planned tile and paints its label over its pixels in
/// plan order, so overlapping tiles resolve last-written-wins.
pub fn run_survey<T: Scalar>(
    mosaic: &FieldMosaic<T>,
    plan: &SurveyPlan,
    network: &Network<T>,
) -> Result<DiseaseMap> {
    if (plan.height, plan.width) != (mosaic.height(), mosaic.width()) {
        return Err(Error::Input(format!(
            "plan made for {}x{} but mosaic is {}x{}",
            plan.height,
            plan.width,
            mosaic.height(),
            mosaic.width()
        )));
    }
    if network.config().input != [3, TILE, TILE] {
        return Err(shape_err!(
            "network input {:?} is not a survey tile",
            network.config().input
        ));
    }
    let mut grid: Vec<Option<TileResult>> = vec![None; plan.rows * plan.cols];
    let mut pixels = vec![None; plan.height * plan.width];
    for &origin in &plan.origins {
        let tile = mosaic.tile(origin.y, origin.x)?;
        let pred = network.predict(&tile)?;
        let class = pred.class_id()?;
        grid[origin.row * plan.cols + origin.col] = Some(TileResult {
            origin,
            class,
            confidence: pred.confidence.as_f64(),
        });
        for y in origin.y..origin.y + TILE {
            pixels[y * plan.width + origin.x..y * plan.width + origin.x + TILE].fill(Some(class));
        }
    }
    let tiles = grid
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Input("plan does not cover its own grid".into()))?;
    Ok(DiseaseMap {
        rows: plan.rows,
        cols: plan.cols,
        stride: plan.stride,
        height: plan.height,
        width: plan.width,
        tiles,
        pixels,
    })
}

impl DiseaseMap {
    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for t in &self.tiles {
            counts[t.class.index()] += 1;
        }
        counts
    }

    pub fn covered_pixels(&self) -> usize {
        self.pixels.iter().flatten().count()
    }

    /// Share of covered pixels per class.
    pub fn area_fractions(&self) -> [f64; NUM_CLASSES] {
        let mut counts = [0usize; NUM_CLASSES];
        for c in self.pixels.iter().flatten() {
            counts[c.index()] += 1;
        }
        let covered = self.covered_pixels().max(1) as f64;
        counts.map(|n| n as f64 / covered)
    }

    pub fn healthy_fraction(&self) -> f64 {
        let fr = self.area_fractions();
        ClassId::all()
            .filter(|c| c.is_healthy())
            .map(|c| fr[c.index()])
            .sum()
    }

    pub fn raster(&self) -> Rgb8 {
        self.paint(|c| PALETTE[c.index()])
    }

    /// Healthy / diseased layer derived from the class raster.
    pub fn binary_raster(&self) -> Rgb8 {
        self.paint(|c| {
            if c.is_healthy() {
                HEALTHY_COLOR
            } else {
                DISEASED_COLOR
            }
        })
    }

    fn paint(&self, color: impl Fn(ClassId) -> [u8; 3]) -> Rgb8 {
        let pixels = self
            .pixels
            .iter()
            .flat_map(|p| p.map_or(UNCOVERED, &color))
            .collect();
        Rgb8 {
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    pub fn report(&self) -> SurveyReport {
        let fractions = self.area_fractions();
        let healthy = self.healthy_fraction();
        SurveyReport {
            grid_rows: self.rows,
            grid_cols: self.cols,
            stride: self.stride,
            tile_size: TILE,
            mosaic_height: self.height,
            mosaic_width: self.width,
            tiles: self
                .tiles
                .iter()
                .map(|t| TileRecord {
                    origin: [t.origin.y, t.origin.x],
                    row: t.origin.row,
                    col: t.origin.col,
                    class: t.class,
                    class_name: t.class.name().to_string(),
                    confidence: t.confidence,
                })
                .collect(),
            class_counts: self.class_counts().to_vec(),
            area_fractions: ClassId::all()
                .map(|c| ClassFraction {
                    class: c,
                    name: c.name().to_string(),
                    fraction: fractions[c.index()],
                })
                .collect(),
            healthy_fraction: healthy,
            diseased_fraction: 1.0 - healthy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileRecord {
    /// `[y, x]` of the tile's top-left pixel.
    pub origin: [usize; 2],
    pub row: usize,
    pub col: usize,
    pub class: ClassId,
    pub class_name: String,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassFraction {
    pub class: ClassId,
    pub name: String,
    pub fraction: f64,
}

/// JSON survey report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyReport {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub stride: usize,
    pub tile_size: usize,
    pub mosaic_height: usize,
    pub mosaic_width: usize,
    pub tiles: Vec<TileRecord>,
    pub class_counts: Vec<usize>,
    pub area_fractions: Vec<ClassFraction>,
    pub healthy_fraction: f64,
    pub diseased_fraction: f64,
}

impl SurveyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("survey report serializes")
    }
}

/// Class raster plus the JSON report for a map.
pub fn render_map(map: &DiseaseMap) -> (Rgb8, SurveyReport) {
    (map.raster(), map.report())
}

/// Lays `tiles` (each `[3, 50, 50]`) row-major into a `grid x grid` mosaic.
pub fn mosaic_from_tiles<T: Scalar>(
    tiles: &[Tensor<T>],
    grid_rows: usize,
    grid_cols: usize,
) -> Result<Tensor<T>> {
    if tiles.len() != grid_rows * grid_cols || tiles.is_empty() {
        return Err(Error::Input(format!(
            "{} tiles cannot fill a {grid_rows}x{grid_cols} grid",
            tiles.len()
        )));
    }
    if let Some(t) = tiles.iter().find(|t| t.shape() != [3, TILE, TILE]) {
        return Err(shape_err!("tile of shape {:?}", t.shape()));
    }
    let (h, w) = (grid_rows * TILE, grid_cols * TILE);
    Tensor::from_fn(&[3, h, w], |i| {
        let (c, y, x) = (i / (h * w), (i / w) % h, i % w);
        tiles[(y / TILE) * grid_cols + x / TILE].at3(c, y % TILE, x % TILE)
    })
}

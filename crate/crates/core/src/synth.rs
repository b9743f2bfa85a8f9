//! Synthetic reflectance spectra with known features.
//!
//! A material is a piecewise-linear continuum, plus an optional red-edge
//! sigmoid, minus Gaussian absorption dips, plus i.i.d. Gaussian noise,
//! clipped to `[0, 1.2]`. The presets are analogs of three vegetation covers
//! (strong, moderate, and weak red edge) and ten polymer targets with
//! distinct absorption signatures.

use std::path::Path;

use ndarray::{Array1, Array2, Array3};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, SeededRng};
use crate::spectra_io::{LabeledDataset, SpectralCube, WavelengthGrid};

pub const MAX_REFLECTANCE: f64 = 1.2;
pub const DEFAULT_NOISE_STD: f64 = 0.01;

/// Logistic step `low + (high − low) / (1 + exp(−(λ − center) / width))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedEdge {
    pub center_nm: f64,
    pub width_nm: f64,
    pub low: f64,
    pub high: f64,
}

/// Gaussian dip `depth · exp(−(λ − center)² / (2 width²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Absorption {
    pub center_nm: f64,
    pub depth: f64,
    pub width_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel {
    pub name: String,
    /// `(wavelength_nm, reflectance)` knots, ascending; held constant past
    /// either end.
    pub baseline: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub red_edge: Option<RedEdge>,
    #[serde(default)]
    pub absorptions: Vec<Absorption>,
    pub noise_std: f64,
}

impl MaterialModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("material {}: {m}", self.name)));
        if self.baseline.windows(2).any(|k| k[1][0] <= k[0][0]) {
            return bad("baseline knots must have increasing wavelengths".into());
        }
        if self
            .absorptions
            .iter()
            .any(|a| a.depth < 0.0 || a.width_nm <= 0.0)
        {
            return bad("absorption depths must be ≥ 0 and widths > 0".into());
        }
        if self.red_edge.as_ref().is_some_and(|e| e.width_nm <= 0.0) {
            return bad("red edge width must be > 0".into());
        }
        if self.noise_std.is_nan() || self.noise_std < 0.0 {
            return bad(format!("noise std {} must be ≥ 0", self.noise_std));
        }
        Ok(())
    }

    fn continuum(&self, nm: f64) -> f64 {
        let knots = &self.baseline;
        match knots.iter().position(|k| k[0] >= nm) {
            None => knots.last().map_or(0.0, |k| k[1]),
            Some(0) => knots[0][1],
            Some(i) => {
                let [x0, y0] = knots[i - 1];
                let [x1, y1] = knots[i];
                y0 + (y1 - y0) * (nm - x0) / (x1 - x0)
            }
        }
    }

    /// Noiseless, unclipped reflectance at `nm`.
    pub fn analytic(&self, nm: f64) -> f64 {
        let edge = self.red_edge.as_ref().map_or(0.0, |e| {
            e.low + (e.high - e.low) / (1.0 + (-(nm - e.center_nm) / e.width_nm).exp())
        });
        let dips: f64 = self
            .absorptions
            .iter()
            .map(|a| {
                a.depth * (-(nm - a.center_nm).powi(2) / (2.0 * a.width_nm * a.width_nm)).exp()
            })
            .sum();
        self.continuum(nm) + edge - dips
    }

    /// Noiseless, unclipped curve on `grid`.
    pub fn curve(&self, grid: &WavelengthGrid) -> Array1<f64> {
        grid.as_slice()
            .iter()
            .map(|&nm| self.analytic(nm))
            .collect()
    }

    fn draw(&self, curve: &Array1<f64>, rng: &mut SeededRng) -> Array1<f64> {
        if self.noise_std == 0.0 {
            return curve.mapv(clip);
        }
        let noise = Normal::new(0.0, self.noise_std).expect("validated std");
        curve.mapv(|v| clip(v + noise.sample(rng)))
    }
}

fn clip(v: f64) -> f64 {
    v.clamp(0.0, MAX_REFLECTANCE)
}

/// `counts[c]` samples of `models[c]`, in class order.
pub fn generate_dataset(
    models: &[MaterialModel],
    counts: &[usize],
    grid: &WavelengthGrid,
    seed: u64,
) -> Result<LabeledDataset> {
    if models.len() != counts.len() {
        return Err(Error::Config(format!(
            "{} materials but {} counts",
            models.len(),
            counts.len()
        )));
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Config(format!(
            "count for {} must be ≥ 1",
            models[c].name
        )));
    }
    models.iter().try_for_each(MaterialModel::validate)?;

    let mut rng = rng::seeded(seed);
    let total: usize = counts.iter().sum();
    let mut spectra = Array2::zeros((total, grid.len()));
    let mut labels = Vec::with_capacity(total);
    let mut row = 0;
    for (c, (model, &n)) in models.iter().zip(counts).enumerate() {
        let curve = model.curve(grid);
        for _ in 0..n {
            spectra.row_mut(row).assign(&model.draw(&curve, &mut rng));
            labels.push(c);
            row += 1;
        }
    }
    LabeledDataset::new(
        spectra,
        labels,
        models.iter().map(|m| m.name.clone()).collect(),
        grid.clone(),
    )
}

/// Renders a scene whose entries index `models`. Returns the cube and the
/// ground-truth label map (a copy of the scene).
pub fn generate_cube(
    models: &[MaterialModel],
    scene: &Array2<usize>,
    grid: &WavelengthGrid,
    seed: u64,
) -> Result<(SpectralCube, Array2<usize>)> {
    if let Some(((line, sample), _)) = scene.indexed_iter().find(|(_, &m)| m >= models.len()) {
        return Err(Error::UncoveredPixel { line, sample });
    }
    models.iter().try_for_each(MaterialModel::validate)?;
    let curves: Vec<Array1<f64>> = models.iter().map(|m| m.curve(grid)).collect();
    let mut rng = rng::seeded(seed);
    let (lines, samples) = scene.dim();
    let mut data = Array3::<f32>::zeros((lines, samples, grid.len()));
    for ((l, s), &m) in scene.indexed_iter() {
        let px = models[m].draw(&curves[m], &mut rng);
        for (b, v) in px.iter().enumerate() {
            data[[l, s, b]] = *v as f32;
        }
    }
    Ok((SpectralCube::new(grid.clone(), data)?, scene.clone()))
}

/// Vertical stripes of equal width, one per class, left to right.
pub fn stripe_scene(lines: usize, samples: usize, classes: usize) -> Array2<usize> {
    Array2::from_shape_fn((lines, samples), |(_, s)| s * classes / samples.max(1))
}

fn knots(points: &[(f64, f64)]) -> Vec<[f64; 2]> {
    points.iter().map(|&(x, y)| [x, y]).collect()
}

fn dips(list: &[(f64, f64, f64)]) -> Vec<Absorption> {
    list.iter()
        .map(|&(center_nm, depth, width_nm)| Absorption {
            center_nm,
            depth,
            width_nm,
        })
        .collect()
}

fn material(
    name: &str,
    baseline: &[(f64, f64)],
    red_edge: Option<RedEdge>,
    absorptions: &[(f64, f64, f64)],
) -> MaterialModel {
    MaterialModel {
        name: name.into(),
        baseline: knots(baseline),
        red_edge,
        absorptions: dips(absorptions),
        noise_std: DEFAULT_NOISE_STD,
    }
}

/// Forest (strong red edge), field (moderate), senesced field (weak).
pub fn vegetation_preset() -> Vec<MaterialModel> {
    let water = |scale: f64| {
        [
            (970.0, 0.03 * scale, 25.0),
            (1200.0, 0.06 * scale, 35.0),
            (1450.0, 0.20 * scale, 50.0),
            (1940.0, 0.25 * scale, 60.0),
        ]
    };
    let mut forest_dips = vec![(450.0, 0.02, 25.0), (670.0, 0.03, 20.0)];
    forest_dips.extend(water(1.0));
    let mut field_dips = vec![(450.0, 0.03, 25.0), (670.0, 0.03, 20.0)];
    field_dips.extend(water(0.6));
    let mut senesced_dips = vec![(670.0, 0.01, 20.0), (2100.0, 0.04, 40.0)];
    senesced_dips.extend(water(0.4));

    vec![
        material(
            "forest",
            &[
                (400.0, 0.04),
                (520.0, 0.05),
                (550.0, 0.08),
                (600.0, 0.05),
                (1300.0, 0.04),
                (2400.0, -0.20),
            ],
            Some(RedEdge {
                center_nm: 715.0,
                width_nm: 12.0,
                low: 0.0,
                high: 0.45,
            }),
            &forest_dips,
        ),
        material(
            "field1",
            &[
                (400.0, 0.07),
                (520.0, 0.10),
                (550.0, 0.14),
                (600.0, 0.10),
                (1300.0, 0.08),
                (2400.0, -0.10),
            ],
            Some(RedEdge {
                center_nm: 715.0,
                width_nm: 14.0,
                low: 0.0,
                high: 0.30,
            }),
            &field_dips,
        ),
        material(
            "field2_senesced",
            &[
                (400.0, 0.08),
                (500.0, 0.12),
                (600.0, 0.18),
                (700.0, 0.22),
                (1300.0, 0.30),
                (2400.0, 0.20),
            ],
            Some(RedEdge {
                center_nm: 720.0,
                width_nm: 25.0,
                low: 0.0,
                high: 0.08,
            }),
            &senesced_dips,
        ),
    ]
}

/// Pixel counts of the three vegetation regions.
pub fn vegetation_counts() -> Vec<usize> {
    vec![2580, 168, 104]
}

/// 181 bands over 400–2400 nm.
pub fn vegetation_grid() -> WavelengthGrid {
    WavelengthGrid::linspace(400.0, 2400.0, 181).expect("valid grid")
}

/// Ten polymer analogs distinguished by color and C–H / C–Cl / C=O
/// absorption features.
pub fn polymer_preset() -> Vec<MaterialModel> {
    let polyethylene = [
        (1210.0, 0.08, 15.0),
        (1730.0, 0.15, 15.0),
        (1760.0, 0.10, 12.0),
        (2310.0, 0.20, 20.0),
        (2350.0, 0.15, 15.0),
    ];
    let pvc = [
        (1190.0, 0.05, 15.0),
        (1720.0, 0.12, 20.0),
        (2270.0, 0.20, 15.0),
        (2350.0, 0.15, 15.0),
    ];
    vec![
        material(
            "red_bubble_wrap",
            &[(400.0, 0.08), (580.0, 0.08), (620.0, 0.45), (2450.0, 0.40)],
            None,
            &polyethylene,
        ),
        material(
            "clear_bubble_wrap",
            &[(400.0, 0.25), (2450.0, 0.22)],
            None,
            &polyethylene.map(|(c, d, w)| (c, 0.5 * d, w)),
        ),
        material(
            "glove_loc",
            &[
                (400.0, 0.35),
                (480.0, 0.40),
                (560.0, 0.15),
                (650.0, 0.12),
                (720.0, 0.50),
                (2450.0, 0.45),
            ],
            None,
            &[
                (1150.0, 0.05, 20.0),
                (1700.0, 0.12, 25.0),
                (2270.0, 0.15, 30.0),
            ],
        ),
        material(
            "medicine_bottle",
            &[(400.0, 0.05), (550.0, 0.10), (650.0, 0.45), (2450.0, 0.55)],
            None,
            &[
                (1130.0, 0.06, 15.0),
                (1660.0, 0.15, 15.0),
                (2130.0, 0.12, 25.0),
                (2250.0, 0.10, 20.0),
            ],
        ),
        material(
            "red_lid",
            &[(400.0, 0.06), (590.0, 0.07), (630.0, 0.65), (2450.0, 0.62)],
            None,
            &[
                (1195.0, 0.10, 15.0),
                (1390.0, 0.08, 15.0),
                (1725.0, 0.18, 15.0),
                (2300.0, 0.20, 20.0),
            ],
        ),
        material(
            "ping_pong_ball",
            &[(400.0, 0.70), (450.0, 0.85), (2450.0, 0.80)],
            None,
            &[
                (1540.0, 0.08, 30.0),
                (1700.0, 0.10, 30.0),
                (2300.0, 0.10, 30.0),
            ],
        ),
        material(
            "pvc_pipe",
            &[(400.0, 0.55), (470.0, 0.68), (2450.0, 0.62)],
            None,
            &pvc,
        ),
        material(
            "pvc_extension_plug",
            &[(400.0, 0.05), (560.0, 0.10), (600.0, 0.40), (2450.0, 0.35)],
            None,
            &pvc.map(|(c, d, w)| (c, 0.8 * d, w)),
        ),
        material(
            "inflatable_football",
            &[
                (400.0, 0.10),
                (500.0, 0.15),
                (560.0, 0.45),
                (620.0, 0.50),
                (2450.0, 0.30),
            ],
            None,
            &[
                (1180.0, 0.06, 15.0),
                (1715.0, 0.14, 20.0),
                (2280.0, 0.18, 18.0),
            ],
        ),
        material(
            "foam_packaging",
            &[(400.0, 0.90), (2450.0, 0.95)],
            None,
            &[
                (1140.0, 0.08, 15.0),
                (1680.0, 0.15, 15.0),
                (2170.0, 0.12, 20.0),
                (2300.0, 0.15, 20.0),
            ],
        ),
    ]
}

/// Pixel counts of the ten polymer targets.
pub fn polymer_counts() -> Vec<usize> {
    vec![3672, 3003, 1200, 1360, 2958, 225, 5415, 1818, 3196, 8900]
}

/// 452 bands over 400–2450 nm.
pub fn polymer_grid() -> WavelengthGrid {
    WavelengthGrid::linspace(400.0, 2450.0, 452).expect("valid grid")
}

/// A named bundle of materials, default counts, and grid.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub materials: Vec<MaterialModel>,
    pub counts: Vec<usize>,
    pub grid: WavelengthGrid,
}

impl Preset {
    pub fn vegetation() -> Self {
        Self {
            name: "vegetation",
            materials: vegetation_preset(),
            counts: vegetation_counts(),
            grid: vegetation_grid(),
        }
    }

    pub fn polymer() -> Self {
        Self {
            name: "polymer",
            materials: polymer_preset(),
            counts: polymer_counts(),
            grid: polymer_grid(),
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "vegetation" => Some(Self::vegetation()),
            "polymer" => Some(Self::polymer()),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MaterialFile {
    material: Vec<MaterialModel>,
}

/// TOML with one `[[material]]` table per model.
pub fn save_materials(models: &[MaterialModel], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = toml::to_string(&MaterialFile {
        material: models.to_vec(),
    })
    .map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_materials(path: impl AsRef<Path>) -> Result<Vec<MaterialModel>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: MaterialFile = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    file.material.iter().try_for_each(MaterialModel::validate)?;
    Ok(file.material)
}

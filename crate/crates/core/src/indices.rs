//! Normalized-difference spectral indices (NDVI and friends) and the
//! iso-index line geometry in the (Red, NIR) plane.

use std::path::Path;

use ndarray::parallel::prelude::*;
use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra_io::{SpectralCube, WavelengthGrid, Window};

/// A normalized difference `(high − low) / (high + low)` where each term is
/// the mean reflectance over a wavelength window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSpec {
    pub name: String,
    /// Subtrahend window, e.g. Red.
    pub low_nm: Window,
    /// Minuend window, e.g. NIR.
    pub high_nm: Window,
}

impl IndexSpec {
    pub fn new(name: impl Into<String>, low_nm: Window, high_nm: Window) -> Self {
        Self {
            name: name.into(),
            low_nm,
            high_nm,
        }
    }

    /// Landsat 8/9 NDVI: Red 640–670 nm, NIR 850–880 nm.
    pub fn ndvi() -> Self {
        Self::new(
            "ndvi",
            Window::new(640.0, 670.0).unwrap(),
            Window::new(850.0, 880.0).unwrap(),
        )
    }

    /// Landsat 4–7 NDVI: Red 630–690 nm, NIR 760–900 nm.
    pub fn ndvi_landsat7() -> Self {
        Self::new(
            "ndvi-landsat7",
            Window::new(630.0, 690.0).unwrap(),
            Window::new(760.0, 900.0).unwrap(),
        )
    }

    pub fn presets() -> Vec<IndexSpec> {
        vec![Self::ndvi(), Self::ndvi_landsat7()]
    }

    pub fn preset(name: &str) -> Option<IndexSpec> {
        Self::presets().into_iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexFile {
    index: Vec<IndexSpec>,
}

/// Reads index definitions from a TOML file of `[[index]]` tables with
/// `name`, `low_nm = [lo, hi]` and `high_nm = [lo, hi]`.
pub fn load_index_specs(path: impl AsRef<Path>) -> Result<Vec<IndexSpec>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: IndexFile = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(file.index)
}

pub fn save_index_specs(specs: &[IndexSpec], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = toml::to_string(&IndexFile {
        index: specs.to_vec(),
    })
    .map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Mean reflectance over the bands inside `window`; with no band inside, the
/// band nearest the window center.
pub fn band_window_mean(
    spectrum: ArrayView1<'_, f64>,
    grid: &WavelengthGrid,
    window: Window,
) -> f64 {
    let bands = grid.bands_in(window);
    if bands.is_empty() {
        return spectrum[grid.nearest_band(window.center())];
    }
    bands.iter().map(|&b| spectrum[b]).sum::<f64>() / bands.len() as f64
}

/// `(high − low) / (high + low)`.
pub fn normalized_difference(high: f64, low: f64) -> Result<f64> {
    let sum = high + low;
    if sum == 0.0 {
        return Err(Error::UndefinedIndex);
    }
    Ok((high - low) / sum)
}

pub fn ndvi(spectrum: ArrayView1<'_, f64>, grid: &WavelengthGrid, spec: &IndexSpec) -> Result<f64> {
    let nir = band_window_mean(spectrum, grid, spec.high_nm);
    let red = band_window_mean(spectrum, grid, spec.low_nm);
    normalized_difference(nir, red)
}

/// Slope of the iso-index line `NIR = slope · R` for index value `v`.
pub fn iso_index_slope(v: f64) -> Result<f64> {
    if v == 1.0 {
        return Err(Error::InfiniteSlope);
    }
    if !(-1.0..1.0).contains(&v) {
        return Err(Error::IndexDomain(v));
    }
    Ok((v + 1.0) / (1.0 - v))
}

/// Per-pixel index over a cube; pixels where the index is undefined are NaN.
pub fn index_map(cube: &SpectralCube, spec: &IndexSpec) -> Array2<f64> {
    let grid = cube.grid();
    let values: Vec<f64> = cube
        .to_spectra()
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|px| ndvi(px, grid, spec).unwrap_or(f64::NAN))
        .collect();
    Array2::from_shape_vec((cube.lines(), cube.samples()), values).expect("one value per pixel")
}

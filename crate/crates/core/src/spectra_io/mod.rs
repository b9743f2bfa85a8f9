//! Hyperspectral cubes, labeled spectra, and the wavelength grid that ties
//! bands to physical wavelengths.
//!
//! Reflectance is stored as a fraction (roughly `[0, 1.2]` with sensor
//! overshoot), never as percent. Cubes keep the raster's 32-bit floats in
//! canonical `(line, sample, band)` order; datasets hold `f64` rows.

mod csv_io;
mod envi;

use std::collections::HashMap;
use std::ops::RangeInclusive;

use ndarray::{Array2, Array3, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_dataset_csv, write_dataset_csv};
pub use envi::{load_cube, write_cube, ByteOrder, Interleave};

/// Band-center wavelengths in nanometers, strictly increasing and positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WavelengthGrid(Vec<f64>);

impl WavelengthGrid {
    pub fn new(wavelengths_nm: Vec<f64>) -> Result<Self> {
        if wavelengths_nm.is_empty() {
            return Err(Error::InvalidGrid("no wavelengths".into()));
        }
        if let Some(bad) = wavelengths_nm
            .iter()
            .find(|w| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::InvalidGrid(format!(
                "wavelength {bad} is not a positive finite value"
            )));
        }
        if let Some(i) = wavelengths_nm.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "wavelengths not strictly increasing at band {} ({} -> {})",
                i + 1,
                wavelengths_nm[i],
                wavelengths_nm[i + 1]
            )));
        }
        Ok(Self(wavelengths_nm))
    }

    /// `bands` evenly spaced wavelengths from `start_nm` to `end_nm` inclusive.
    pub fn linspace(start_nm: f64, end_nm: f64, bands: usize) -> Result<Self> {
        match bands {
            0 => Err(Error::InvalidGrid("no wavelengths".into())),
            1 => Self::new(vec![start_nm]),
            n => {
                let step = (end_nm - start_nm) / (n - 1) as f64;
                Self::new((0..n).map(|i| start_nm + step * i as f64).collect())
            }
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Index of the band closest to `target_nm`; ties go to the lower index.
    pub fn nearest_band(&self, target_nm: f64) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, w) in self.0.iter().enumerate() {
            let dist = (w - target_nm).abs();
            if dist < best_dist {
                best = i;
                best_dist = dist;
            }
        }
        best
    }

    /// Indices of bands whose wavelength lies in the closed window.
    pub fn bands_in(&self, window: Window) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, w)| window.contains(**w))
            .map(|(i, _)| i)
            .collect()
    }
}

impl TryFrom<Vec<f64>> for WavelengthGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WavelengthGrid> for Vec<f64> {
    fn from(g: WavelengthGrid) -> Self {
        g.0
    }
}

/// Closed wavelength interval `[lo, hi]` in nanometers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Window {
    lo: f64,
    hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::Config(format!(
                "invalid wavelength window [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, nm: f64) -> bool {
        self.lo <= nm && nm <= self.hi
    }
}

impl TryFrom<[f64; 2]> for Window {
    type Error = Error;

    fn try_from([lo, hi]: [f64; 2]) -> Result<Self> {
        Self::new(lo, hi)
    }
}

impl From<Window> for [f64; 2] {
    fn from(w: Window) -> Self {
        [w.lo, w.hi]
    }
}

/// A `lines × samples × bands` reflectance raster.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    grid: WavelengthGrid,
    data: Array3<f32>,
}

impl SpectralCube {
    /// `data` is indexed `(line, sample, band)`.
    pub fn new(grid: WavelengthGrid, data: Array3<f32>) -> Result<Self> {
        let bands = data.dim().2;
        if bands != grid.len() {
            return Err(Error::shape(
                format!("{} bands (grid length)", grid.len()),
                format!("{bands} bands"),
            ));
        }
        Ok(Self {
            grid,
            data: data.as_standard_layout().into_owned(),
        })
    }

    pub fn lines(&self) -> usize {
        self.data.dim().0
    }

    pub fn samples(&self) -> usize {
        self.data.dim().1
    }

    pub fn bands(&self) -> usize {
        self.data.dim().2
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn data(&self) -> &Array3<f32> {
        &self.data
    }

    pub fn pixel(&self, line: usize, sample: usize) -> ArrayView1<'_, f32> {
        self.data
            .index_axis(Axis(0), line)
            .index_axis_move(Axis(0), sample)
    }

    /// All pixels as `f64` rows, line-major (`row = line * samples + sample`).
    pub fn to_spectra(&self) -> Array2<f64> {
        let (lines, samples, bands) = self.data.dim();
        self.data
            .mapv(f64::from)
            .into_shape_with_order((lines * samples, bands))
            .expect("standard layout cube reshapes")
    }
}

/// Spectra with class labels; the unit of training and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    spectra: Array2<f64>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    grid: WavelengthGrid,
}

impl LabeledDataset {
    pub fn new(
        spectra: Array2<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        grid: WavelengthGrid,
    ) -> Result<Self> {
        let (rows, bands) = spectra.dim();
        if rows == 0 {
            return Err(Error::EmptyDataset);
        }
        if bands != grid.len() {
            return Err(Error::shape(
                format!("{} bands (grid length)", grid.len()),
                format!("{bands} columns"),
            ));
        }
        if rows != labels.len() {
            return Err(Error::shape(
                format!("{rows} labels"),
                format!("{} labels", labels.len()),
            ));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidDataset(format!(
                "label {bad} but only {} classes",
                class_names.len()
            )));
        }
        let mut counts = vec![0usize; class_names.len()];
        for &l in &labels {
            counts[l] += 1;
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::InvalidDataset(format!(
                "class {} has no samples",
                class_names[c]
            )));
        }
        if spectra.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite reflectance".into()));
        }
        Ok(Self {
            spectra,
            labels,
            class_names,
            grid,
        })
    }

    pub fn spectra(&self) -> &Array2<f64> {
        &self.spectra
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_bands(&self) -> usize {
        self.grid.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order, keeping the full class table.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.spectra.select(Axis(0), indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.class_names.clone(),
            self.grid.clone(),
        )
    }
}

/// A rectangular block of pixels labeled with one class. Ranges are
/// inclusive pixel indices.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionOfInterest {
    pub class_name: String,
    pub lines: RangeInclusive<usize>,
    pub samples: RangeInclusive<usize>,
}

impl RegionOfInterest {
    pub fn new(
        class_name: impl Into<String>,
        lines: RangeInclusive<usize>,
        samples: RangeInclusive<usize>,
    ) -> Self {
        Self {
            class_name: class_name.into(),
            lines,
            samples,
        }
    }

    pub fn area(&self) -> usize {
        self.lines.clone().count() * self.samples.clone().count()
    }
}

/// One sample per pixel per ROI. Classes are numbered by first appearance in
/// `rois`; overlapping ROIs each contribute the shared pixels.
pub fn extract_rois(cube: &SpectralCube, rois: &[RegionOfInterest]) -> Result<LabeledDataset> {
    for roi in rois {
        let bad = |what: &str, r: &RangeInclusive<usize>, extent: usize| Error::RoiOutOfBounds {
            class: roi.class_name.clone(),
            message: format!(
                "{what} range {}..={} outside 0..{extent}",
                r.start(),
                r.end()
            ),
        };
        if roi.lines.is_empty() || *roi.lines.end() >= cube.lines() {
            return Err(bad("line", &roi.lines, cube.lines()));
        }
        if roi.samples.is_empty() || *roi.samples.end() >= cube.samples() {
            return Err(bad("sample", &roi.samples, cube.samples()));
        }
    }

    let mut class_names: Vec<String> = Vec::new();
    let mut index_of: HashMap<&str, usize> = HashMap::new();
    let total: usize = rois.iter().map(RegionOfInterest::area).sum();
    let mut spectra = Array2::zeros((total, cube.bands()));
    let mut labels = Vec::with_capacity(total);
    let mut row = 0;
    for roi in rois {
        let label = *index_of.entry(&roi.class_name).or_insert_with(|| {
            class_names.push(roi.class_name.clone());
            class_names.len() - 1
        });
        for line in roi.lines.clone() {
            for sample in roi.samples.clone() {
                spectra
                    .row_mut(row)
                    .assign(&cube.pixel(line, sample).mapv(f64::from));
                labels.push(label);
                row += 1;
            }
        }
    }
    LabeledDataset::new(spectra, labels, class_names, cube.grid().clone())
}

/// Per-class mean spectrum, one row per class in class-table order.
pub fn class_mean_spectra(ds: &LabeledDataset) -> Array2<f64> {
    let mut sums = Array2::<f64>::zeros((ds.n_classes(), ds.n_bands()));
    for (row, &label) in ds.spectra().outer_iter().zip(ds.labels()) {
        let mut acc = sums.row_mut(label);
        acc += &row;
    }
    for (mut acc, n) in sums.outer_iter_mut().zip(ds.class_counts()) {
        acc /= n as f64;
    }
    sums
}

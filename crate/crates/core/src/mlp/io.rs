//! Model files: JSON with a format tag, a version, explicit shapes, the
//! wavelength grid, class names, and row-major weight payloads. Floats are
//! written in shortest round-trip form, so save → load is bit-exact.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::MlpModel;
use crate::error::{Error, Result};
use crate::spectra_io::WavelengthGrid;

pub const FORMAT_TAG: &str = "specnet-mlp";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    bands: usize,
    hidden_units: usize,
    classes: usize,
    wavelengths_nm: Vec<f64>,
    class_names: Vec<String>,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl MlpModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = ModelFile {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            bands: self.n_bands(),
            hidden_units: self.n_hidden(),
            classes: self.n_classes(),
            wavelengths_nm: self.grid.as_slice().to_vec(),
            class_names: self.class_names.clone(),
            w1: self.w1.iter().copied().collect(),
            b1: self.b1.to_vec(),
            w2: self.w2.iter().copied().collect(),
            b2: self.b2.to_vec(),
        };
        let mut text = serde_json::to_string(&file).map_err(|e| Error::Model {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bad = |message: String| Error::Model {
            path: path.to_path_buf(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let f: ModelFile = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if f.format != FORMAT_TAG {
            return Err(bad(format!(
                "format tag {:?}, expected {FORMAT_TAG:?}",
                f.format
            )));
        }
        if f.version != FORMAT_VERSION {
            return Err(bad(format!("unsupported version {}", f.version)));
        }
        if f.wavelengths_nm.len() != f.bands || f.class_names.len() != f.classes {
            return Err(bad(
                "header shape disagrees with wavelength/class lists".into()
            ));
        }
        let grid = WavelengthGrid::new(f.wavelengths_nm).map_err(|e| bad(e.to_string()))?;
        let w1 = Array2::from_shape_vec((f.bands, f.hidden_units), f.w1).map_err(|_| {
            bad(format!(
                "w1 payload is not {} × {}",
                f.bands, f.hidden_units
            ))
        })?;
        let w2 = Array2::from_shape_vec((f.hidden_units, f.classes), f.w2).map_err(|_| {
            bad(format!(
                "w2 payload is not {} × {}",
                f.hidden_units, f.classes
            ))
        })?;
        MlpModel::new(
            w1,
            Array1::from(f.b1),
            w2,
            Array1::from(f.b2),
            grid,
            f.class_names,
        )
        .map_err(|e| bad(e.to_string()))
    }
}

use std::collections::HashMap;
use std::fs::File;
use std::path::Path;

use ndarray::Array2;

use super::{LabeledDataset, WavelengthGrid};
use crate::error::{Error, Result};

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads a dataset whose header row is the wavelengths followed by a label
/// column name, and whose rows are reflectances followed by a class name.
/// Classes are numbered by first appearance.
pub fn load_dataset_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let mut records = reader.records();

    let header = match records.next() {
        Some(r) => r.map_err(|e| parse_err(path, e.to_string()))?,
        None => return Err(Error::EmptyDataset),
    };
    if header.len() < 2 {
        return Err(parse_err(
            path,
            "header needs at least one wavelength and a label column",
        ));
    }
    let bands = header.len() - 1;
    let wavelengths = header
        .iter()
        .take(bands)
        .map(|w| {
            w.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(path, format!("header: wavelength {w:?} is not numeric")))
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = WavelengthGrid::new(wavelengths)?;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut index_of: HashMap<String, usize> = HashMap::new();
    for (row, record) in records.enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| parse_err(path, e.to_string()))?;
        if record.len() != bands + 1 {
            return Err(parse_err(
                path,
                format!(
                    "line {line}: {} fields, expected {} reflectances and a label",
                    record.len(),
                    bands
                ),
            ));
        }
        for field in record.iter().take(bands) {
            let v: f64 = field.trim().parse().map_err(|_| {
                parse_err(
                    path,
                    format!("line {line}: reflectance {field:?} is not numeric"),
                )
            })?;
            values.push(v);
        }
        let name = record[bands].trim().to_string();
        let next = class_names.len();
        let label = *index_of.entry(name.clone()).or_insert_with(|| {
            class_names.push(name);
            next
        });
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let spectra =
        Array2::from_shape_vec((labels.len(), bands), values).expect("row lengths were checked");
    LabeledDataset::new(spectra, labels, class_names, grid)
}

/// Writes `ds` in the format read by [`load_dataset_csv`]. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_dataset_csv(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => parse_err(path, format!("{other:?}")),
    };
    let mut writer = csv::Writer::from_path(path).map_err(io)?;
    let mut header: Vec<String> = ds.grid().as_slice().iter().map(|w| w.to_string()).collect();
    header.push("label".into());
    writer.write_record(&header).map_err(io)?;
    for (row, &label) in ds.spectra().outer_iter().zip(ds.labels()) {
        let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        fields.push(ds.class_names()[label].clone());
        writer.write_record(&fields).map_err(io)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

//! Minimal ENVI-style header + flat raster support: 32-bit float data in
//! BSQ, BIL, or BIP interleave, either byte order.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array3;

use super::{SpectralCube, WavelengthGrid};
use crate::error::{Error, Result};

const FLOAT32: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interleave {
    Bsq,
    Bil,
    Bip,
}

impl Interleave {
    /// Flat raster offset of element `(line, sample, band)`.
    fn offset(
        self,
        (lines, samples, bands): (usize, usize, usize),
        l: usize,
        s: usize,
        b: usize,
    ) -> usize {
        match self {
            Interleave::Bsq => (b * lines + l) * samples + s,
            Interleave::Bil => (l * bands + b) * samples + s,
            Interleave::Bip => (l * samples + s) * bands + b,
        }
    }
}

impl FromStr for Interleave {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bsq" => Ok(Interleave::Bsq),
            "bil" => Ok(Interleave::Bil),
            "bip" => Ok(Interleave::Bip),
            other => Err(format!("unknown interleave {other:?}")),
        }
    }
}

impl fmt::Display for Interleave {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interleave::Bsq => "bsq",
            Interleave::Bil => "bil",
            Interleave::Bip => "bip",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    Little,
    Big,
}

impl ByteOrder {
    fn code(self) -> u8 {
        match self {
            ByteOrder::Little => 0,
            ByteOrder::Big => 1,
        }
    }
}

struct Header {
    samples: usize,
    lines: usize,
    bands: usize,
    interleave: Interleave,
    byte_order: ByteOrder,
    offset: usize,
    wavelengths: Vec<f64>,
}

/// Splits header text into lowercase keys and raw values; brace values may
/// span lines.
fn header_fields(text: &str) -> std::result::Result<HashMap<String, String>, String> {
    let mut fields = HashMap::new();
    let mut lines = text.lines().enumerate();
    while let Some((n, line)) = lines.next() {
        let line = line.trim();
        if line.is_empty() || line.eq_ignore_ascii_case("ENVI") || line.starts_with(';') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`", n + 1));
        };
        let key = key.trim().to_ascii_lowercase();
        let mut value = value.trim().to_string();
        if value.starts_with('{') {
            while !value.contains('}') {
                match lines.next() {
                    Some((_, more)) => {
                        value.push(' ');
                        value.push_str(more.trim());
                    }
                    None => return Err(format!("unterminated braces for key {key:?}")),
                }
            }
            value = value
                .trim_start_matches('{')
                .trim_end_matches('}')
                .trim()
                .to_string();
        }
        if let Some(previous) = fields.get(&key) {
            if *previous != value {
                return Err(format!(
                    "contradictory values for {key:?}: {previous:?} and {value:?}"
                ));
            }
        }
        fields.insert(key, value);
    }
    Ok(fields)
}

fn parse_header(text: &str) -> std::result::Result<Header, String> {
    let fields = header_fields(text)?;
    let get = |key: &str| {
        fields
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| format!("missing field {key:?}"))
    };
    fn number<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
        v.trim()
            .parse()
            .map_err(|_| format!("field {key:?}: cannot parse {v:?}"))
    }

    let samples: usize = number("samples", get("samples")?)?;
    let lines: usize = number("lines", get("lines")?)?;
    let bands: usize = number("bands", get("bands")?)?;
    let data_type: u32 = number("data type", get("data type")?)?;
    if data_type != FLOAT32 {
        return Err(format!(
            "data type {data_type} unsupported; only 4 (32-bit float) is accepted"
        ));
    }
    let interleave: Interleave = get("interleave")?.parse()?;
    let byte_order = match number::<u8>("byte order", get("byte order")?)? {
        0 => ByteOrder::Little,
        1 => ByteOrder::Big,
        other => return Err(format!("byte order {other} is neither 0 nor 1")),
    };
    let offset = match fields.get("header offset") {
        Some(v) => number("header offset", v)?,
        None => 0,
    };
    let mut wavelengths = get("wavelength")?
        .split(',')
        .map(|w| number::<f64>("wavelength", w))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if wavelengths.len() != bands {
        return Err(format!(
            "bands = {bands} but {} wavelengths listed",
            wavelengths.len()
        ));
    }
    let units = fields
        .get("wavelength units")
        .map(|u| u.to_ascii_lowercase())
        .unwrap_or_default();
    let micrometers = matches!(
        units.as_str(),
        "micrometers" | "micrometer" | "um" | "microns"
    ) || (units.is_empty() && wavelengths.iter().all(|&w| w < 100.0));
    if micrometers {
        log::warn!("wavelengths appear to be in micrometers; converting to nanometers");
        wavelengths.iter_mut().for_each(|w| *w *= 1000.0);
    }
    Ok(Header {
        samples,
        lines,
        bands,
        interleave,
        byte_order,
        offset,
        wavelengths,
    })
}

/// Reads a cube into canonical `(line, sample, band)` order regardless of
/// the source interleave.
pub fn load_cube(
    raster_path: impl AsRef<Path>,
    header_path: impl AsRef<Path>,
) -> Result<SpectralCube> {
    let raster_path = raster_path.as_ref();
    let header_path = header_path.as_ref();
    let text = fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header = parse_header(&text).map_err(|message| Error::Header {
        path: header_path.to_path_buf(),
        message,
    })?;
    let grid = WavelengthGrid::new(header.wavelengths.clone()).map_err(|e| Error::Header {
        path: header_path.to_path_buf(),
        message: e.to_string(),
    })?;

    let bytes = fs::read(raster_path).map_err(|e| Error::io(raster_path, e))?;
    let dim = (header.lines, header.samples, header.bands);
    let count = dim.0 * dim.1 * dim.2;
    let expected = header.offset + count * 4;
    if bytes.len() != expected {
        return Err(Error::RasterLength {
            path: raster_path.to_path_buf(),
            expected: expected as u64,
            found: bytes.len() as u64,
        });
    }
    let payload = &bytes[header.offset..];
    let word = |i: usize| -> f32 {
        let raw: [u8; 4] = payload[4 * i..4 * i + 4].try_into().expect("4-byte chunk");
        match header.byte_order {
            ByteOrder::Little => f32::from_le_bytes(raw),
            ByteOrder::Big => f32::from_be_bytes(raw),
        }
    };
    let data = Array3::from_shape_fn(dim, |(l, s, b)| {
        word(header.interleave.offset(dim, l, s, b))
    });
    SpectralCube::new(grid, data)
}

/// Writes the raster and a matching header.
pub fn write_cube(
    cube: &SpectralCube,
    raster_path: impl AsRef<Path>,
    header_path: impl AsRef<Path>,
    interleave: Interleave,
    byte_order: ByteOrder,
) -> Result<()> {
    let raster_path = raster_path.as_ref();
    let header_path = header_path.as_ref();
    let dim = cube.data().dim();
    let mut flat = vec![0f32; dim.0 * dim.1 * dim.2];
    for ((l, s, b), &v) in cube.data().indexed_iter() {
        flat[interleave.offset(dim, l, s, b)] = v;
    }
    let mut bytes = Vec::with_capacity(flat.len() * 4);
    for v in flat {
        match byte_order {
            ByteOrder::Little => bytes.extend_from_slice(&v.to_le_bytes()),
            ByteOrder::Big => bytes.extend_from_slice(&v.to_be_bytes()),
        }
    }
    fs::write(raster_path, bytes).map_err(|e| Error::io(raster_path, e))?;

    let mut text = String::from("ENVI\n");
    let _ = writeln!(text, "samples = {}", dim.1);
    let _ = writeln!(text, "lines = {}", dim.0);
    let _ = writeln!(text, "bands = {}", dim.2);
    let _ = writeln!(text, "header offset = 0");
    let _ = writeln!(text, "file type = ENVI Standard");
    let _ = writeln!(text, "data type = {FLOAT32}");
    let _ = writeln!(text, "interleave = {interleave}");
    let _ = writeln!(text, "byte order = {}", byte_order.code());
    let _ = writeln!(text, "wavelength units = Nanometers");
    let wl: Vec<String> = cube
        .grid()
        .as_slice()
        .iter()
        .map(|w| w.to_string())
        .collect();
    let _ = writeln!(text, "wavelength = {{ {} }}", wl.join(", "));
    fs::write(header_path, text).map_err(|e| Error::io(header_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, header: &str, raster: &[u8]) -> (std::path::PathBuf, std::path::PathBuf) {
        let h = dir.join("c.hdr");
        let r = dir.join("c.img");
        fs::write(&h, header).unwrap();
        fs::write(&r, raster).unwrap();
        (r, h)
    }

    fn le(values: &[f32]) -> Vec<u8> {
        values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    const MINIMAL: &str = "ENVI\nsamples = 2\nlines = 1\nbands = 3\ninterleave = bsq\n\
                           data type = 4\nbyte order = 0\nwavelength = {500, 600,\n 700}\n";

    #[test]
    fn minimal_bsq() {
        let dir = tempfile::tempdir().unwrap();
        // bsq: band-major, so [b0s0, b0s1, b1s0, b1s1, b2s0, b2s1]
        let (r, h) = write(dir.path(), MINIMAL, &le(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let cube = load_cube(&r, &h).unwrap();
        assert_eq!((cube.lines(), cube.samples(), cube.bands()), (1, 2, 3));
        assert_eq!(cube.pixel(0, 0).to_vec(), vec![1.0, 3.0, 5.0]);
        assert_eq!(cube.pixel(0, 1).to_vec(), vec![2.0, 4.0, 6.0]);
        assert_eq!(cube.grid().as_slice(), &[500.0, 600.0, 700.0]);
    }

    #[test]
    fn wrong_raster_length() {
        let dir = tempfile::tempdir().unwrap();
        let (r, h) = write(dir.path(), MINIMAL, &le(&[1.0; 5]));
        assert!(matches!(
            load_cube(&r, &h),
            Err(Error::RasterLength {
                expected: 24,
                found: 20,
                ..
            })
        ));
    }

    #[test]
    fn wavelength_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let header = MINIMAL.replace("{500, 600,\n 700}", "{500, 600}");
        let (r, h) = write(dir.path(), &header, &le(&[0.0; 6]));
        assert!(matches!(load_cube(&r, &h), Err(Error::Header { .. })));
    }

    #[test]
    fn header_errors() {
        let dir = tempfile::tempdir().unwrap();
        for header in [
            MINIMAL.replace("data type = 4", "data type = 12"),
            MINIMAL.replace("interleave = bsq\n", ""),
            MINIMAL.replace("byte order = 0", "byte order = 3"),
            MINIMAL.replace("{500, 600,\n 700}", "{500, 600, 600}"),
            format!("{MINIMAL}samples = 3\n"),
        ] {
            let (r, h) = write(dir.path(), &header, &le(&[0.0; 6]));
            assert!(load_cube(&r, &h).is_err(), "accepted:\n{header}");
        }
        // identical duplicate is not a contradiction
        let (r, h) = write(
            dir.path(),
            &format!("{MINIMAL}samples = 2\n"),
            &le(&[0.0; 6]),
        );
        assert!(load_cube(&r, &h).is_ok());
    }

    #[test]
    fn micrometers_are_converted() {
        let dir = tempfile::tempdir().unwrap();
        let header = MINIMAL.replace("{500, 600,\n 700}", "{0.5, 0.6, 0.7}");
        let (r, h) = write(dir.path(), &header, &le(&[0.0; 6]));
        let cube = load_cube(&r, &h).unwrap();
        assert_eq!(cube.grid().as_slice(), &[500.0, 600.0, 700.0]);
    }

    #[test]
    fn big_endian_and_offset() {
        let dir = tempfile::tempdir().unwrap();
        let header = MINIMAL
            .replace("byte order = 0", "byte order = 1")
            .replace("interleave = bsq", "interleave = bip\nheader offset = 3");
        let mut raster = vec![9u8; 3];
        raster.extend(
            [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0]
                .iter()
                .flat_map(|v| v.to_be_bytes()),
        );
        let (r, h) = write(dir.path(), &header, &raster);
        let cube = load_cube(&r, &h).unwrap();
        assert_eq!(cube.pixel(0, 0).to_vec(), vec![1.0, 2.0, 3.0]);
        assert_eq!(cube.pixel(0, 1).to_vec(), vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn bil_layout() {
        let dir = tempfile::tempdir().unwrap();
        let header = MINIMAL.replace("interleave = bsq", "interleave = bil");
        // one line: [b0s0, b0s1, b1s0, b1s1, b2s0, b2s1] -- same as bsq when lines = 1
        let (r, h) = write(dir.path(), &header, &le(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let cube = load_cube(&r, &h).unwrap();
        assert_eq!(cube.pixel(0, 1).to_vec(), vec![2.0, 4.0, 6.0]);
    }
}

//! File artifacts: class maps, index maps and weight heatmaps as binary PPM
//! (P6), and red/NIR scatter data as CSV.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::spectra_io::WavelengthGrid;

/// Label value for pixels that carry no class.
pub const UNLABELED: usize = usize::MAX;

pub const SCATTER_CSV_HEADER: &str = "x_reflectance,y_reflectance,label";

const BASE_COLORS: [[u8; 3]; 16] = [
    [0, 0, 255],
    [0, 255, 0],
    [255, 0, 0],
    [255, 255, 0],
    [0, 255, 255],
    [255, 0, 255],
    [255, 128, 0],
    [128, 0, 255],
    [128, 128, 128],
    [255, 255, 255],
    [128, 64, 0],
    [255, 128, 192],
    [128, 128, 0],
    [0, 128, 128],
    [0, 0, 128],
    [128, 0, 0],
];

const RESERVED_UNLABELED: [u8; 3] = [0, 0, 0];

/// Magenta marks cells where an index is undefined.
pub const INDEX_UNDEFINED_COLOR: [u8; 3] = [255, 0, 255];

/// Class index → RGB. Classes 0, 1, 2 are blue, green, red.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    colors: Vec<[u8; 3]>,
    unlabeled: [u8; 3],
}

impl Palette {
    pub fn new(colors: Vec<[u8; 3]>) -> Result<Self> {
        for (i, c) in colors.iter().enumerate() {
            if *c == RESERVED_UNLABELED || colors[..i].contains(c) {
                return Err(Error::Config(format!(
                    "palette color {c:?} for class {i} is repeated or reserved"
                )));
            }
        }
        Ok(Self {
            colors,
            unlabeled: RESERVED_UNLABELED,
        })
    }

    pub fn for_classes(n: usize) -> Result<Self> {
        if n > BASE_COLORS.len() {
            return Err(Error::Config(format!(
                "default palette has {} colors, {n} classes requested",
                BASE_COLORS.len()
            )));
        }
        Self::new(BASE_COLORS[..n].to_vec())
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn unlabeled(&self) -> [u8; 3] {
        self.unlabeled
    }

    pub fn color(&self, label: usize) -> Result<[u8; 3]> {
        if label == UNLABELED {
            return Ok(self.unlabeled);
        }
        self.colors
            .get(label)
            .copied()
            .ok_or(Error::LabelOutsidePalette {
                label,
                size: self.colors.len(),
            })
    }

    /// Inverse lookup; `Some(UNLABELED)` for the reserved color.
    pub fn label_of(&self, rgb: [u8; 3]) -> Option<usize> {
        if rgb == self.unlabeled {
            return Some(UNLABELED);
        }
        self.colors.iter().position(|&c| c == rgb)
    }
}

pub fn ppm_header(width: usize, height: usize) -> String {
    format!("P6\n{width} {height}\n255\n")
}

/// Total file size of a `width × height` P6 image.
pub fn ppm_len(width: usize, height: usize) -> usize {
    ppm_header(width, height).len() + 3 * width * height
}

fn encode_ppm(width: usize, height: usize, pixels: impl Iterator<Item = [u8; 3]>) -> Vec<u8> {
    let mut out = ppm_header(width, height).into_bytes();
    out.reserve(3 * width * height);
    pixels.for_each(|p| out.extend_from_slice(&p));
    debug_assert_eq!(out.len(), ppm_len(width, height));
    out
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Lines × samples label map as P6 bytes.
pub fn class_map_ppm(labels: &Array2<usize>, palette: &Palette) -> Result<Vec<u8>> {
    let pixels = labels
        .iter()
        .map(|&l| palette.color(l))
        .collect::<Result<Vec<_>>>()?;
    let (lines, samples) = labels.dim();
    Ok(encode_ppm(samples, lines, pixels.into_iter()))
}

pub fn write_class_map(
    labels: &Array2<usize>,
    palette: &Palette,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_bytes(path.as_ref(), &class_map_ppm(labels, palette)?)
}

/// Bands tall × neurons wide; column `j` shows neuron `order[j]`. Gray
/// levels are `round((v − min) / (max − min) · 255)` over the whole matrix,
/// or 128 everywhere when the matrix is constant.
pub fn weight_heatmap_ppm(weights: &Array2<f64>, order: &[usize]) -> Result<Vec<u8>> {
    let (bands, neurons) = weights.dim();
    let mut seen = vec![false; neurons];
    let valid = order.len() == neurons
        && order
            .iter()
            .all(|&j| j < neurons && !std::mem::replace(&mut seen[j], true));
    if !valid {
        return Err(Error::Config(format!(
            "neuron order is not a permutation of 0..{neurons}"
        )));
    }
    let (min, max) = weights
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let gray = |v: f64| -> u8 {
        if max > min {
            ((v - min) / (max - min) * 255.0).round() as u8
        } else {
            128
        }
    };
    let pixels = (0..bands)
        .flat_map(|b| order.iter().map(move |&j| (b, j)))
        .map(|(b, j)| {
            let g = gray(weights[[b, j]]);
            [g, g, g]
        });
    Ok(encode_ppm(neurons, bands, pixels))
}

pub fn write_weight_heatmap(
    weights: &Array2<f64>,
    order: &[usize],
    path: impl AsRef<Path>,
) -> Result<()> {
    write_bytes(path.as_ref(), &weight_heatmap_ppm(weights, order)?)
}

/// Index values in [−1, 1] as gray 0..255; NaN cells in magenta.
pub fn index_map_ppm(map: &Array2<f64>) -> Vec<u8> {
    let (lines, samples) = map.dim();
    let pixels = map.iter().map(|&v| {
        if v.is_nan() {
            INDEX_UNDEFINED_COLOR
        } else {
            let g = ((v.clamp(-1.0, 1.0) + 1.0) / 2.0 * 255.0).round() as u8;
            [g, g, g]
        }
    });
    encode_ppm(samples, lines, pixels)
}

pub fn write_index_map(map: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &index_map_ppm(map))
}

/// Reflectance at the bands nearest `x_nm` and `y_nm`, one row per sample.
pub fn export_scatter_csv(
    spectra: &Array2<f64>,
    labels: &[usize],
    grid: &WavelengthGrid,
    x_nm: f64,
    y_nm: f64,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if spectra.nrows() != labels.len() {
        return Err(Error::shape(
            format!("{} labels", spectra.nrows()),
            labels.len(),
        ));
    }
    if spectra.ncols() != grid.len() {
        return Err(Error::shape(
            format!("{} bands", grid.len()),
            spectra.ncols(),
        ));
    }
    let (xb, yb) = (grid.nearest_band(x_nm), grid.nearest_band(y_nm));
    let mut text = String::from(SCATTER_CSV_HEADER);
    text.push('\n');
    for (row, label) in spectra.rows().into_iter().zip(labels) {
        let row: ArrayView1<'_, f64> = row;
        text.push_str(&format!("{},{},{label}\n", row[xb], row[yb]));
    }
    write_bytes(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_pixel_map() {
        let p = Palette::for_classes(3).unwrap();
        let bytes = class_map_ppm(&array![[0usize]], &p).unwrap();
        assert_eq!(bytes, b"P6\n1 1\n255\n\x00\x00\xff");
    }

    #[test]
    fn header_and_length_for_two_by_three() {
        let p = Palette::for_classes(3).unwrap();
        let labels = array![[0usize, 1, 2], [2, 1, 0]];
        let bytes = class_map_ppm(&labels, &p).unwrap();
        assert!(bytes.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(bytes.len(), "P6\n3 2\n255\n".len() + 18);
        assert_eq!(bytes.len(), ppm_len(3, 2));
    }

    #[test]
    fn reference_reader_inverts_the_palette() {
        let p = Palette::for_classes(10).unwrap();
        let labels = Array2::from_shape_fn((7, 5), |(l, s)| {
            if (l, s) == (3, 3) {
                UNLABELED
            } else {
                (l * 5 + s) % 10
            }
        });
        let bytes = class_map_ppm(&labels, &p).unwrap();
        let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Pnm)
            .unwrap()
            .to_rgb8();
        assert_eq!((img.width(), img.height()), (5, 7));
        let back = Array2::from_shape_fn((7, 5), |(l, s)| {
            p.label_of(img.get_pixel(s as u32, l as u32).0).unwrap()
        });
        assert_eq!(back, labels);
    }

    #[test]
    fn label_outside_palette() {
        let p = Palette::for_classes(2).unwrap();
        assert!(matches!(
            class_map_ppm(&array![[0usize, 2]], &p),
            Err(Error::LabelOutsidePalette { label: 2, size: 2 })
        ));
    }

    #[test]
    fn palette_rules() {
        assert!(Palette::new(vec![[1, 2, 3], [1, 2, 3]]).is_err());
        assert!(Palette::new(vec![RESERVED_UNLABELED]).is_err());
        assert!(Palette::for_classes(17).is_err());
        let p = Palette::for_classes(16).unwrap();
        assert_eq!(p.color(0).unwrap(), [0, 0, 255]);
        assert_eq!(p.color(1).unwrap(), [0, 255, 0]);
        assert_eq!(p.color(2).unwrap(), [255, 0, 0]);
    }

    fn payload(bytes: &[u8], w: usize, h: usize) -> &[u8] {
        &bytes[ppm_header(w, h).len()..]
    }

    #[test]
    fn heatmap_endpoints_and_constant() {
        let bytes = weight_heatmap_ppm(&array![[0.0, 1.0], [1.0, 0.0]], &[0, 1]).unwrap();
        let gray: Vec<u8> = payload(&bytes, 2, 2).chunks(3).map(|c| c[0]).collect();
        assert_eq!(gray, vec![0, 255, 255, 0]);

        let bytes = weight_heatmap_ppm(&Array2::from_elem((3, 4), -0.7), &[3, 2, 1, 0]).unwrap();
        assert!(payload(&bytes, 4, 3).iter().all(|&v| v == 128));
    }

    #[test]
    fn heatmap_columns_follow_order() {
        let w = array![[0.1, 0.5, -0.3], [0.9, -1.0, 0.2]];
        let plain = weight_heatmap_ppm(&w, &[0, 1, 2]).unwrap();
        let permuted = weight_heatmap_ppm(&w, &[2, 0, 1]).unwrap();
        let px = |bytes: &[u8], r: usize, c: usize| payload(bytes, 3, 2)[3 * (r * 3 + c)];
        for r in 0..2 {
            for (c, &src) in [2, 0, 1].iter().enumerate() {
                assert_eq!(px(&permuted, r, c), px(&plain, r, src));
            }
        }
        assert!(weight_heatmap_ppm(&w, &[0, 0, 1]).is_err());
        assert!(weight_heatmap_ppm(&w, &[0, 1]).is_err());
    }

    #[test]
    fn index_map_gray_and_undefined() {
        let bytes = index_map_ppm(&array![[-1.0, 0.0, 1.0, f64::NAN]]);
        assert_eq!(
            payload(&bytes, 4, 1),
            &[0, 0, 0, 128, 128, 128, 255, 255, 255, 255, 0, 255]
        );
    }

    #[test]
    fn scatter_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let grid = WavelengthGrid::new(vec![650.0, 700.0, 800.0]).unwrap();
        let spectra = array![[0.1, 0.2, 0.7], [1.0 / 3.0, 0.25, 0.5]];
        export_scatter_csv(&spectra, &[0, 2], &grid, 656.0, 802.0, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SCATTER_CSV_HEADER));
        let rows: Vec<Vec<f64>> = lines
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows, vec![vec![0.1, 0.7, 0.0], vec![1.0 / 3.0, 0.5, 2.0]]);

        export_scatter_csv(
            &spectra.slice(ndarray::s![..1, ..]).to_owned(),
            &[1],
            &grid,
            700.0,
            700.0,
            &path,
        )
        .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{SCATTER_CSV_HEADER}\n0.2,0.2,1\n"));
    }
}

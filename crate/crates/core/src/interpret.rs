//! Reading a trained network through its weights.
//!
//! Hidden neurons are tied to classes through the output layer: a neuron's
//! row of `w2` says how strongly it votes for each class. From there we can
//! order neurons for display, pull the band-weight profile of the neurons a
//! class leans on most, score how much that profile contrasts two wavelength
//! windows, and check whether predicted labels separate in the (Red, NIR)
//! plane along lines through the origin, i.e. along iso-NDVI lines.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::mlp::{argmax, MlpModel};
use crate::spectra_io::{WavelengthGrid, Window};

pub const DEFAULT_TOP_K: usize = 10;

/// Number of through-origin slopes scanned by [`ndvi_geometry_check`].
pub const SLOPE_STEPS: usize = 512;

pub const PROFILE_CSV_HEADER: &str = "wavelength_nm,class_mean_reflectance,weight_mean,weight_std";
pub const ASSIGNMENT_CSV_HEADER: &str = "neuron,assigned_class,class_name,assignment_weight";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronAssignment {
    pub neuron_index: usize,
    pub assigned_class: usize,
    /// The winning `w2` entry.
    pub assignment_weight: f64,
}

/// Per-band statistics of the input weights of a class's top-k neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureProfile {
    pub class_index: usize,
    pub neuron_indices: Vec<usize>,
    pub weight_mean: Array1<f64>,
    pub weight_std: Array1<f64>,
}

/// Each hidden neuron goes to the class with its largest output weight
/// (ties to the lower class index).
pub fn assign_neurons(model: &MlpModel) -> Vec<NeuronAssignment> {
    model
        .w2()
        .outer_iter()
        .enumerate()
        .map(|(neuron_index, row)| {
            let assigned_class = argmax(row.iter().copied());
            NeuronAssignment {
                neuron_index,
                assigned_class,
                assignment_weight: row[assigned_class],
            }
        })
        .collect()
}

/// Neuron order for heatmaps: grouped by assigned class in class order, and
/// by descending assignment weight within a class.
pub fn sort_neurons_for_display(model: &MlpModel) -> Vec<usize> {
    let mut assignments = assign_neurons(model);
    // stable: equal weights keep ascending neuron order
    assignments.sort_by(|a, b| {
        a.assigned_class
            .cmp(&b.assigned_class)
            .then(b.assignment_weight.total_cmp(&a.assignment_weight))
    });
    assignments.into_iter().map(|a| a.neuron_index).collect()
}

/// Mean and population standard deviation, per band, of the `w1` columns of
/// the `k` neurons with the highest raw `w2[·, class_index]`. Biases are not
/// included.
pub fn top_k_profile(model: &MlpModel, class_index: usize, k: usize) -> Result<FeatureProfile> {
    if k == 0 || k > model.n_hidden() {
        return Err(Error::Config(format!(
            "k = {k} must be between 1 and the hidden width {}",
            model.n_hidden()
        )));
    }
    if class_index >= model.n_classes() {
        return Err(Error::Config(format!(
            "class index {class_index} but the model has {} classes",
            model.n_classes()
        )));
    }
    let votes = model.w2().column(class_index);
    let mut ranked: Vec<usize> = (0..model.n_hidden()).collect();
    ranked.sort_by(|&a, &b| votes[b].total_cmp(&votes[a]));
    ranked.truncate(k);

    let selected = model.w1().select(ndarray::Axis(1), &ranked);
    let weight_mean = selected.mean_axis(ndarray::Axis(1)).expect("k ≥ 1");
    let weight_std = selected.std_axis(ndarray::Axis(1), 0.0);
    Ok(FeatureProfile {
        class_index,
        neuron_indices: ranked,
        weight_mean,
        weight_std,
    })
}

/// How many of the profile's neurons are also argmax-assigned to its class.
pub fn top_k_overlap(profile: &FeatureProfile, assignments: &[NeuronAssignment]) -> usize {
    profile
        .neuron_indices
        .iter()
        .filter(|&&n| assignments[n].assigned_class == profile.class_index)
        .count()
}

fn window_mean(values: &Array1<f64>, grid: &WavelengthGrid, window: Window) -> Result<f64> {
    let bands = grid.bands_in(window);
    if bands.is_empty() {
        return Err(Error::EmptyWindow {
            lo: window.lo(),
            hi: window.hi(),
        });
    }
    Ok(bands.iter().map(|&b| values[b]).sum::<f64>() / bands.len() as f64)
}

/// Mean profile weight over `high` minus mean over `low`. Positive means the
/// class's neurons respond to reflectance in `high` more than in `low`.
pub fn contrast_score(
    profile: &FeatureProfile,
    grid: &WavelengthGrid,
    low: Window,
    high: Window,
) -> Result<f64> {
    if profile.weight_mean.len() != grid.len() {
        return Err(Error::shape(
            format!("{} bands", grid.len()),
            profile.weight_mean.len(),
        ));
    }
    Ok(window_mean(&profile.weight_mean, grid, high)?
        - window_mean(&profile.weight_mean, grid, low)?)
}

/// Best through-origin linear separation of one class pair in (R, NIR).
#[derive(Debug, Clone, PartialEq)]
pub struct PairSeparation {
    pub class_a: usize,
    pub class_b: usize,
    /// Fraction of the pair's points on their class's side of the best line.
    pub fraction: f64,
    /// Slope of the best line, `NIR = slope · R`.
    pub slope: f64,
    /// Which class lies above the line.
    pub upper_class: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryReport {
    pub red_band: usize,
    pub nir_band: usize,
    pub pairs: Vec<PairSeparation>,
}

impl GeometryReport {
    pub fn min_fraction(&self) -> Option<f64> {
        self.pairs.iter().map(|p| p.fraction).reduce(f64::min)
    }

    /// Plain-text summary, one pair per line, 4-decimal numbers.
    pub fn render(&self, grid: &WavelengthGrid, class_names: &[String]) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "red_band {} ({:.4} nm), nir_band {} ({:.4} nm)",
            self.red_band,
            grid.as_slice()[self.red_band],
            self.nir_band,
            grid.as_slice()[self.nir_band]
        );
        for p in &self.pairs {
            let name = |c: usize| class_names.get(c).map(String::as_str).unwrap_or("?");
            let _ = writeln!(
                out,
                "{} vs {}: separation {:.4} slope {:.4} upper {}",
                name(p.class_a),
                name(p.class_b),
                p.fraction,
                p.slope,
                name(p.upper_class)
            );
        }
        out
    }
}

/// The scanned slopes: `tan` of `SLOPE_STEPS` angles evenly spaced strictly
/// inside `(0, π/2)`.
pub fn candidate_slopes() -> Vec<f64> {
    (1..=SLOPE_STEPS)
        .map(|i| (FRAC_PI_2 * i as f64 / (SLOPE_STEPS + 1) as f64).tan())
        .collect()
}

/// Projects samples onto the bands nearest `red_nm` and `nir_nm` and, for
/// every pair of classes present, scans through-origin lines for the one that
/// puts the most points on their class's side (strictly above vs on/below).
/// The reported slope is the middle of the first run of optimal slopes.
pub fn ndvi_geometry_check(
    labels: &[usize],
    spectra: ArrayView2<'_, f64>,
    grid: &WavelengthGrid,
    red_nm: f64,
    nir_nm: f64,
) -> Result<GeometryReport> {
    if spectra.nrows() != labels.len() {
        return Err(Error::shape(
            format!("{} rows", labels.len()),
            spectra.nrows(),
        ));
    }
    if spectra.ncols() != grid.len() {
        return Err(Error::shape(
            format!("{} bands", grid.len()),
            spectra.ncols(),
        ));
    }
    let red_band = grid.nearest_band(red_nm);
    let nir_band = grid.nearest_band(nir_nm);
    let points: Vec<(f64, f64)> = spectra
        .outer_iter()
        .map(|row| (row[red_band], row[nir_band]))
        .collect();
    if !points.is_empty() && points.iter().all(|&(r, n)| r == 0.0 && n == 0.0) {
        return Err(Error::Degenerate(
            "every (R, NIR) projection is zero".into(),
        ));
    }

    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut members: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_classes];
    for (&l, &p) in labels.iter().zip(&points) {
        members[l].push(p);
    }
    let present: Vec<usize> = (0..n_classes).filter(|&c| !members[c].is_empty()).collect();
    let slopes = candidate_slopes();

    let mut pairs = Vec::new();
    for (i, &a) in present.iter().enumerate() {
        for &b in &present[i + 1..] {
            let total = (members[a].len() + members[b].len()) as f64;
            let above =
                |pts: &[(f64, f64)], m: f64| pts.iter().filter(|&&(r, n)| n > m * r).count();
            // (correct count, upper class) per slope
            let scores: Vec<(usize, usize)> = slopes
                .iter()
                .map(|&m| {
                    let a_up = above(&members[a], m);
                    let b_up = above(&members[b], m);
                    let a_over_b = a_up + (members[b].len() - b_up);
                    let b_over_a = b_up + (members[a].len() - a_up);
                    if a_over_b >= b_over_a {
                        (a_over_b, a)
                    } else {
                        (b_over_a, b)
                    }
                })
                .collect();
            let best = scores.iter().map(|s| s.0).max().expect("slopes nonempty");
            let first = scores.iter().position(|s| s.0 == best).expect("max exists");
            let run = scores[first..].iter().take_while(|s| s.0 == best).count();
            let mid = first + (run - 1) / 2;
            let slope = if run % 2 == 1 {
                slopes[mid]
            } else {
                0.5 * (slopes[mid] + slopes[mid + 1])
            };
            pairs.push(PairSeparation {
                class_a: a,
                class_b: b,
                fraction: best as f64 / total,
                slope,
                upper_class: scores[mid].1,
            });
        }
    }
    Ok(GeometryReport {
        red_band,
        nir_band,
        pairs,
    })
}

/// Writes the profile next to the class mean spectrum, one row per band.
pub fn export_profile_csv(
    profile: &FeatureProfile,
    class_mean_spectrum: &Array1<f64>,
    grid: &WavelengthGrid,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let n = grid.len();
    if profile.weight_mean.len() != n
        || profile.weight_std.len() != n
        || class_mean_spectrum.len() != n
    {
        return Err(Error::shape(
            format!("{n} bands"),
            format!(
                "mean {} / std {} / spectrum {}",
                profile.weight_mean.len(),
                profile.weight_std.len(),
                class_mean_spectrum.len()
            ),
        ));
    }
    let mut out = String::from(PROFILE_CSV_HEADER);
    out.push('\n');
    for b in 0..n {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            grid.as_slice()[b],
            class_mean_spectrum[b],
            profile.weight_mean[b],
            profile.weight_std[b]
        );
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn export_assignments_csv(
    assignments: &[NeuronAssignment],
    class_names: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from(ASSIGNMENT_CSV_HEADER);
    out.push('\n');
    for a in assignments {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            a.neuron_index, a.assigned_class, class_names[a.assigned_class], a.assignment_weight
        );
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Transposed view of `w1` restricted to the profile's neurons
/// (`k × bands`), the matrix shown above each profile plot.
pub fn profile_weight_matrix(model: &MlpModel, profile: &FeatureProfile) -> Array2<f64> {
    model
        .w1()
        .select(ndarray::Axis(1), &profile.neuron_indices)
        .reversed_axes()
}

use ndarray::Array1;
use rand_distr::{Distribution, Uniform};

use super::{MlpConfig, MlpModel};
use crate::error::{Error, Result};
use crate::rng;
use crate::spectra_io::LabeledDataset;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Denominator floor for the relative error, so parameters whose true
/// gradient is ~0 are judged on absolute error.
const REL_FLOOR: f64 = 1e-6;

const MAX_SAMPLES: usize = 20;
const MAX_BANDS: usize = 10;

/// Compares analytic gradients of the mean cross-entropy against central
/// finite differences for every parameter of a freshly initialized model
/// (seeded by `cfg.seed`, biases drawn uniformly from ±0.5 so the bias path
/// is exercised). Dropout is off. Returns the largest
/// `|analytic − numeric| / max(|analytic|, |numeric|, 1e-6)`.
pub fn gradient_check(cfg: &MlpConfig, ds: &LabeledDataset) -> Result<f64> {
    if ds.n_samples() > MAX_SAMPLES || ds.n_bands() > MAX_BANDS {
        return Err(Error::Config(format!(
            "gradient check is limited to {MAX_SAMPLES} samples and {MAX_BANDS} bands, got {} × {}",
            ds.n_samples(),
            ds.n_bands()
        )));
    }
    let mut rng = rng::seeded(cfg.seed);
    let mut model = MlpModel::initialize(
        ds.grid().clone(),
        ds.class_names().to_vec(),
        cfg.hidden_units,
        &mut rng,
    )?;
    let bias = Uniform::new(-0.5, 0.5).expect("valid range");
    model.b1 = Array1::from_shape_simple_fn(model.n_hidden(), || bias.sample(&mut rng));
    model.b2 = Array1::from_shape_simple_fn(model.n_classes(), || bias.sample(&mut rng));

    let (_, analytic) = model.gradients(ds)?;
    let analytic: Vec<Vec<f64>> = analytic.as_slices().iter().map(|g| g.to_vec()).collect();

    let mut worst = 0.0f64;
    for (tensor, grads) in analytic.iter().enumerate() {
        for (i, &a) in grads.iter().enumerate() {
            let original = model.params_mut()[tensor][i];
            model.params_mut()[tensor][i] = original + FD_STEP;
            let up = model.loss(ds)?;
            model.params_mut()[tensor][i] = original - FD_STEP;
            let down = model.loss(ds)?;
            model.params_mut()[tensor][i] = original;

            let numeric = (up - down) / (2.0 * FD_STEP);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

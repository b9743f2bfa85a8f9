//! Shallow classifier: dense(hidden, ReLU) → inverted dropout → dense(classes)
//! → softmax, trained on mean cross-entropy with adaptive-moment updates.
//!
//! Inputs are raw fractional reflectance; nothing is normalized, so the
//! first-layer weights can be read directly against reflectance spectra.
//!
//! Weight layout: `w1` is `bands × hidden` (column `j` is hidden neuron `j`'s
//! band weights), `w2` is `hidden × classes`.

mod adam;
mod gradcheck;
mod io;

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Uniform};

use crate::error::{Error, Result};
use crate::rng::{self, SeededRng};
use crate::spectra_io::{LabeledDataset, WavelengthGrid};

pub use adam::Adam;
pub use gradcheck::{gradient_check, FD_STEP};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden_units: usize,
    pub dropout_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_units: 128,
            dropout_rate: 0.2,
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.001,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.hidden_units == 0 {
            return bad("hidden units must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout rate {} outside [0, 1)", self.dropout_rate));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!(
                "learning rate {} must be positive",
                self.learning_rate
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array2<f64>,
    b2: Array1<f64>,
    grid: WavelengthGrid,
    class_names: Vec<String>,
}

/// Gradients of the mean loss, shaped like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean batch loss for each epoch.
    pub epoch_losses: Vec<f64>,
    /// Inference-mode accuracy on the training set after the last epoch.
    pub train_accuracy: f64,
    pub elapsed: Duration,
}

impl MlpModel {
    pub fn new(
        w1: Array2<f64>,
        b1: Array1<f64>,
        w2: Array2<f64>,
        b2: Array1<f64>,
        grid: WavelengthGrid,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let (bands, hidden) = w1.dim();
        let classes = class_names.len();
        if bands != grid.len() {
            return Err(Error::shape(
                format!("w1 with {} rows", grid.len()),
                format!("{bands} rows"),
            ));
        }
        if b1.len() != hidden || w2.nrows() != hidden {
            return Err(Error::shape(
                format!("hidden width {hidden}"),
                format!("b1 {} / w2 rows {}", b1.len(), w2.nrows()),
            ));
        }
        if w2.ncols() != classes || b2.len() != classes {
            return Err(Error::shape(
                format!("{classes} classes"),
                format!("w2 cols {} / b2 {}", w2.ncols(), b2.len()),
            ));
        }
        if hidden == 0 || classes == 0 {
            return Err(Error::shape(
                "non-empty layers",
                format!("{hidden} hidden, {classes} classes"),
            ));
        }
        let finite = w1
            .iter()
            .chain(&b1)
            .chain(&w2)
            .chain(&b2)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("model weights must be finite".into()));
        }
        Ok(Self {
            w1: w1.as_standard_layout().into_owned(),
            b1,
            w2: w2.as_standard_layout().into_owned(),
            b2,
            grid,
            class_names,
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn initialize(
        grid: WavelengthGrid,
        class_names: Vec<String>,
        hidden_units: usize,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let bands = grid.len();
        let classes = class_names.len();
        let w1 = glorot(bands, hidden_units, rng);
        let w2 = glorot(hidden_units, classes, rng);
        Self::new(
            w1,
            Array1::zeros(hidden_units),
            w2,
            Array1::zeros(classes),
            grid,
            class_names,
        )
    }

    pub fn w1(&self) -> &Array2<f64> {
        &self.w1
    }

    pub fn b1(&self) -> &Array1<f64> {
        &self.b1
    }

    pub fn w2(&self) -> &Array2<f64> {
        &self.w2
    }

    pub fn b2(&self) -> &Array1<f64> {
        &self.b2
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_bands(&self) -> usize {
        self.w1.nrows()
    }

    pub fn n_hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.w2.ncols()
    }

    fn check_input(&self, x: &ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.n_bands() {
            return Err(Error::shape(
                format!("{} bands", self.n_bands()),
                format!("{} columns", x.ncols()),
            ));
        }
        Ok(())
    }

    fn hidden_pre(&self, x: &ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.w1) + &self.b1
    }

    /// Class probabilities per row (inference mode: no dropout).
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let hidden = self.hidden_pre(&x).mapv_into(relu);
        let mut out = hidden.dot(&self.w2) + &self.b2;
        softmax_rows(&mut out);
        Ok(out)
    }

    /// Argmax class per row; ties go to the lower class index.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        Ok(self
            .forward(x)?
            .outer_iter()
            .map(|p| argmax(p.iter().copied()))
            .collect())
    }

    pub fn accuracy(&self, ds: &LabeledDataset) -> Result<f64> {
        let predicted = self.predict(ds.spectra().view())?;
        Ok(accuracy_of(&predicted, ds.labels()))
    }

    /// Mean cross-entropy and its gradients over `ds`, without dropout.
    pub fn gradients(&self, ds: &LabeledDataset) -> Result<(f64, Gradients)> {
        let x = ds.spectra().view();
        self.check_input(&x)?;
        Ok(self.loss_and_gradients(x, ds.labels(), None))
    }

    /// Mean cross-entropy over `ds`, without dropout.
    pub fn loss(&self, ds: &LabeledDataset) -> Result<f64> {
        let x = ds.spectra().view();
        self.check_input(&x)?;
        let hidden = self.hidden_pre(&x).mapv_into(relu);
        let logits = hidden.dot(&self.w2) + &self.b2;
        Ok(mean_cross_entropy(&logits, ds.labels()))
    }

    /// `dropout_scale` is the inverted-dropout multiplier per (row, neuron):
    /// 0 for dropped units, `1 / keep` for kept ones.
    fn loss_and_gradients(
        &self,
        x: ArrayView2<'_, f64>,
        labels: &[usize],
        dropout_scale: Option<&Array2<f64>>,
    ) -> (f64, Gradients) {
        let n = x.nrows() as f64;
        let pre = self.hidden_pre(&x);
        let mut hidden = pre.mapv(relu);
        if let Some(scale) = dropout_scale {
            hidden *= scale;
        }
        let logits = hidden.dot(&self.w2) + &self.b2;
        let loss = mean_cross_entropy(&logits, labels);

        // d(mean CE)/d(logits) = (softmax − onehot) / n
        let mut d_logits = logits;
        softmax_rows(&mut d_logits);
        for (mut row, &y) in d_logits.outer_iter_mut().zip(labels) {
            row[y] -= 1.0;
        }
        d_logits /= n;

        let w2 = hidden.t().dot(&d_logits);
        let b2 = d_logits.sum_axis(Axis(0));
        let mut d_pre = d_logits.dot(&self.w2.t());
        if let Some(scale) = dropout_scale {
            d_pre *= scale;
        }
        // ReLU subgradient at exactly 0 is 0
        ndarray::Zip::from(&mut d_pre).and(&pre).for_each(|d, &z| {
            if z <= 0.0 {
                *d = 0.0;
            }
        });
        let w1 = x.t().dot(&d_pre);
        let b1 = d_pre.sum_axis(Axis(0));
        (loss, Gradients { w1, b1, w2, b2 })
    }

    fn params_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("contiguous"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("contiguous"),
        ]
    }
}

impl Gradients {
    fn as_slices(&self) -> [&[f64]; 4] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("contiguous"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("contiguous"),
        ]
    }
}

fn glorot(fan_in: usize, fan_out: usize, rng: &mut SeededRng) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
    Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(rng))
}

fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.outer_iter_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

fn mean_cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> f64 {
    let total: f64 = logits
        .outer_iter()
        .zip(labels)
        .map(|(row, &y)| {
            let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            lse - row[y]
        })
        .sum();
    total / labels.len() as f64
}

fn accuracy_of(predicted: &[usize], labels: &[usize]) -> f64 {
    let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    hits as f64 / labels.len() as f64
}

/// Draws an inverted-dropout multiplier matrix: each entry is `1 / keep` with
/// probability `keep`, else 0.
pub fn dropout_scale(rows: usize, cols: usize, rate: f64, rng: &mut impl Rng) -> Array2<f64> {
    let keep = 1.0 - rate;
    let coin = Bernoulli::new(keep).expect("keep probability in (0, 1]");
    Array2::from_shape_simple_fn((rows, cols), || {
        if coin.sample(rng) {
            1.0 / keep
        } else {
            0.0
        }
    })
}

/// Trains from a fresh Glorot initialization.
///
/// All randomness (initial weights, per-epoch shuffles, dropout masks) comes
/// from one generator seeded with `cfg.seed`, in that order, so a run is a
/// pure function of `(ds, cfg)`.
pub fn train(ds: &LabeledDataset, cfg: &MlpConfig) -> Result<(MlpModel, TrainReport)> {
    cfg.validate()?;
    if ds.n_classes() < 2 {
        return Err(Error::InvalidDataset(format!(
            "training needs at least two classes, found {}",
            ds.n_classes()
        )));
    }
    let start = Instant::now();
    let mut rng = rng::seeded(cfg.seed);
    let mut model = MlpModel::initialize(
        ds.grid().clone(),
        ds.class_names().to_vec(),
        cfg.hidden_units,
        &mut rng,
    )?;
    let mut adam = Adam::new(cfg.learning_rate, &model.params_mut().map(|p| p.len()));

    let spectra = ds.spectra();
    let labels = ds.labels();
    let mut order: Vec<usize> = (0..ds.n_samples()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let x = spectra.select(Axis(0), batch);
            let y: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let scale = (cfg.dropout_rate > 0.0)
                .then(|| dropout_scale(batch.len(), cfg.hidden_units, cfg.dropout_rate, &mut rng));
            let (loss, grads) = model.loss_and_gradients(x.view(), &y, scale.as_ref());
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            adam.step(&mut model.params_mut(), &grads.as_slices());
            loss_sum += loss;
            batches += 1;
        }
        let epoch_loss = loss_sum / batches as f64;
        log::debug!("epoch {epoch}: loss {epoch_loss:.6}");
        epoch_losses.push(epoch_loss);
    }
    if model.w1.iter().chain(&model.w2).any(|v| !v.is_finite()) {
        return Err(Error::Diverged {
            epoch: cfg.epochs - 1,
        });
    }
    let train_accuracy = model.accuracy(ds)?;
    Ok((
        model,
        TrainReport {
            epoch_losses,
            train_accuracy,
            elapsed: start.elapsed(),
        },
    ))
}

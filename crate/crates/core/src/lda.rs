//! Linear discriminant analysis with shrinkage toward a scaled identity.
//!
//! The pooled within-class covariance `Σ` is regularized as
//! `(1 − λ)Σ + λ·(tr Σ / d)·I`, factored by Cholesky, and used to precompute
//! per-class linear discriminants
//! `δ_c(x) = xᵀΣ⁻¹μ_c − ½μ_cᵀΣ⁻¹μ_c + log π_c`. No inverse is formed.

use ndarray::parallel::prelude::*;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::mlp::argmax;
use crate::spectra_io::{class_mean_spectra, LabeledDataset, WavelengthGrid};

pub const DEFAULT_SHRINKAGE: f64 = 0.1;

/// Cholesky pivots below this fraction of the largest diagonal entry are
/// treated as zero.
const PIVOT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LdaModel {
    class_means: Array2<f64>,
    /// Lower-triangular factor of the regularized pooled covariance.
    cholesky: Array2<f64>,
    /// `Σ⁻¹μ_c` as columns (`bands × classes`).
    coefficients: Array2<f64>,
    intercepts: Array1<f64>,
    log_priors: Array1<f64>,
    shrinkage: f64,
    class_names: Vec<String>,
    grid: WavelengthGrid,
}

/// Pooled within-class covariance `Σ_c Σ_{i∈c} (x−μ_c)(x−μ_c)ᵀ / (n − C)`.
pub fn pooled_covariance(ds: &LabeledDataset) -> Array2<f64> {
    let means = class_mean_spectra(ds);
    let mut centered = ds.spectra().clone();
    for (mut row, &label) in centered.outer_iter_mut().zip(ds.labels()) {
        row -= &means.row(label);
    }
    let dof = ds.n_samples().saturating_sub(ds.n_classes());
    let scatter = centered.t().dot(&centered);
    if dof == 0 {
        Array2::zeros(scatter.raw_dim())
    } else {
        scatter / dof as f64
    }
}

/// `(1 − λ)Σ + λ·(tr Σ / d)·I`. With no within-class variance at all the
/// target is the plain identity.
pub fn regularize(cov: &Array2<f64>, shrinkage: f64) -> Array2<f64> {
    let d = cov.nrows();
    let mean_variance = match cov.diag().sum() / d as f64 {
        v if v > 0.0 => v,
        _ => 1.0,
    };
    let mut out = cov * (1.0 - shrinkage);
    out.diag_mut()
        .mapv_inplace(|v| v + shrinkage * mean_variance);
    out
}

/// Lower Cholesky factor, or `None` if a pivot is not safely positive.
fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let scale = a.diag().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if !(scale > 0.0 && scale.is_finite()) {
        return None;
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let row_j = l.row(j);
        let pivot = a[[j, j]]
            - row_j
                .slice(ndarray::s![..j])
                .dot(&row_j.slice(ndarray::s![..j]));
        if pivot.is_nan() || pivot <= PIVOT_TOLERANCE * scale {
            return None;
        }
        let d = pivot.sqrt();
        l[[j, j]] = d;
        for i in j + 1..n {
            let s = a[[i, j]]
                - l.row(i)
                    .slice(ndarray::s![..j])
                    .dot(&l.row(j).slice(ndarray::s![..j]));
            l[[i, j]] = s / d;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b`.
fn cholesky_solve(l: &Array2<f64>, b: ArrayView1<'_, f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[[i, k]] * y[k]).sum();
        y[i] = (b[i] - s) / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[[k, i]] * x[k]).sum();
        x[i] = (y[i] - s) / l[[i, i]];
    }
    x
}

pub fn fit_lda(ds: &LabeledDataset, shrinkage: f64) -> Result<LdaModel> {
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::Config(format!(
            "shrinkage {shrinkage} outside [0, 1]"
        )));
    }
    if ds.n_classes() < 2 {
        return Err(Error::InvalidDataset(format!(
            "LDA needs at least two classes, found {}",
            ds.n_classes()
        )));
    }
    let class_means = class_mean_spectra(ds);
    let cov = regularize(&pooled_covariance(ds), shrinkage);
    let chol = cholesky(&cov).ok_or(Error::SingularCovariance { shrinkage })?;

    let n = ds.n_samples() as f64;
    let log_priors: Array1<f64> = ds
        .class_counts()
        .iter()
        .map(|&c| (c as f64 / n).ln())
        .collect();
    let mut coefficients = Array2::zeros((ds.n_bands(), ds.n_classes()));
    let mut intercepts = Array1::zeros(ds.n_classes());
    for (c, mean) in class_means.outer_iter().enumerate() {
        let a = cholesky_solve(&chol, mean);
        intercepts[c] = -0.5 * mean.dot(&a) + log_priors[c];
        coefficients.column_mut(c).assign(&a);
    }
    Ok(LdaModel {
        class_means,
        cholesky: chol,
        coefficients,
        intercepts,
        log_priors,
        shrinkage,
        class_names: ds.class_names().to_vec(),
        grid: ds.grid().clone(),
    })
}

impl LdaModel {
    pub fn class_means(&self) -> &Array2<f64> {
        &self.class_means
    }

    pub fn cholesky_factor(&self) -> &Array2<f64> {
        &self.cholesky
    }

    /// Linear coefficients `Σ⁻¹μ_c`, one column per class.
    pub fn coefficients(&self) -> &Array2<f64> {
        &self.coefficients
    }

    /// `−½μ_cᵀΣ⁻¹μ_c + log π_c` per class.
    pub fn intercepts(&self) -> &Array1<f64> {
        &self.intercepts
    }

    pub fn log_priors(&self) -> &Array1<f64> {
        &self.log_priors
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    /// `δ_c(x)` for every row and class.
    pub fn discriminants(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.coefficients.nrows() {
            return Err(Error::shape(
                format!("{} bands", self.coefficients.nrows()),
                format!("{} columns", x.ncols()),
            ));
        }
        Ok(x.dot(&self.coefficients) + &self.intercepts)
    }
}

/// Class with the largest discriminant per row; ties to the lower index.
pub fn predict_lda(model: &LdaModel, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    let scores = model.discriminants(x)?;
    Ok(scores
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|row| argmax(row.iter().copied()))
        .collect())
}

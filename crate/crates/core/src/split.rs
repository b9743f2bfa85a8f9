//! Deterministic stratified train/test splitting.
//!
//! Pixels are split individually, so spatially adjacent pixels from one
//! region can land on both sides. Test accuracy on region-extracted data is
//! therefore optimistic.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;
use crate::spectra_io::LabeledDataset;

#[derive(Debug, Clone)]
pub struct SplitResult {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    /// Row indices into the source dataset, ascending.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

/// Number of training samples for a class of `n`: `ceil(n · fraction)`.
pub fn train_count(n: usize, fraction: f64) -> usize {
    // absorb representation error so e.g. 10 × 0.7 stays 7
    let exact = n as f64 * fraction;
    let rounded = exact.round();
    if (exact - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}

/// Shuffles each class's rows (class order, one generator) and sends the
/// first `ceil(n_c · train_fraction)` of each to the training partition.
pub fn stratified_split(
    ds: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<SplitResult> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    for (i, &label) in ds.labels().iter().enumerate() {
        by_class[label].push(i);
    }
    if let Some(c) = by_class.iter().position(|members| members.len() < 2) {
        return Err(Error::SingletonClass(ds.class_names()[c].clone()));
    }

    let mut rng = rng::seeded(seed);
    let mut train_indices = Vec::new();
    let mut test_indices = Vec::new();
    for (c, mut members) in by_class.into_iter().enumerate() {
        members.shuffle(&mut rng);
        let n_train = train_count(members.len(), train_fraction);
        if n_train == members.len() {
            return Err(Error::Config(format!(
                "train fraction {train_fraction} leaves class {} with no test samples",
                ds.class_names()[c]
            )));
        }
        train_indices.extend_from_slice(&members[..n_train]);
        test_indices.extend_from_slice(&members[n_train..]);
    }
    train_indices.sort_unstable();
    test_indices.sort_unstable();

    Ok(SplitResult {
        train: ds.subset(&train_indices)?,
        test: ds.subset(&test_indices)?,
        train_indices,
        test_indices,
        seed,
    })
}

impl SplitResult {
    /// Writes `index,partition` rows (partition is `train` or `test`), in
    /// source-row order.
    pub fn write_partition_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let n = self.train_indices.len() + self.test_indices.len();
        let mut side = vec![""; n];
        self.train_indices.iter().for_each(|&i| side[i] = "train");
        self.test_indices.iter().for_each(|&i| side[i] = "test");
        let mut out = String::from("index,partition\n");
        for (i, s) in side.iter().enumerate() {
            out.push_str(&format!("{i},{s}\n"));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

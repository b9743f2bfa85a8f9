//! Hyperspectral classification with a shallow neural network, an LDA
//! baseline, spectral-index math, and tools for reading learned spectral
//! features back out of the network's weights.
//!
//! Data flows as `SpectralCube` / `LabeledDataset` values from `spectra_io`
//! or `synth`, through `split`, into `mlp::train` or `lda::fit_lda`. The
//! `interpret` module turns a trained `MlpModel` into per-class weight
//! profiles and an NDVI geometry report; `render` writes maps and heatmaps.

pub mod error;
pub mod indices;
pub mod interpret;
pub mod lda;
pub mod mlp;
pub mod render;
pub mod rng;
pub mod spectra_io;
pub mod split;
pub mod synth;

pub use error::{Error, Result};
pub use mlp::{MlpConfig, MlpModel};
pub use spectra_io::{LabeledDataset, SpectralCube, WavelengthGrid, Window};

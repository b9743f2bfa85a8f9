use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid wavelength grid: {0}")]
    InvalidGrid(String),

    #[error("header {path}: {message}")]
    Header { path: PathBuf, message: String },

    #[error("raster {path}: expected {expected} bytes, found {found}")]
    RasterLength {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("region of interest for class {class}: {message}")]
    RoiOutOfBounds { class: String, message: String },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("index undefined: NIR + R = 0")]
    UndefinedIndex,

    #[error("value {0} is outside the domain [-1, 1)")]
    IndexDomain(f64),

    #[error("iso-index slope is infinite at index value 1")]
    InfiniteSlope,

    #[error("no bands fall inside window [{lo}, {hi}] nm")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("class {0} has a single sample; stratified splitting needs at least two")]
    SingletonClass(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error(
        "regularized covariance is not positive definite (shrinkage {shrinkage}); \
         increase the shrinkage"
    )]
    SingularCovariance { shrinkage: f64 },

    #[error("model file {path}: {message}")]
    Model { path: PathBuf, message: String },

    #[error("scene pixel ({line}, {sample}) is not covered by any material")]
    UncoveredPixel { line: usize, sample: usize },

    #[error("label {label} is outside the palette ({size} colors)")]
    LabelOutsidePalette { label: usize, size: usize },

    #[error("degenerate projection: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

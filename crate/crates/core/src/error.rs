use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a NIfTI-1 single-file volume: {0}")]
    NotNifti(String),
    #[error("unsupported NIfTI datatype code {0}")]
    UnsupportedDatatype(i16),
    #[error("truncated file: expected {expected} data bytes, found {found}")]
    TruncatedFile { expected: usize, found: usize },
    #[error("dimension error: {0}")]
    DimensionError(String),
    #[error("dimension mismatch: header describes {expected} voxels, grid has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("volumes do not share geometry: {0}")]
    GeometryMismatch(String),
    #[error("region tags differ: {0}")]
    RegionMismatch(String),
    #[error("threshold {0} outside [0, 1]")]
    BadThreshold(f64),
    #[error("{0} is not a BraTS label (expected 0, 1, 2 or 4)")]
    BadLabel(i64),
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("no nonzero (brain) voxels in input")]
    NoBrainVoxels,
    #[error("brain voxels have zero variance")]
    ZeroVariance,
    #[error("rotation angle {0} outside [0, 30] degrees")]
    BadAngle(f64),
    #[error("invalid bounding box: {0}")]
    BadBox(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),

    #[error("empty input")]
    EmptyInput,
    #[error("STAPLE needs at least 2 raters, got {0}")]
    TooFewRaters(usize),
    #[error("degenerate rater input: every decision is identical")]
    DegenerateInput,

    #[error("no matched prediction/ground-truth case pairs")]
    NoMatchedCases,
    #[error("case {case}: {source}")]
    UnreadableVolume {
        case: String,
        #[source]
        source: Box<Error>,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed report input: {0}")]
    MalformedReport(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid volume: {0}")]
    InvalidVolume(String),
    #[error("no reference geometry")]
    NoReferenceGeometry,
    #[error("point {0:?} lies outside the volume")]
    OutOfBounds([f64; 3]),
    #[error("phantom does not fit: {0}")]
    PhantomDoesNotFit(String),
    #[error("corruption infeasible: {0}")]
    CorruptionInfeasible(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unlabeled problem: no seeds given")]
    UnlabeledProblem,
    #[error("k-NN needs more than k = {k} points, got {points}")]
    TooFewPoints { k: usize, points: usize },
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("empty reference centerline")]
    EmptyReference,
    #[error("no finite-cost route from {src:?} to {dst:?}")]
    Unreachable { src: [i32; 3], dst: [i32; 3] },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the surrounding file system or malformed
    /// input files rather than by the pipeline itself.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Format(_))
    }
}

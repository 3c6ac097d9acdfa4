use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite coordinate at point {0}")]
    NonFinite(usize),
    #[error("{field} has length {got}, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("need more than {k} points for a {k}-neighborhood, got {got}")]
    TooFewPoints { k: usize, got: usize },
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("cannot select {requested} of {available} points")]
    TooManyRequested { requested: usize, available: usize },
    #[error("{len} points cannot be split into {parts} equal patches")]
    Indivisible { len: usize, parts: usize },
    #[error("negative curvature {value} at index {index}")]
    NegativeCurvature { index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point cloud has no normals")]
    MissingNormals,
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("exact assignment limited to {limit} points, got {got}; use auction")]
    TooLargeForExact { got: usize, limit: usize },
    #[error("auction did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

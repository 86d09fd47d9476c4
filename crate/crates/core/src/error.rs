use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point at infinity is not allowed here")]
    InfiniteChartPoint,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("diagonal singularity: adjacent points coincide (distance {distance:e})")]
    DiagonalSingularity { distance: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("too many rejected samples: {rejected} of {samples}")]
    Rejections { rejected: u64, samples: u64 },
    #[error("value may not be regular: {0}")]
    NonRegularValue(String),
    #[error("input is not a projection (defect {defect:e})")]
    NotAProjection { defect: f64 },
    #[error("unknown map fixture `{0}`")]
    UnknownMap(String),
}

pub type Result<T> = std::result::Result<T, Error>;

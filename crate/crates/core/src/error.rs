use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: domain error: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("constraint set is infeasible: {0}")]
    Infeasible(String),

    #[error("constraint set has zero Jeffreys measure (lower-dimensional face): {0}")]
    ZeroMeasure(String),

    #[error("constraint config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{what} did not converge (achieved {achieved:e})")]
    NonConvergence { what: &'static str, achieved: f64 },

    #[error("Dirichlet mass inside the constraint set collapsed to {mass:e} (below floor {floor:e})")]
    MassCollapse { mass: f64, floor: f64 },

    #[error("type-class enumeration needs {terms} terms, guard is {guard}")]
    EnumerationGuard { terms: f64, guard: f64 },

    #[error("symbol {symbol} out of range for alphabet of size {m}")]
    InvalidSymbol { symbol: usize, m: usize },

    #[error("codec: {0}")]
    Codec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

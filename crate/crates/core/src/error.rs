use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} bonds vs {right} bonds")]
    DimensionMismatch { left: usize, right: usize },

    #[error("exponential sums carry different bond lengths")]
    LengthMismatch,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("scattering matrix at vertex `{vertex}` is not unitary (deviation {deviation:.3e})")]
    NonUnitary { vertex: String, deviation: f64 },

    #[error("graph is not connected")]
    Disconnected,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("endpoint {k} remains on a root after perturbation")]
    EndpointOnRoot { k: f64 },

    #[error("no regular level up to j_max = {j_max}; retry with a larger j_max")]
    NoRegularLevel { j_max: usize },

    #[error("graph is irregular (regular level r = {r} > 0); the explicit series needs r = 0")]
    Irregular { r: usize },

    #[error("hierarchy violation at level {level}, index {index}: {count} roots in ({lo}, {hi})")]
    HierarchyViolation {
        level: usize,
        index: i64,
        lo: f64,
        hi: f64,
        count: usize,
    },

    #[error("level {level} is not real on the axis; cannot bracket roots by sign")]
    NotReal { level: usize },

    #[error("empty input: {0}")]
    Empty(String),
}

pub type Result<T> = std::result::Result<T, Error>;

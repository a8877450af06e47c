use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid G-tilde specification: {0}")]
    InvalidSpec(String),

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("time step {dt:e} violates the monotonicity bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("non-finite value at time step {k}, node {i}")]
    NonFinite { k: usize, i: usize },

    #[error("invalid tree probability: p0 = {p0} (c3 = {c3} is too small)")]
    InvalidProbability { p0: f64, c3: f64 },

    #[error("enumeration of {count} assignments exceeds the limit {limit}")]
    EnumerationTooLarge { count: f64, limit: u64 },

    #[error("no Monte Carlo paths")]
    EmptyPaths,

    #[error("perturbation {eps} is smaller than twice the grid spacing {dx}")]
    EpsTooSmall { eps: f64, dx: f64 },

    #[error("control value {v} outside [{lo}, {hi}]")]
    ControlOutOfRange { v: f64, lo: f64, hi: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

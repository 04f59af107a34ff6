use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty graph")]
    EmptyGraph,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("node {0} has no neighbors")]
    IsolatedNode(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical divergence at iteration {iteration}")]
    NumericalDivergence { iteration: usize },

    #[error("not a minimizer: KKT violation {violation:e} exceeds {tolerance:e}")]
    NotAMinimizer { violation: f64, tolerance: f64 },

    #[error("full trace required")]
    FullTraceRequired,

    #[error("rho = {rho} outside validity interval [{lo}, {hi})")]
    OutsideValidity { rho: f64, lo: f64, hi: f64 },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

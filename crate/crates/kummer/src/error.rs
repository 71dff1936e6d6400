use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum KummerError {
    /// Input outside an operation's mathematical domain (r <= 0, z = 0, ...).
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// Invalid configuration (gluing scales out of bounds, non-unit directions, bad grids, ...).
    #[error("config error: {msg}")]
    Config { msg: String },

    /// A quantity that must be positive definite is not.
    #[error("definiteness error: {msg}")]
    Definiteness { msg: String },

    /// An iterative procedure failed to converge.
    #[error("{what} did not converge: {msg}")]
    NonConvergence { what: &'static str, msg: String },

    /// The smallness precondition of the fixed-point engine fails.
    #[error("smallness test failed: {msg}")]
    Smallness { msg: String },

    /// Quadrature failed to reach the requested tolerance.
    #[error("quadrature error: {msg} (achieved {achieved})")]
    Quadrature { msg: String, achieved: f64 },

    /// A discretization is too coarse for the requested quantity.
    #[error("refinement error: {msg}")]
    Refinement { msg: String },

    /// A fit was rejected (zero signal, residual above threshold).
    #[error("fit rejected: {msg}")]
    FitRejected { msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, KummerError>;

impl KummerError {
    pub fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        KummerError::Domain { op, msg: msg.into() }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        KummerError::Config { msg: msg.into() }
    }
}

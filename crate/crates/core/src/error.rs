use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Iterative solver stopped before the bracket closed. The best bounds
    /// found so far are carried along.
    #[error("{context}: no convergence within budget (lower {lower:e}, upper {upper:e})")]
    NonConvergence {
        context: &'static str,
        lower: f64,
        upper: f64,
    },

    #[error("net cardinality budget {budget} exceeded ({reached} points)")]
    NetBudgetExceeded { budget: f64, reached: usize },

    #[error("no typical parameter found on the grid; the sign set is empty (check xi < alpha * c)")]
    EmptySigma,

    #[error("condition `{condition}` undecidable at {bits} bits")]
    Undecidable { condition: String, bits: u32 },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

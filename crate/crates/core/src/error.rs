use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violated an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative numeric routine failed to reach its tolerance.
    #[error("numeric error: {what} (last estimate change {last_change:.3e}, {evaluations} evaluations)")]
    Numeric {
        what: String,
        last_change: f64,
        evaluations: usize,
    },

    #[error("degenerate curve: {0}")]
    Degenerate(String),

    #[error("construction error: {what} (endpoint gap {gap:.3e})")]
    Construction { what: String, gap: f64 },

    /// Every δ candidate produced a curve with a self-intersection.
    #[error("delta selection exhausted after {tried} candidates; colliding parameter pairs: {pairs:?}")]
    SelectionExhausted {
        tried: usize,
        pairs: Vec<(f64, f64)>,
    },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

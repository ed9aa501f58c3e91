use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] designcurve::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("verification failed: max residual {max_residual:.3e} on {worst:?} is not below {tolerance:e}")]
    VerificationFailed {
        max_residual: f64,
        worst: Vec<u32>,
        tolerance: f64,
    },
}

impl CliError {
    /// Machine-readable code and process exit status.
    pub fn code(&self) -> (&'static str, i32) {
        use designcurve::Error as E;
        match self {
            CliError::Parse(_) => ("PARSE", 2),
            CliError::Usage(_) => ("USAGE", 2),
            CliError::Io { .. } => ("IO", 2),
            CliError::VerificationFailed { .. } => ("VERIFY_FAIL", 4),
            CliError::Core(e) => match e {
                E::Domain(_) => ("DOMAIN", 2),
                E::Degenerate(_) => ("DEGENERATE", 2),
                E::Numeric { .. } => ("NUMERIC", 3),
                E::Construction { .. } => ("CONSTRUCTION", 3),
                E::Inconsistent(_) => ("INCONSISTENT", 3),
                E::SelectionExhausted { .. } => ("SELECTION_EXHAUSTED", 5),
            },
        }
    }

    /// `ERROR <CODE> <detail>` on one line.
    pub fn line(&self) -> String {
        let detail = self.to_string().replace(['\n', '\r'], " ");
        format!("ERROR {} {detail}", self.code().0)
    }
}

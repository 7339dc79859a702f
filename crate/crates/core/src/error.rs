use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Iteration diagnostics attached to a solver failure.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverDiagnostics {
    pub method: &'static str,
    pub iterations: usize,
    pub residual: f64,
    pub tolerance: f64,
}

impl std::fmt::Display for SolverDiagnostics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} stopped after {} iterations (residual {:.3e}, tolerance {:.3e})",
            self.method, self.iterations, self.residual, self.tolerance
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(SolverDiagnostics),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("the two scalars must differ (both are {0})")]
    DegenerateScalars(f64),

    #[error("unsupported Clifford dimension {0} (supported: 1..=8)")]
    UnsupportedDimension(usize),

    #[error("Clifford representation has {rep} generators but the tuple has {tuple} observables")]
    RepMismatch { rep: usize, tuple: usize },

    #[error("chiral symmetry violated: {0}")]
    ChiralSymmetryViolation(String),

    #[error("matrix is not real: largest imaginary part {0:.3e}")]
    NotRealMatrix(f64),

    #[error("symmetry hypothesis violated: {0}")]
    SymmetryHypothesisViolated(String),

    #[error("parameter `{name}` out of range: {value} ({reason})")]
    ParameterOutOfRange {
        name: String,
        value: f64,
        reason: String,
    },

    #[error(
        "distance operator is not invertible: site {index} lies at distance {distance:.3e} from the probe; \
         shift the probe slightly (the quadratic gap is 1-Lipschitz in the probe) and retry"
    )]
    ZNotInvertible { index: usize, distance: f64 },

    #[error("perturbation constant C = {0} is not below 1; the lower bound is vacuous")]
    CTooLarge(f64),

    #[error("no site lies within distance {0} of the probe")]
    EmptyBall(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn out_of_range(name: &str, value: f64, reason: impl Into<String>) -> Self {
        Error::ParameterOutOfRange {
            name: name.to_string(),
            value,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::NumericalFailure(_) | Error::Io(_))
    }
}

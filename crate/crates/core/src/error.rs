use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Variants fall into two families: numerical/model failures (calibration,
/// domain violations, matrices that are not positive semi-definite) and
/// input failures (files, parsing, versioning). [`CurveError::is_input_error`]
/// separates the two for exit-code mapping.
#[derive(Debug, Error)]
pub enum CurveError {
    #[error("ordering error: {0}")]
    Ordering(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("matrix is not positive semi-definite (leading minor {minor} has pivot {pivot:e})")]
    NotPositiveSemidefinite { minor: usize, pivot: f64 },

    #[error(
        "infeasible calibration at contract {contract}: implied vol {vol} requires negative forward variance; \
         the lowest feasible vol for this contract is {min_feasible_vol}"
    )]
    InfeasibleCalibration {
        contract: String,
        vol: f64,
        min_feasible_vol: f64,
    },

    #[error("degenerate model specification: {0}")]
    DegenerateSpec(String),

    #[error("degenerate expiry: {0}")]
    DegenerateExpiry(String),

    #[error("degenerate schedule: {0}")]
    DegenerateSchedule(String),

    #[error("degenerate moneyness: {0}")]
    DegenerateMoneyness(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("singular inversion: {0}")]
    SingularInversion(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{file}:{line}: column `{column}`: {message}")]
    Parse {
        file: PathBuf,
        line: u64,
        column: String,
        message: String,
    },

    #[error("missing required input {path}: {expectation}")]
    MissingFile { path: PathBuf, expectation: String },

    #[error("incompatible document version {found} (expected {expected})")]
    IncompatibleVersion { found: u32, expected: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl CurveError {
    /// True for failures caused by missing, unreadable or malformed input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            CurveError::Parse { .. }
                | CurveError::MissingFile { .. }
                | CurveError::IncompatibleVersion { .. }
                | CurveError::Io { .. }
                | CurveError::Json { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CurveError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CurveError>;

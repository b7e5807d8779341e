use thiserror::Error;

/// Coarse classification used by callers to pick an exit status:
/// input problems are distinguishable from computations that cannot proceed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// The inputs are malformed or inconsistent (bad file, bad argument).
    Validation,
    /// The inputs parsed but the requested computation is undefined on them.
    Computation,
}

#[derive(Debug, Error)]
pub enum Error {
    /// The file's shape does not match the expected schema (header, columns, JSON layout).
    #[error("schema error: {0}")]
    Schema(String),

    /// A data row failed validation. `row` is the 1-based line number in the source file.
    #[error("row {row}: {message}")]
    Row { row: u64, message: String },

    /// An argument to an operation is inconsistent with the data it is applied to.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Fewer than two present values in a column; no statistics can be formed.
    #[error("indicator '{indicator}' has fewer than 2 present values")]
    InsufficientData { indicator: String },

    /// Zero-variance column: standardization would divide by zero.
    #[error("indicator '{indicator}' is degenerate: standard deviation is zero")]
    DegenerateColumn { indicator: String },

    /// Conversion bounds with an empty or inverted interval.
    #[error("bounds for indicator '{indicator}' are invalid: max ({max}) must exceed min ({min})")]
    InvalidBounds { indicator: String, min: f64, max: f64 },

    /// All composite scores coincide; mean±sd bands cannot separate anything.
    #[error("all scores are equal; classification bands are undefined")]
    DegenerateScores,

    /// Not enough entities remain for the requested analysis.
    #[error("{0}")]
    TooFewEntities(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Schema(_) | Error::Row { .. } | Error::Argument(_) | Error::InvalidBounds { .. } => {
                ErrorCategory::Validation
            }
            Error::InsufficientData { .. }
            | Error::DegenerateColumn { .. }
            | Error::DegenerateScores
            | Error::TooFewEntities(_) => ErrorCategory::Computation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

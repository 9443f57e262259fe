use std::fmt;

use thiserror::Error;

/// Machine-readable classification of configuration problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    SchemaViolation,
    GridMisaligned,
    AtomMisaligned,
    AlphaMismatch,
    InvalidMeasure,
    InvalidValue,
}

impl ErrorCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorCode::SchemaViolation => "SCHEMA_VIOLATION",
            ErrorCode::GridMisaligned => "GRID_MISALIGNED",
            ErrorCode::AtomMisaligned => "ATOM_MISALIGNED",
            ErrorCode::AlphaMismatch => "ALPHA_MISMATCH",
            ErrorCode::InvalidMeasure => "INVALID_MEASURE",
            ErrorCode::InvalidValue => "INVALID_VALUE",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{code}: {message}")]
    Config { code: ErrorCode, message: String },

    #[error("ATOM_MISALIGNED: atom at u = {location} (weight {weight}) is not on the grid of step {step}")]
    Alignment {
        location: f64,
        weight: f64,
        step: f64,
    },

    #[error("time {time} is outside the computed range [0, {horizon}] or off the grid")]
    Range { time: f64, horizon: f64 },

    #[error("renewal diagonal weight h*g(0)/2 = {weight} is not below 1; reduce the step size")]
    StepSize { weight: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(code: ErrorCode, message: impl Into<String>) -> Self {
        Error::Config {
            code,
            message: message.into(),
        }
    }

    /// The machine-readable code for configuration-class errors.
    pub fn code(&self) -> Option<ErrorCode> {
        match self {
            Error::Config { code, .. } => Some(*code),
            Error::Alignment { .. } => Some(ErrorCode::AtomMisaligned),
            _ => None,
        }
    }

    /// True for errors caused by the user's input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::Alignment { .. } | Error::Range { .. } | Error::Domain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

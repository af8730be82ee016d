use thiserror::Error;

use crate::data::FitResult;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// Variants fall into three classes (see [`ErrorClass`]) which the CLI maps
/// one-to-one onto process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("partial means of the error law did not converge: {0}")]
    NonIntegrable(String),

    #[error("response has zero standard deviation")]
    DegenerateResponse,

    #[error("weighted normal matrix is numerically singular")]
    SingularDesign,

    #[error("solver stopped after {} iterations with KKT residual {:.3e}", .0.iterations, .0.kkt_residual)]
    MaxIterations(Box<FitResult>),

    #[error("invalid penalty weight {value} at coordinate {index}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("low-dimensional regime requested with p = {p} >= n = {n}")]
    RegimeMismatch { n: usize, p: usize },

    #[error("active set is empty")]
    EmptyActiveSet,

    #[error("need at least 2 residuals, got {0}")]
    TooFewResiduals(usize),

    #[error("restricted Gram matrix is not invertible")]
    SingularU,

    #[error("all {0} replications failed")]
    AllReplicationsFailed(usize),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("column {0:?} not found in header")]
    MissingColumn(String),

    #[error("non-numeric cell {value:?} at row {row}, column {column}")]
    NonNumericCell {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Solver,
    Config,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Parse => 2,
            ErrorClass::Solver => 3,
            ErrorClass::Config => 4,
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::MissingColumn(_)
            | Error::NonNumericCell { .. }
            | Error::Io(_) => ErrorClass::Parse,
            Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::RegimeMismatch { .. }
            | Error::InvalidWeight { .. } => ErrorClass::Config,
            Error::DimensionMismatch(_)
            | Error::NonIntegrable(_)
            | Error::DegenerateResponse
            | Error::SingularDesign
            | Error::MaxIterations(_)
            | Error::EmptyActiveSet
            | Error::TooFewResiduals(_)
            | Error::SingularU
            | Error::AllReplicationsFailed(_) => ErrorClass::Solver,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.class().exit_code()
    }
}

use std::fmt;

/// Errors raised by statistics, selection and simulation routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A covariance or variance estimate was requested on an empty sample.
    EmptySample,
    /// A regression has too few observations for its covariate count.
    SliceTooSmall { n: usize, d: usize },
    /// A covariance matrix stayed singular after the ridge guard.
    DegenerateCovariance,
    /// A per-slice residual variance collapsed to (numerical) zero.
    DegenerateSliceRegression { slice: usize },
    /// A discrete response value was never seen during training.
    UnknownClass(String),
    /// An argument violated a precondition.
    InvalidArgument(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptySample => write!(f, "empty sample"),
            Error::SliceTooSmall { n, d } => {
                write!(f, "slice too small for regression: {} observations, {} covariates", n, d)
            }
            Error::DegenerateCovariance => write!(f, "degenerate covariance"),
            Error::DegenerateSliceRegression { slice } => {
                write!(f, "degenerate slice regression in slice {}", slice)
            }
            Error::UnknownClass(label) => write!(f, "unknown class: {}", label),
            Error::InvalidArgument(msg) => write!(f, "{}", msg),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

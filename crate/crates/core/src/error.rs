use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series evaluation was asked for outside the region where it converges.
    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),

    /// Quadrature did not reach the requested tolerance. Carries the best estimate.
    #[error("accuracy error: best estimate {value} with abs error {abs_error} after {evaluations} evaluations")]
    Accuracy {
        value: f64,
        abs_error: f64,
        evaluations: usize,
    },

    /// The requested evaluation path does not exist for this input.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("estimation failure: {0}")]
    EstimationFailure(String),

    #[error("test unavailable: {0}")]
    TestUnavailable(String),

    /// An aggregate had nothing to aggregate over.
    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

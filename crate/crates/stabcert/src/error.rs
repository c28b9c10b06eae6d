use std::fmt;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor or operation received a value outside its documented range.
    InvalidParameter(String),
    /// A tabulated model was queried outside its grid.
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    /// An operation that requires a valid certificate was handed an invalid one.
    InvalidCertificate,
    /// An operation that requires a completed trajectory was handed a truncated one.
    TrajectoryIncomplete,
    /// A guaranteed property failed to hold; this signals a bug, not bad input.
    InvariantViolation(String),
    /// The requested operation is not defined for this model variant.
    Unsupported(&'static str),
    /// `sup_t ||e^{tA}||` could not be bounded: the sampled norms grow at the horizon.
    UnboundedPropagator { horizon: f64 },
    /// No admissible configuration exists (e.g. the tail integral operator does not contract).
    Infeasible(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::OutOfDomain { t, lo, hi } => {
                write!(f, "query time {t} outside tabulated domain [{lo}, {hi}]")
            }
            Error::InvalidCertificate => write!(f, "certificate is not valid"),
            Error::TrajectoryIncomplete => write!(f, "trajectory did not complete"),
            Error::InvariantViolation(msg) => write!(f, "invariant violation: {msg}"),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::UnboundedPropagator { horizon } => {
                write!(f, "unbounded semigroup suspected: ||e^(tA)|| grows at horizon {horizon}")
            }
            Error::Infeasible(msg) => write!(f, "infeasible: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

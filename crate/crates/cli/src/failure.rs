use colombeau::Error;
use std::fmt;

/// Everything that stops a run before a verdict, mapped onto the exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Exit 2: the input does not describe a valid experiment; `path` locates the bad part.
    Schema { path: String, message: String },
    /// Exit 3: a computation failed; `operation` names it.
    Numerical { operation: String, message: String },
}

impl Failure {
    pub fn schema(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Failure::Schema {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn numerical(operation: impl Into<String>, message: impl fmt::Display) -> Self {
        Failure::Numerical {
            operation: operation.into(),
            message: message.to_string(),
        }
    }

    /// Library errors that come from bad input are schema errors at `path`; the rest are
    /// numerical failures of `operation`.
    pub fn from_core(path: &str, operation: &str, e: Error) -> Self {
        match e {
            Error::DimensionMismatch { .. }
            | Error::SingularMap { .. }
            | Error::UnboundedBox
            | Error::OrderTooLarge { .. }
            | Error::UnsupportedDimension(_)
            | Error::InvalidSequence(_)
            | Error::ProbeOutsideDomain { .. }
            | Error::NotSubdomain(_)
            | Error::CoverMismatch(_)
            | Error::InvalidDiffeomorphism(_)
            | Error::NestingTooDeep(..)
            | Error::Unsupported(_)
            | Error::Invalid(_) => Failure::schema(path, e),
            Error::QuadratureNonConvergence { .. }
            | Error::IllConditionedMoments { .. }
            | Error::SupportEscapesDomain(_)
            | Error::SupOnBoundary(_)
            | Error::TooFewPoints(..) => Failure::numerical(operation, e),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Schema { .. } => 2,
            Failure::Numerical { .. } => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Schema { path, message } => write!(f, "schema error at {path}: {message}"),
            Failure::Numerical { operation, message } => write!(f, "numerical error in {operation}: {message}"),
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;

/// Shorthand for tagging library results with a location and an operation name.
pub trait Context<T> {
    fn at(self, path: &str, operation: &str) -> Outcome<T>;
}

impl<T> Context<T> for colombeau::Result<T> {
    fn at(self, path: &str, operation: &str) -> Outcome<T> {
        self.map_err(|e| Failure::from_core(path, operation, e))
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular affine map (determinant {det:e})")]
    SingularMap { det: f64 },

    #[error("integration box is unbounded")]
    UnboundedBox,

    #[error("quadrature did not converge after depth {depth} (last difference {difference:e})")]
    QuadratureNonConvergence { depth: u32, difference: f64 },

    #[error("moment system for q = {q}, n = {n} is ill-conditioned (condition number {condition:e})")]
    IllConditionedMoments { q: u32, n: usize, condition: f64 },

    #[error("mollifier order {q} exceeds the supported maximum {max}")]
    OrderTooLarge { q: u32, max: u32 },

    #[error("unsupported dimension {0}; only n = 1 and n = 2 are implemented")]
    UnsupportedDimension(usize),

    #[error("invalid epsilon sequence: {0}")]
    InvalidSequence(String),

    #[error("probe {probe} is not compactly contained in {domain}")]
    ProbeOutsideDomain { probe: String, domain: String },

    #[error("support escapes the domain: {0}")]
    SupportEscapesDomain(String),

    #[error("sup search hit the boundary of the sampling box at {0:?}; probe too coarse")]
    SupOnBoundary(Vec<f64>),

    #[error("not a subdomain: {0}")]
    NotSubdomain(String),

    #[error("cover/partition mismatch: {0}")]
    CoverMismatch(String),

    #[error("diffeomorphism check failed: {0}")]
    InvalidDiffeomorphism(String),

    #[error("too few sweep points for a fit: {0} (need at least {1})")]
    TooFewPoints(usize, usize),

    #[error("Lie derivative nesting depth {0} exceeds the cap of {1}")]
    NestingTooDeep(usize, usize),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

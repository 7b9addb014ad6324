use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("basis must contain at least one label")]
    EmptyBasis,
    #[error("label arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("duplicate basis label at index {index}")]
    DuplicateLabel { index: usize },
    #[error("duplicate sector tag `{0}`")]
    DuplicateSectorTag(String),
    #[error("direct sum summands need a sector tag")]
    MissingSectorTag,
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("operators not simultaneously diagonal in given basis")]
    NotSimultaneouslyDiagonal,
    #[error("at least one operator is required")]
    NoOperators,
    #[error("interval is empty: lower bound {lo} is not below upper bound {hi}")]
    EmptyInterval { lo: String, hi: String },
    #[error("theta = {0} is outside the valid range (0,1]")]
    ThetaOutOfRange(String),
    #[error("hbar must be positive, got {0}")]
    NonPositiveHbar(String),
    #[error("operator `{0}` is in float mode; exact kernel detection needs exact rational eigenvalues")]
    FloatModeRejected(String),
    #[error("projection is empty")]
    EmptyProjection,
    #[error("selected index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("malformed rational `{0}`")]
    MalformedRational(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("averaging time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("grid step {h} does not resolve the kernel oscillation at T = {t}: need h <= pi/(4T) = {limit}")]
    UnderSampled { h: f64, t: f64, limit: f64 },
    #[error("measure density is negative at node {node}")]
    NegativeMeasure { node: usize },
    #[error("fixtures required")]
    FixturesRequired,
    #[error("fixture family is missing a {0} member")]
    IncompleteFixtures(&'static str),
    #[error("invalid fixture: {0}")]
    InvalidFixture(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("target is not in the hypersimplex: {0}")]
    HypersimplexViolation(String),
    #[error("target violates the (n-k)-subset sum hypothesis: {0}")]
    HypothesisViolation(String),
    #[error("beta = {beta} outside [{lo}, {hi}]")]
    BetaOutOfRange { beta: f64, lo: f64, hi: f64 },
    #[error("rank k = {k} out of range for n = {n}: {reason}")]
    RankOutOfRange { n: usize, k: usize, reason: String },
    #[error("frame invariant violated: {0}")]
    FrameInvariantViolation(String),
    #[error("projection invariant violated: {0}")]
    ProjectionInvariantViolation(String),
    #[error("eigenvalue {eigenvalue} within {gap} of 1/2")]
    SpectralGapTooSmall { eigenvalue: f64, gap: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("norm deficit at column {index}: d = {d}, half of d' = {half}")]
    NormDeficit { index: usize, d: f64, half: f64 },
    #[error("matrix is not special orthogonal: {0}")]
    NotSpecialOrthogonal(String),
    #[error("invalid partition: {0}")]
    PartitionInvalid(String),
    #[error("block is not a scaled tight frame (deviation {deviation:e})")]
    BlockNotNtf { deviation: f64 },
    #[error("head columns have different norms: {0} vs {1}")]
    HeadNormMismatch(f64, f64),
    #[error("target does not match the required pattern: {0}")]
    PatternMismatch(String),
    #[error("sub-certificate rejected: {0}")]
    SubcertificateInvalid(String),
    #[error("completion jumps by {step} at grid index {index} (step_max {step_max})")]
    CompletionDiscontinuity { index: usize, step: f64, step_max: f64 },
    #[error("lifted endpoint matrix has determinant {det}, expected -1")]
    DetSignUnexpected { det: f64 },
    #[error("endpoint is not on the frame variety: {0}")]
    EndpointInvalid(String),
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("enumeration exceeds the bound of {bound} candidates")]
    TooLarge { bound: usize },
    #[error("invalid descent start: {0}")]
    InvalidStart(String),
    #[error("no descent converged to the fiber")]
    NoConvergedSamples,
    #[error("operation requires k = 2, got k = {0}")]
    NotRankTwo(usize),
    #[error("side lengths are not normalized: {0}")]
    NotNormalized(String),
    #[error("base case unverified: {0}")]
    BaseCaseUnverified(String),
    #[error("parse error: {0}")]
    Parse(String),
}

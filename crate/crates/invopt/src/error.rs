//! Error types shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("observed decision is infeasible for its forward model (violation {0:.3e})")]
    ObservationInfeasible(f64),
    #[error("inverse problem is infeasible: no admissible parameter renders the observation optimal")]
    InverseInfeasible,
    #[error("big-M constant {0} is too small: a certifying dual or slack reaches the bound")]
    BigMViolation(f64),
    #[error("no single-row perturbation can make the observation optimal")]
    NoCandidateFacet,
    #[error("no feasible completion of the partially fixed decision exists")]
    CompletionInfeasible,
    #[error("no admissible parameter attains the target optimal value (minimal gap {gap:.6e})")]
    TargetUnattainable { gap: f64 },
    #[error("unsupported loss/model combination: {0}")]
    UnsupportedCombination(String),
    #[error("normalization requirement violated: {0}")]
    NormalizationRequired(String),
    #[error("unsupported objective for this estimator: {0}")]
    UnsupportedObjective(String),
    #[error("iteration limit reached ({0})")]
    IterationLimit(String),
    #[error("delta-net over the parameter space is empty (delta too large)")]
    EmptyNet,
    #[error("instance too large for brute-force enumeration: {0}")]
    TooLarge(String),
    #[error("concordance denominator is degenerate (max walk cost equals shortest path cost)")]
    DegenerateRange,
    #[error("a supplied path violates flow balance")]
    InfeasiblePaths,
    #[error("observed flows cannot be decomposed onto the network demands")]
    DecompositionInfeasible,
    #[error("forward problem unbounded for the current parameter")]
    ForwardUnbounded,
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

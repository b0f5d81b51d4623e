use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("graph has no edges (external + internal edge count must be positive)")]
    EmptyGraph,
    #[error("{what}: vertex index {index} out of range for {n} vertices")]
    IndexOutOfRange {
        what: String,
        index: usize,
        n: usize,
    },
    #[error("s = {s} lies outside the edge domain")]
    DomainError { s: f64 },
    #[error("diffusion coefficient is not admissible: {0}")]
    NonPositiveCoefficient(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("vertex {vertex} has nonzero coupling {alpha} but degree zero")]
    ZeroDegreeVertex { vertex: usize, alpha: String },
    #[error("matrix-mixed conditions require a compact graph, found {0} external edges")]
    ExternalEdgesPresent(usize),
    #[error("basis is rank deficient: rank {rank} < {cols} columns")]
    RankDeficientBasis { rank: usize, cols: usize },
    #[error("boundary spaces are not complementary: {0}")]
    NotComplementary(String),
    #[error("vertex update matrix is singular (sigma_min / sigma_max = {ratio:e})")]
    SingularUpdate { ratio: f64 },
    #[error("t0 = {0} is not in (0, 1]")]
    BadT0(f64),
    #[error("boundary conditions are not well-posed: {0}")]
    NotWellPosed(String),
    #[error("edge {edge}: speed snapping error {rel_error:.3e} exceeds tolerance {tol:.3e}")]
    SpeedSnapExceeded { edge: String, rel_error: f64, tol: f64 },
    #[error("edge {0}: wave propagation needs an edgewise-constant coefficient")]
    UnsupportedVariableCoefficient(String),
    #[error("external edge {edge}: initial data not supported in [0, {limit}]")]
    SupportViolation { edge: usize, limit: f64 },
    #[error("assembled system is singular (sigma_min = {sigma_min:e})")]
    SingularSystem { sigma_min: f64 },
    #[error("propagators need real boundary data, found imaginary part {0:e}")]
    ComplexBoundaryData(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

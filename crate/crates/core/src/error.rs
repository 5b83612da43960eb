// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Direction of the infinite inverse temperature reached at a spectral boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryDirection {
    /// Target sits on the smallest eigenvalue: β → +∞.
    PositiveInfinity,
    /// Target sits on the largest eigenvalue: β → −∞.
    NegativeInfinity,
}

impl std::fmt::Display for BoundaryDirection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryDirection::PositiveInfinity => write!(f, "+inf"),
            BoundaryDirection::NegativeInfinity => write!(f, "-inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix must be non-empty and square: got {len} entries for dimension {dim}")]
    InvalidShape { dim: usize, len: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("density matrix trace is {trace}, expected 1")]
    InvalidTrace { trace: f64 },

    #[error("density matrix has negative eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("state vector has squared norm {norm_sqr}, expected 1")]
    NotNormalized { norm_sqr: f64 },

    #[error("invalid ensemble weights: {0}")]
    InvalidWeights(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("spectrum must contain at least one eigenvalue")]
    EmptySpectrum,

    #[error("Kullback-Leibler divergence must be non-negative, got {0}")]
    NegativeDivergence(f64),

    #[error("target {target} outside the open interval ({min}, {max})")]
    TargetOutOfRange { target: f64, min: f64, max: f64 },

    #[error("observable is proportional to the identity; every ensemble has the same average")]
    DegenerateSpectrum,

    #[error("state is an extreme eigenstate; inverse temperature is {direction}")]
    PureEigenstateBoundary { direction: BoundaryDirection },

    #[error("could not bracket inverse temperature for target {target}")]
    BracketFailure { target: f64 },

    #[error("unsupported dimension {0} (quadrature handles d <= 4)")]
    UnsupportedDimension(usize),

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

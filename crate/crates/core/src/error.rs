use thiserror::Error;

/// Errors surfaced by state, operator, and bound constructors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension {0}: need d >= 2")]
    InvalidDimension(usize),

    #[error("matrix is not unitary: max deviation of U^dag U from identity is {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not Hermitian: max deviation of A - A^dag from zero is {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("state is not normalized: norm is {norm}")]
    NotNormalized { norm: f64 },

    #[error("vectors fail orthonormality: residual {residual:e}")]
    NotOrthonormal { residual: f64 },

    #[error("complement basis anchored at a different state (overlap modulus {overlap})")]
    AnchorMismatch { overlap: f64 },

    #[error("eigenphase {phase} lies within the branch-cut ambiguity band around pi")]
    BranchCut { phase: f64 },

    #[error("principal logarithm round-trip failed: residual {residual:e}")]
    LogRoundTrip { residual: f64 },

    #[error("trivial case excluded: variance product {product:e} is degenerate")]
    DegenerateVariance { product: f64 },

    #[error("denominator {value:e} too close to zero in quotient-form equality")]
    VanishingDenominator { value: f64 },

    #[error("operators satisfy no scalar commutation relation: residual {residual:e}")]
    NoCommutationPhase { residual: f64 },

    #[error("commutation phase {found} does not match the phase {expected} implied by K")]
    CommutationMismatch { expected: f64, found: f64 },

    #[error("value expected to be real has imaginary part {imag:e}")]
    ResidualImaginary { imag: f64 },

    #[error("non-finite value encountered")]
    NonFinite,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

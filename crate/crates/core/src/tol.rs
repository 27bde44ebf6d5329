//! Numerical tolerances used across the crate.
//!
//! Everything here assumes IEEE 754 f64 arithmetic on dense matrices of
//! dimension up to a few hundred; the defaults leave several digits of
//! headroom over the rounding actually observed at those sizes.

/// State normalization: deviation of the Euclidean norm from 1.
pub const NORM_TOL: f64 = 1e-12;

/// Orthogonality and completeness checks on complement bases, and the
/// admissible residual imaginary part of quantities that are real by
/// construction.
pub const ORTH_TOL: f64 = 1e-10;

/// Max-entry deviation of `U^dag U` from the identity (unitarity) and of
/// `A - A^dag` from zero (Hermiticity).
pub const UNITARY_TOL: f64 = 1e-10;

/// Round-trip accuracy of the principal matrix logarithm:
/// `exp(i * scale * h)` must reproduce the input within this max-entry bound.
pub const LOG_TOL: f64 = 1e-8;

/// An eigenphase closer than this to the branch cut at `pi` is reported as
/// ambiguous rather than silently resolved.
pub const BRANCH_TOL: f64 = 1e-9;

/// Equality certification: admissible deviation between an equality
/// right-hand side and its directly computed left-hand side.
pub const EQ_TOL: f64 = 1e-10;

/// Below this, a variance product counts as degenerate and the product-form
/// quantities are undefined.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// Amplitudes below this modulus count as zero in nonzero-term counting.
/// Never applied in arithmetic.
pub const ZERO_AMPLITUDE: f64 = 1e-14;

/// Floor for relative-error denominators in the convergence study.
pub const REL_ERROR_FLOOR: f64 = 1e-15;

//! Variance-based uncertainty equalities and inequalities for unitary
//! operators on pure quantum states.
//!
//! The library computes, for a pair of operators `(U, V)` and a pure state
//! `psi` with an orthonormal complement basis:
//!
//! * sum- and product-form uncertainty equality right-hand sides, exact for
//!   every pure state,
//! * the hierarchical lower bounds obtained by keeping the best `n`
//!   perpendicular terms of those equalities,
//! * the MSUUR, BPUUR, and BUUR baseline bounds,
//! * the high-dimensional limit connecting unitary quantities to their
//!   `2*pi/d`-scaled Hermitian-generator counterparts.
//!
//! The `uuncert` binary exposes a verification suite, theta-grid sweeps over
//! the clock/shift operator pair, and the high-dimensional-limit experiment.

pub mod error;
pub mod limit;
pub mod linalg;
pub mod operators;
pub mod sweep;
pub mod tol;
pub mod uncertainty;
pub mod verify;

pub use error::Error;
pub use linalg::{ComplementBasis, Operator, OperatorKind, PureState, C64};
pub use uncertainty::SignChoice;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

//! Concrete operator pairs and states used in the comparisons: the
//! clock/shift pair connected by the discrete Fourier transform, the
//! `cos(theta)|0> - sin(theta)|d-1>` state family, its canonical complement
//! basis, and scalar commutation-phase extraction.

use std::f64::consts::PI;

use crate::error::Error;
use crate::linalg::{C64, ComplementBasis, Operator, PureState};
use crate::tol;
use crate::Result;

/// Clock and shift operators of dimension `d`, satisfying
/// `clock * shift = omega * shift * clock` with `omega = e^{2 pi i / d}`.
#[derive(Debug, Clone)]
pub struct DftPair {
    dim: usize,
    clock: Operator,
    shift: Operator,
    omega: C64,
}

impl DftPair {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `U = diag(1, omega, omega^2, ..., omega^{d-1})`.
    pub fn clock(&self) -> &Operator {
        &self.clock
    }

    /// `V |k> = |k+1 mod d>`.
    pub fn shift(&self) -> &Operator {
        &self.shift
    }

    pub fn omega(&self) -> C64 {
        self.omega
    }

    /// Max-entry modulus of `UV - omega VU`.
    pub fn commutation_residual(&self) -> f64 {
        let uv = self.clock.matmul(&self.shift).unwrap();
        let vu = self.shift.matmul(&self.clock).unwrap();
        uv.max_abs_diff(&vu.scale(self.omega))
    }
}

/// Builds the clock/shift pair for dimension `d`.
pub fn dft_pair(dim: usize) -> Result<DftPair> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let omega = C64::from_polar(1.0, 2.0 * PI / dim as f64);
    let phases: Vec<C64> = (0..dim)
        .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / dim as f64))
        .collect();
    let clock = Operator::diagonal(&phases)?;

    let mut data = vec![C64::ZERO; dim * dim];
    for k in 0..dim {
        data[((k + 1) % dim) * dim + k] = C64::ONE;
    }
    let shift = Operator::unitary(dim, data)?;

    let pair = DftPair {
        dim,
        clock,
        shift,
        omega,
    };
    debug_assert!(pair.commutation_residual() < 1e-12);
    Ok(pair)
}

/// Extracts the scalar phase `phi` in `UV = e^{i phi} VU`, normalized to
/// `(-pi, pi]`, or fails when `U V U^dag V^dag` is not a phase times the
/// identity within `UNITARY_TOL`.
pub fn commutation_phase(u: &Operator, v: &Operator) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    let d = u.dim();
    let m = u
        .matmul(v)?
        .matmul(&u.adjoint())?
        .matmul(&v.adjoint())?;
    let trace: C64 = (0..d).map(|i| m.get(i, i)).sum();
    let mean = trace / d as f64;
    if mean.norm() < 0.5 {
        // no single phase can fit; report the diagonal spread
        return Err(Error::NoCommutationPhase {
            residual: 1.0 - mean.norm(),
        });
    }
    let phi = mean.arg();
    let phase = C64::from_polar(1.0, phi);
    let scaled = Operator::identity(d)?.scale(phase);
    let residual = m.max_abs_diff(&scaled);
    if residual > tol::UNITARY_TOL {
        return Err(Error::NoCommutationPhase { residual });
    }
    Ok(phi)
}

/// The example state `cos(theta)|0> - sin(theta)|d-1>`, `theta` in
/// `[0, pi/2]`.
pub fn example_state(dim: usize, theta: f64) -> Result<PureState> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    if !(0.0..=PI / 2.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "theta {theta} outside [0, pi/2]"
        )));
    }
    let mut amps = vec![C64::ZERO; dim];
    amps[0] = C64::new(theta.cos(), 0.0);
    amps[dim - 1] = C64::new(-theta.sin(), 0.0);
    PureState::new(amps)
}

/// Canonical complement basis for the example state:
/// `{ sin(theta)|0> + cos(theta)|d-1>, |1>, ..., |d-2> }`.
pub fn canonical_complement(dim: usize, theta: f64) -> Result<ComplementBasis> {
    let psi = example_state(dim, theta)?;
    let mut vectors = Vec::with_capacity(dim - 1);
    let mut first = vec![C64::ZERO; dim];
    first[0] = C64::new(theta.sin(), 0.0);
    first[dim - 1] = C64::new(theta.cos(), 0.0);
    vectors.push(first);
    for k in 1..dim - 1 {
        let mut v = vec![C64::ZERO; dim];
        v[k] = C64::ONE;
        vectors.push(v);
    }
    ComplementBasis::new(psi, vectors)
}

//! High-dimensional limit machinery: Hermitian generators of the clock and
//! shift operators, the sum- and product-form equalities for Hermitian
//! pairs, their one-term truncations, and the convergence study comparing
//! unitary quantities against their `2*pi/d`-scaled Hermitian counterparts.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{
    self, C64, ComplementBasis, Operator, OperatorKind, PureState, complete_complement,
    principal_log_generator,
};
use crate::operators::DftPair;
use crate::tol;
use crate::uncertainty::{SignChoice, covariance, general_variance};
use crate::Result;

/// Hermitian generators `u`, `v` with `U = exp(i * scale * u)` and
/// `V = exp(i * scale * v)`, `scale = sqrt(2 pi / d)`.
#[derive(Debug, Clone)]
pub struct HermitianPair {
    pub u: Operator,
    pub v: Operator,
    pub scale: f64,
    pub source_dim: usize,
}

/// Extracts the Hermitian generators of a clock/shift pair on the principal
/// branch. Even dimensions place a clock eigenphase exactly at `pi` and are
/// reported as a branch-cut ambiguity.
pub fn hermitian_pair_from_dft(pair: &DftPair) -> Result<HermitianPair> {
    let d = pair.dim();
    let scale = (2.0 * PI / d as f64).sqrt();
    let u = principal_log_generator(pair.clock(), scale)?;
    let v = principal_log_generator(pair.shift(), scale)?;
    Ok(HermitianPair {
        u,
        v,
        scale,
        source_dim: d,
    })
}

fn check_hermitian(op: &Operator) -> Result<()> {
    if op.kind() != OperatorKind::Hermitian {
        return Err(Error::NotHermitian {
            deviation: op.hermiticity_deviation(),
        });
    }
    Ok(())
}

/// `<[u, v]>`, validated to be purely imaginary as it must be for Hermitian
/// inputs.
pub fn commutator_expectation(u: &Operator, v: &Operator, psi: &PureState) -> Result<C64> {
    let c = linalg::expectation(&u.commutator(v)?, psi)?;
    if c.re.abs() > tol::ORTH_TOL {
        return Err(Error::ResidualImaginary { imag: c.re });
    }
    Ok(c)
}

/// `|<perp_k| (u -/+ iv) |psi>|^2` for every basis vector.
fn perp_terms(
    u: &Operator,
    v: &Operator,
    psi: &PureState,
    basis: &ComplementBasis,
    s: SignChoice,
) -> Result<Vec<f64>> {
    let uv = u.apply(psi.amplitudes())?;
    let vv = v.apply(psi.amplitudes())?;
    let i_unit = match s {
        SignChoice::Plus => C64::new(0.0, 1.0),
        SignChoice::Minus => C64::new(0.0, -1.0),
    };
    let g: Vec<C64> = uv.iter().zip(&vv).map(|(x, y)| x - i_unit * y).collect();
    Ok(basis
        .vectors()
        .iter()
        .map(|w| linalg::inner(w, &g).norm_sqr())
        .collect())
}

/// Sum-form Hermitian equality right-hand side:
/// `sum_k |<perp_k| (u -/+ iv) |psi>|^2 +/- i <[u, v]>`.
/// Equals `Delta u^2 + Delta v^2`.
pub fn hermitian_sum_equality(
    u: &Operator,
    v: &Operator,
    psi: &PureState,
    basis: &ComplementBasis,
    s: SignChoice,
) -> Result<f64> {
    check_hermitian(u)?;
    check_hermitian(v)?;
    let terms = perp_terms(u, v, psi, basis, s)?;
    let c = commutator_expectation(u, v, psi)?;
    // +/- i<[u,v]> is real because <[u,v]> is purely imaginary
    let comm_term = match s {
        SignChoice::Plus => -c.im,
        SignChoice::Minus => c.im,
    };
    Ok(terms.iter().sum::<f64>() + comm_term)
}

/// Product-form Hermitian equality, the quotient
/// `(+/- (1/2) i <[u, v]>) / (1 - (1/2) sum_k |<perp_k| (u/du -/+ i v/dv) |psi>|^2)`.
/// Equals `Delta u * Delta v` when the variances and the denominator are
/// nondegenerate.
pub fn hermitian_product_equality(
    u: &Operator,
    v: &Operator,
    psi: &PureState,
    basis: &ComplementBasis,
    s: SignChoice,
) -> Result<f64> {
    check_hermitian(u)?;
    check_hermitian(v)?;
    let du = general_variance(u, psi)?.value.sqrt();
    let dv = general_variance(v, psi)?.value.sqrt();
    if du * dv <= tol::DEGENERATE_TOL {
        return Err(Error::DegenerateVariance { product: du * dv });
    }
    let u_scaled = u.scale(C64::new(1.0 / du, 0.0));
    let v_scaled = v.scale(C64::new(1.0 / dv, 0.0));
    let terms = perp_terms(&u_scaled, &v_scaled, psi, basis, s)?;
    let denom = 1.0 - 0.5 * terms.iter().sum::<f64>();
    if denom.abs() <= tol::DEGENERATE_TOL {
        return Err(Error::VanishingDenominator { value: denom });
    }
    let c = commutator_expectation(u, v, psi)?;
    let numer = match s {
        SignChoice::Plus => -0.5 * c.im,
        SignChoice::Minus => 0.5 * c.im,
    };
    Ok(numer / denom)
}

/// One-term truncations of the two Hermitian equalities for a single
/// perpendicular vector; each is a lower bound on its left-hand side.
/// Returns `(sum_form, product_form)`.
pub fn hermitian_truncated_relations(
    u: &Operator,
    v: &Operator,
    psi: &PureState,
    perp: &[C64],
    s: SignChoice,
) -> Result<(f64, f64)> {
    check_hermitian(u)?;
    check_hermitian(v)?;
    if perp.len() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: perp.len(),
        });
    }
    let norm = linalg::vec_norm(perp);
    if (norm - 1.0).abs() > tol::NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    let overlap = linalg::inner(psi.amplitudes(), perp).norm();
    if overlap > tol::ORTH_TOL {
        return Err(Error::NotOrthonormal { residual: overlap });
    }

    let i_unit = match s {
        SignChoice::Plus => C64::new(0.0, 1.0),
        SignChoice::Minus => C64::new(0.0, -1.0),
    };
    let c = commutator_expectation(u, v, psi)?;
    let comm_term = match s {
        SignChoice::Plus => -c.im,
        SignChoice::Minus => c.im,
    };

    let uv = u.apply(psi.amplitudes())?;
    let vv = v.apply(psi.amplitudes())?;
    let g: Vec<C64> = uv.iter().zip(&vv).map(|(x, y)| x - i_unit * y).collect();
    let sum_form = linalg::inner(perp, &g).norm_sqr() + comm_term;

    let du = general_variance(u, psi)?.value.sqrt();
    let dv = general_variance(v, psi)?.value.sqrt();
    if du * dv <= tol::DEGENERATE_TOL {
        return Err(Error::DegenerateVariance { product: du * dv });
    }
    let gs: Vec<C64> = uv
        .iter()
        .zip(&vv)
        .map(|(x, y)| x / du - i_unit * (y / dv))
        .collect();
    let denom = 1.0 - 0.5 * linalg::inner(perp, &gs).norm_sqr();
    if denom.abs() <= tol::DEGENERATE_TOL {
        return Err(Error::VanishingDenominator { value: denom });
    }
    let product_form = 0.5 * comm_term / denom;
    Ok((sum_form, product_form))
}

/// Localized state family used for the limit: a wrapped discrete Gaussian
/// centered on index 0 with width `d^{1/4}`, so the state is concentrated
/// where both the clock and shift eigenphases are small and the series
/// expansion of `exp(i * scale * u)` applies.
pub fn localized_state(dim: usize) -> Result<PureState> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let width = (dim as f64).powf(0.25);
    let amps: Vec<C64> = (0..dim)
        .map(|k| {
            let dist = k.min(dim - k) as f64;
            C64::new((-dist * dist / (2.0 * width * width)).exp(), 0.0)
        })
        .collect();
    PureState::normalized(amps)
}

/// Which unitary quantity a convergence record compares against its scaled
/// Hermitian counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConvergenceQuantity {
    /// `Delta U^2` vs `(2 pi / d) Delta u^2`
    VarianceU,
    /// `Delta V^2` vs `(2 pi / d) Delta v^2`
    VarianceV,
    /// `Im[Cov(U, V)]` vs `(pi / d) (-i) <[u, v]>`
    ImCovariance,
    /// sum of perpendicular terms of the sum equality vs its scaled
    /// Hermitian analogue
    PerpTermSum,
}

impl std::fmt::Display for ConvergenceQuantity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConvergenceQuantity::VarianceU => write!(f, "variance_u"),
            ConvergenceQuantity::VarianceV => write!(f, "variance_v"),
            ConvergenceQuantity::ImCovariance => write!(f, "im_cov"),
            ConvergenceQuantity::PerpTermSum => write!(f, "perp_term_sum"),
        }
    }
}

/// One compared quantity at one dimension.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub dim: usize,
    pub quantity: ConvergenceQuantity,
    pub lhs_unitary: f64,
    pub lhs_scaled_hermitian: f64,
    pub relative_error: f64,
}

/// Convergence records plus the dimensions skipped for branch-cut reasons.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub records: Vec<ConvergenceRecord>,
    pub skipped: Vec<usize>,
}

fn record(
    dim: usize,
    quantity: ConvergenceQuantity,
    lhs_unitary: f64,
    lhs_scaled_hermitian: f64,
) -> ConvergenceRecord {
    let relative_error = (lhs_unitary - lhs_scaled_hermitian).abs()
        / lhs_unitary.abs().max(tol::REL_ERROR_FLOOR);
    ConvergenceRecord {
        dim,
        quantity,
        lhs_unitary,
        lhs_scaled_hermitian,
        relative_error,
    }
}

/// Compares unitary uncertainty quantities for the clock/shift pair against
/// their `2*pi/d`-scaled Hermitian-generator counterparts on the localized
/// state family. Even dimensions hit the branch cut and are skipped.
pub fn convergence_study(d_values: &[usize]) -> Result<ConvergenceStudy> {
    if d_values.is_empty() {
        return Err(Error::InvalidArgument("empty dimension list".into()));
    }
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for &d in d_values {
        let pair = crate::operators::dft_pair(d)?;
        let herm = match hermitian_pair_from_dft(&pair) {
            Ok(h) => h,
            Err(Error::BranchCut { .. }) => {
                skipped.push(d);
                continue;
            }
            Err(e) => return Err(e),
        };
        let psi = localized_state(d)?;
        let basis = complete_complement(&psi, None)?;
        let scale2 = 2.0 * PI / d as f64;

        let du2_unitary = general_variance(pair.clock(), &psi)?.value;
        let du2_herm = general_variance(&herm.u, &psi)?.value;
        records.push(record(
            d,
            ConvergenceQuantity::VarianceU,
            du2_unitary,
            scale2 * du2_herm,
        ));

        let dv2_unitary = general_variance(pair.shift(), &psi)?.value;
        let dv2_herm = general_variance(&herm.v, &psi)?.value;
        records.push(record(
            d,
            ConvergenceQuantity::VarianceV,
            dv2_unitary,
            scale2 * dv2_herm,
        ));

        let cov_unitary = covariance(pair.clock(), pair.shift(), &psi)?.value.im;
        let comm = commutator_expectation(&herm.u, &herm.v, &psi)?;
        // (pi / (i d)) <[u, v]> is real; its value is (pi / d) * Im<[u, v]>
        records.push(record(
            d,
            ConvergenceQuantity::ImCovariance,
            cov_unitary,
            PI / d as f64 * comm.im,
        ));

        // the lower-sign combination is additive for this pair (Im[Cov] < 0
        // on the localized family), so the term sum does not cancel and the
        // relative error stays well conditioned
        let terms_unitary: f64 =
            perp_terms(pair.clock(), pair.shift(), &psi, &basis, SignChoice::Minus)?
                .iter()
                .sum();
        let terms_herm: f64 = perp_terms(&herm.u, &herm.v, &psi, &basis, SignChoice::Minus)?
            .iter()
            .sum();
        records.push(record(
            d,
            ConvergenceQuantity::PerpTermSum,
            terms_unitary,
            scale2 * terms_herm,
        ));
    }
    Ok(ConvergenceStudy { records, skipped })
}

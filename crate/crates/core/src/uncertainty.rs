//! Variances, covariances, the sum- and product-form uncertainty equalities,
//! the hierarchical lower bounds obtained by keeping the best `n`
//! perpendicular terms, and the baseline bounds they are compared against.
//!
//! Sign pairs: every formula here carries a paired `+/-` convention, and
//! `SignChoice::Plus` always selects the upper signs together. Both variants
//! are exact for the equalities and valid for the bounds.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{self, C64, ComplementBasis, Operator, OperatorKind, PureState};
use crate::operators::commutation_phase;
use crate::tol;
use crate::Result;

/// Upper-sign or lower-sign variant of a paired `+/-` formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignChoice {
    Plus,
    Minus,
}

impl SignChoice {
    pub const BOTH: [SignChoice; 2] = [SignChoice::Plus, SignChoice::Minus];

    /// +1 for the upper signs, -1 for the lower.
    pub fn factor(self) -> f64 {
        match self {
            SignChoice::Plus => 1.0,
            SignChoice::Minus => -1.0,
        }
    }
}

impl std::fmt::Display for SignChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SignChoice::Plus => write!(f, "plus"),
            SignChoice::Minus => write!(f, "minus"),
        }
    }
}

/// A nonnegative variance `Delta O^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceValue {
    pub value: f64,
}

/// The complex covariance `Cov(A, B) = <A^dag B> - <A^dag><B>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceValue {
    pub value: C64,
}

/// Identifier of a bound or equality right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundName {
    MsuurSum,
    Bpuur1,
    Bpuur2,
    Buur,
    Uurs(usize),
    Uurp(usize),
    UuesRhs,
    UuepRhs,
}

impl std::fmt::Display for BoundName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundName::MsuurSum => write!(f, "MSUUR_SUM"),
            BoundName::Bpuur1 => write!(f, "BPUUR1"),
            BoundName::Bpuur2 => write!(f, "BPUUR2"),
            BoundName::Buur => write!(f, "BUUR"),
            BoundName::Uurs(n) => write!(f, "UURS_{n}"),
            BoundName::Uurp(n) => write!(f, "UURP_{n}"),
            BoundName::UuesRhs => write!(f, "UUES_RHS"),
            BoundName::UuepRhs => write!(f, "UUEP_RHS"),
        }
    }
}

/// One evaluated bound or equality right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundValue {
    pub name: BoundName,
    pub value: f64,
    pub sign_used: Option<SignChoice>,
    pub subset_used: Option<Vec<usize>>,
}

impl BoundValue {
    fn plain(name: BoundName, value: f64) -> Self {
        Self {
            name,
            value,
            sign_used: None,
            subset_used: None,
        }
    }

    fn signed(name: BoundName, value: f64, sign: SignChoice) -> Self {
        Self {
            name,
            value,
            sign_used: Some(sign),
            subset_used: None,
        }
    }
}

/// Every variance, covariance, equality right-hand side, and bound for one
/// `(U, V, psi, basis)` instance.
#[derive(Debug, Clone)]
pub struct UncertaintyReport {
    pub du2: VarianceValue,
    pub dv2: VarianceValue,
    pub cov: CovarianceValue,
    pub lhs_sum: f64,
    pub lhs_prod: f64,
    pub bounds: Vec<BoundValue>,
}

impl UncertaintyReport {
    pub fn bound(&self, name: BoundName) -> Option<&BoundValue> {
        self.bounds.iter().find(|b| b.name == name)
    }

    /// All entries with the given name (equality RHS entries appear once
    /// per sign).
    pub fn bounds_named(&self, name: BoundName) -> Vec<&BoundValue> {
        self.bounds.iter().filter(|b| b.name == name).collect()
    }
}

fn check_dims(a: &Operator, psi: &PureState) -> Result<()> {
    if a.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: a.dim(),
        });
    }
    Ok(())
}

fn check_anchor(basis: &ComplementBasis, psi: &PureState) -> Result<()> {
    if basis.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: basis.dim(),
        });
    }
    // a global phase on psi leaves every quantity here unchanged, so the
    // anchor only has to match up to phase
    let overlap = basis.anchor().overlap(psi).norm();
    if (overlap - 1.0).abs() > tol::ORTH_TOL {
        return Err(Error::AnchorMismatch { overlap });
    }
    Ok(())
}

/// `Delta A^2 = <A^dag A> - |<A>|^2`, valid for general operators.
/// For a unitary this reduces to `1 - |<A>|^2`.
pub fn general_variance(a: &Operator, psi: &PureState) -> Result<VarianceValue> {
    check_dims(a, psi)?;
    let av = a.apply(psi.amplitudes())?;
    let a_dag_a = av.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mean = linalg::inner(psi.amplitudes(), &av);
    let value = (a_dag_a - mean.norm_sqr()).max(0.0);
    Ok(VarianceValue { value })
}

/// `Cov(A, B) = <A^dag B> - <A^dag><B>`.
pub fn covariance(a: &Operator, b: &Operator, psi: &PureState) -> Result<CovarianceValue> {
    check_dims(a, psi)?;
    check_dims(b, psi)?;
    let av = a.apply(psi.amplitudes())?;
    let bv = b.apply(psi.amplitudes())?;
    let cross = linalg::inner(&av, &bv);
    let ma = linalg::inner(psi.amplitudes(), &av);
    let mb = linalg::inner(psi.amplitudes(), &bv);
    Ok(CovarianceValue {
        value: cross - ma.conj() * mb,
    })
}

/// The perpendicular summands `|<psi| A^dag +/- i B^dag |perp_k>|^2`,
/// one per basis vector, computed as `|<perp_k| (A -/+ iB) |psi>|^2`.
fn perpendicular_terms(
    a: &Operator,
    b: &Operator,
    psi: &PureState,
    basis: &ComplementBasis,
    s: SignChoice,
) -> Result<Vec<f64>> {
    let av = a.apply(psi.amplitudes())?;
    let bv = b.apply(psi.amplitudes())?;
    let i_unit = C64::new(0.0, s.factor());
    let f: Vec<C64> = av.iter().zip(&bv).map(|(x, y)| x - i_unit * y).collect();
    Ok(basis
        .vectors()
        .iter()
        .map(|v| linalg::inner(v, &f).norm_sqr())
        .collect())
}

/// Right-hand side of the sum-form uncertainty equality:
/// `sum_k |<psi| A^dag +/- i B^dag |perp_k>|^2 -/+ 2 Im[Cov(A, B)]`.
/// Equals `Delta A^2 + Delta B^2` for every valid input.
pub fn sum_equality_rhs(
    a: &Operator,
    b: &Operator,
    psi: &PureState,
    basis: &ComplementBasis,
    s: SignChoice,
) -> Result<BoundValue> {
    check_dims(a, psi)?;
    check_dims(b, psi)?;
    check_anchor(basis, psi)?;
    let terms = perpendicular_terms(a, b, psi, basis, s)?;
    let cov = covariance(a, b, psi)?.value;
    let value = terms.iter().sum::<f64>() - s.factor() * 2.0 * cov.im;
    Ok(BoundValue::signed(BoundName::UuesRhs, value, s))
}

/// Right-hand side of the product-form uncertainty equality:
/// `sum_k |<psi| A^dag dB +/- i B^dag dA |perp_k>|^2 / (2 dA dB)
///  -/+ Im[Cov(A, B)]` with `dA = Delta A`, `dB = Delta B`.
/// Equals `Delta A * Delta B`; the degenerate case `dA dB = 0` is excluded.
pub fn product_equality_rhs(
    a: &Operator,
    b: &Operator,
    psi: &PureState,
    basis: &ComplementBasis,
    s: SignChoice,
) -> Result<BoundValue> {
    check_dims(a, psi)?;
    check_dims(b, psi)?;
    check_anchor(basis, psi)?;
    let da = general_variance(a, psi)?.value.sqrt();
    let db = general_variance(b, psi)?.value.sqrt();
    if da * db <= tol::DEGENERATE_TOL {
        return Err(Error::DegenerateVariance { product: da * db });
    }
    let a_scaled = a.scale(C64::new(db, 0.0));
    let b_scaled = b.scale(C64::new(da, 0.0));
    let terms = perpendicular_terms(&a_scaled, &b_scaled, psi, basis, s)?;
    let cov = covariance(a, b, psi)?.value;
    let value = terms.iter().sum::<f64>() / (2.0 * da * db) - s.factor() * cov.im;
    Ok(BoundValue::signed(BoundName::UuepRhs, value, s))
}

/// Indices of the `n` largest values, ties broken toward lower indices;
/// returned sorted ascending.
fn top_n_indices(terms: &[f64], n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..terms.len()).collect();
    order.sort_by(|&i, &j| {
        terms[j]
            .partial_cmp(&terms[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let mut picked: Vec<usize> = order.into_iter().take(n).collect();
    picked.sort_unstable();
    picked
}

fn check_subset_size(n: usize, dim: usize) -> Result<()> {
    if n < 1 || n > dim - 1 {
        return Err(Error::InvalidArgument(format!(
            "subset size {n} outside 1..={}",
            dim - 1
        )));
    }
    Ok(())
}

fn check_unitary(op: &Operator) -> Result<()> {
    if op.kind() != OperatorKind::Unitary {
        return Err(Error::NotUnitary {
            deviation: op.unitarity_deviation(),
        });
    }
    Ok(())
}

/// Hierarchical sum bound: the maximum over size-`n` subsets of the
/// perpendicular summands, minus the covariance term. Because the summands
/// are nonnegative, the maximizing subset is the `n` largest terms.
pub fn hierarchical_sum_bound(
    u: &Operator,
    v: &Operator,
    psi: &PureState,
    basis: &ComplementBasis,
    n: usize,
    s: SignChoice,
) -> Result<BoundValue> {
    check_unitary(u)?;
    check_unitary(v)?;
    check_dims(u, psi)?;
    check_dims(v, psi)?;
    check_anchor(basis, psi)?;
    check_subset_size(n, psi.dim())?;
    let terms = perpendicular_terms(u, v, psi, basis, s)?;
    let subset = top_n_indices(&terms, n);
    let cov = covariance(u, v, psi)?.value;
    let value =
        subset.iter().map(|&k| terms[k]).sum::<f64>() - s.factor() * 2.0 * cov.im;
    Ok(BoundValue {
        name: BoundName::Uurs(n),
        value,
        sign_used: Some(s),
        subset_used: Some(subset),
    })
}

/// Hierarchical product bound, the size-`n` subset maximum of the
/// product-form summands over `2 * dU * dV`, minus the covariance term.
pub fn hierarchical_product_bound(
    u: &Operator,
    v: &Operator,
    psi: &PureState,
    basis: &ComplementBasis,
    n: usize,
    s: SignChoice,
) -> Result<BoundValue> {
    check_unitary(u)?;
    check_unitary(v)?;
    check_dims(u, psi)?;
    check_dims(v, psi)?;
    check_anchor(basis, psi)?;
    check_subset_size(n, psi.dim())?;
    let du = general_variance(u, psi)?.value.sqrt();
    let dv = general_variance(v, psi)?.value.sqrt();
    if du * dv <= tol::DEGENERATE_TOL {
        return Err(Error::DegenerateVariance { product: du * dv });
    }
    let u_scaled = u.scale(C64::new(dv, 0.0));
    let v_scaled = v.scale(C64::new(du, 0.0));
    let terms = perpendicular_terms(&u_scaled, &v_scaled, psi, basis, s)?;
    let subset = top_n_indices(&terms, n);
    let cov = covariance(u, v, psi)?.value;
    let value = subset.iter().map(|&k| terms[k]).sum::<f64>() / (2.0 * du * dv)
        - s.factor() * cov.im;
    Ok(BoundValue {
        name: BoundName::Uurp(n),
        value,
        sign_used: Some(s),
        subset_used: Some(subset),
    })
}

/// Evaluates a signed bound for both variants and keeps the larger value;
/// ties go to `Plus`.
pub fn best_sign<F>(mut eval: F) -> Result<BoundValue>
where
    F: FnMut(SignChoice) -> Result<BoundValue>,
{
    let plus = eval(SignChoice::Plus)?;
    let minus = eval(SignChoice::Minus)?;
    Ok(if minus.value > plus.value { minus } else { plus })
}

/// The BPUUR1 sum bound
/// `1 + |<U^dag V>|^2 - <U^dag V><U><V^dag> - <V><U^dag><V^dag U>`.
/// The two cross terms are conjugates, so the value is real.
pub fn bpuur1_bound(u: &Operator, v: &Operator, psi: &PureState) -> Result<BoundValue> {
    check_unitary(u)?;
    check_unitary(v)?;
    check_dims(u, psi)?;
    check_dims(v, psi)?;
    let uv = covariance(u, v, psi)?; // reuse <U^dag V> via cov + means
    let mu = linalg::expectation(u, psi)?;
    let mv = linalg::expectation(v, psi)?;
    let udv = uv.value + mu.conj() * mv; // <U^dag V>
    let total = C64::ONE + udv * udv.conj() - udv * mu * mv.conj() - mv * mu.conj() * udv.conj();
    if total.im.abs() > tol::ORTH_TOL {
        return Err(Error::ResidualImaginary { imag: total.im });
    }
    Ok(BoundValue::plain(BoundName::Bpuur1, total.re))
}

/// The BPUUR2 single-perpendicular-state bound
/// `|<psi| U^dag +/- i V^dag |perp>|^2 -/+ 2 Im[Cov(U, V)]`.
pub fn bpuur2_bound(
    u: &Operator,
    v: &Operator,
    psi: &PureState,
    perp: &[C64],
    s: SignChoice,
) -> Result<BoundValue> {
    check_unitary(u)?;
    check_unitary(v)?;
    check_dims(u, psi)?;
    check_dims(v, psi)?;
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
    let uv = u.apply(psi.amplitudes())?;
    let vv = v.apply(psi.amplitudes())?;
    let i_unit = C64::new(0.0, s.factor());
    let f: Vec<C64> = uv.iter().zip(&vv).map(|(x, y)| x - i_unit * y).collect();
    let term = linalg::inner(perp, &f).norm_sqr();
    let cov = covariance(u, v, psi)?.value;
    Ok(BoundValue::signed(
        BoundName::Bpuur2,
        term - s.factor() * 2.0 * cov.im,
        s,
    ))
}

/// The BUUR covariance product bound `|Cov(U, V)|^2 <= dU^2 dV^2`.
pub fn buur_bound(u: &Operator, v: &Operator, psi: &PureState) -> Result<BoundValue> {
    check_unitary(u)?;
    check_unitary(v)?;
    let cov = covariance(u, v, psi)?.value;
    Ok(BoundValue::plain(BoundName::Buur, cov.norm_sqr()))
}

/// Outcome of evaluating the MSUUR relation on one instance.
#[derive(Debug, Clone, Copy)]
pub struct MsuurCheck {
    pub holds: bool,
    pub residual: f64,
}

/// Above this, `K = tan(phi/2)` is treated as the `phi -> pi` degenerate
/// limit where the relation reduces to `dU^2 + dV^2 >= 1`.
const K_DEGENERATE: f64 = 1e8;

/// Evaluates the MSUUR relation
/// `(1 + 2K) dU^2 dV^2 + K^2 (dU^2 + dV^2) >= K^2` for a pair satisfying
/// `UV = e^{i phi} VU` with `K = tan(phi/2)`.
///
/// The commutation phase is validated against `K` first. For very large `K`
/// (a phase at `pi`) the residual is the degenerate form
/// `dU^2 + dV^2 - 1`, which avoids multiplying roundoff by `K^2`.
pub fn msuur_check(u: &Operator, v: &Operator, psi: &PureState, k: f64) -> Result<MsuurCheck> {
    check_unitary(u)?;
    check_unitary(v)?;
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("K must be positive, got {k}")));
    }
    let phi = commutation_phase(u, v)?;
    let expected = 2.0 * k.atan();
    if (phi - expected).abs() > 1e-8 {
        return Err(Error::CommutationMismatch {
            expected,
            found: phi,
        });
    }
    let x = general_variance(u, psi)?.value;
    let y = general_variance(v, psi)?.value;
    let residual = if k > K_DEGENERATE {
        x + y - 1.0
    } else {
        (1.0 + 2.0 * k) * x * y + k * k * (x + y) - k * k
    };
    Ok(MsuurCheck {
        holds: residual >= -tol::EQ_TOL,
        residual,
    })
}

/// Minimum of `x + y` over the MSUUR region
/// `(1 + 2K) x y + K^2 (x + y) >= K^2` with `x, y` in `[0, 1]`:
/// by symmetry the minimum sits at `x = y` and equals `2K / (1 + 2K)`.
pub fn msuur_sum_lower_bound(k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("K must be positive, got {k}")));
    }
    Ok(2.0 * k / (1.0 + 2.0 * k))
}

/// Interference visibility `|<psi| U |psi>| = sqrt(1 - dU^2)`.
pub fn visibility(u: &Operator, psi: &PureState) -> Result<f64> {
    check_unitary(u)?;
    Ok(linalg::expectation(u, psi)?.norm())
}

/// Full per-instance report: left-hand sides, both equality right-hand
/// sides per sign, the baseline bounds, and the hierarchical bounds for each
/// requested `n` with the better sign.
///
/// Degenerate product-form entries are omitted rather than failing the
/// whole report.
pub fn full_report(
    u: &Operator,
    v: &Operator,
    psi: &PureState,
    basis: &ComplementBasis,
    n_values: &[usize],
) -> Result<UncertaintyReport> {
    let du2 = general_variance(u, psi)?;
    let dv2 = general_variance(v, psi)?;
    let cov = covariance(u, v, psi)?;
    let lhs_sum = du2.value + dv2.value;
    let lhs_prod = du2.value * dv2.value;

    let mut bounds = Vec::new();
    for s in SignChoice::BOTH {
        bounds.push(sum_equality_rhs(u, v, psi, basis, s)?);
    }
    for s in SignChoice::BOTH {
        match product_equality_rhs(u, v, psi, basis, s) {
            Ok(b) => bounds.push(b),
            Err(Error::DegenerateVariance { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    bounds.push(bpuur1_bound(u, v, psi)?);
    // BPUUR2 over the best single basis vector: identical to UURS1
    bounds.push(best_sign(|s| {
        let b = hierarchical_sum_bound(u, v, psi, basis, 1, s)?;
        Ok(BoundValue {
            name: BoundName::Bpuur2,
            ..b
        })
    })?);
    bounds.push(buur_bound(u, v, psi)?);
    for &n in n_values {
        bounds.push(best_sign(|s| hierarchical_sum_bound(u, v, psi, basis, n, s))?);
        match best_sign(|s| hierarchical_product_bound(u, v, psi, basis, n, s)) {
            Ok(b) => bounds.push(b),
            Err(Error::DegenerateVariance { .. }) => {}
            Err(e) => return Err(e),
        }
    }

    Ok(UncertaintyReport {
        du2,
        dv2,
        cov,
        lhs_sum,
        lhs_prod,
        bounds,
    })
}

/// Count of perpendicular summand amplitudes above the zero threshold for
/// the sum equality, used to report the support of the expansion.
pub fn nonzero_term_count(
    u: &Operator,
    v: &Operator,
    psi: &PureState,
    basis: &ComplementBasis,
    s: SignChoice,
) -> Result<usize> {
    let terms = perpendicular_terms(u, v, psi, basis, s)?;
    Ok(terms
        .iter()
        .filter(|t| t.sqrt() >= tol::ZERO_AMPLITUDE)
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{
        complete_complement, random_complement, random_pure_state, random_unitary,
    };
    use crate::operators::{canonical_complement, dft_pair, example_state};
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

    fn pauli_pair() -> (Operator, Operator) {
        let pair = dft_pair(2).unwrap();
        (pair.clock().clone(), pair.shift().clone())
    }

    /// Brute-force subset maximization oracle, independent of the sorted
    /// prefix shortcut.
    fn brute_force_max_subset(terms: &[f64], n: usize) -> f64 {
        fn rec(terms: &[f64], start: usize, left: usize) -> f64 {
            if left == 0 {
                return 0.0;
            }
            let mut best = f64::NEG_INFINITY;
            for k in start..=terms.len() - left {
                best = best.max(terms[k] + rec(terms, k + 1, left - 1));
            }
            best
        }
        rec(terms, 0, n)
    }

    #[test]
    fn variance_of_identity_vanishes() {
        let psi = random_pure_state(3, 0).unwrap();
        let id = Operator::identity(3).unwrap();
        assert!(general_variance(&id, &psi).unwrap().value < 1e-14);
    }

    #[test]
    fn variance_sigma_z_example_state() {
        let (sz, _) = pauli_pair();
        for theta in [0.1, FRAC_PI_8, FRAC_PI_4, 1.1] {
            let psi = example_state(2, theta).unwrap();
            let var = general_variance(&sz, &psi).unwrap().value;
            let want = (2.0 * theta).sin().powi(2);
            assert!((var - want).abs() < 1e-13, "theta={theta}");
        }
    }

    #[test]
    fn variance_clock_d3_at_quarter_pi() {
        let pair = dft_pair(3).unwrap();
        let psi = example_state(3, FRAC_PI_4).unwrap();
        let var = general_variance(pair.clock(), &psi).unwrap().value;
        assert!((var - 0.75).abs() < 1e-13);
    }

    #[test]
    fn variance_unitary_shortcut_agrees() {
        for seed in 0..30 {
            let d = 2 + (seed as usize % 6);
            let u = random_unitary(d, seed).unwrap();
            let psi = random_pure_state(d, 900 + seed).unwrap();
            let general = general_variance(&u, &psi).unwrap().value;
            let shortcut = 1.0 - linalg::expectation(&u, &psi).unwrap().norm_sqr();
            assert!((general - shortcut).abs() < tol::EQ_TOL);
        }
    }

    #[test]
    fn covariance_self_pair_is_variance() {
        let u = random_unitary(4, 5).unwrap();
        let psi = random_pure_state(4, 6).unwrap();
        let cov = covariance(&u, &u, &psi).unwrap().value;
        let var = general_variance(&u, &psi).unwrap().value;
        assert!(cov.im.abs() < tol::ORTH_TOL);
        assert!((cov.re - var).abs() < tol::ORTH_TOL);
    }

    #[test]
    fn covariance_pauli_instances() {
        let (sz, sx) = pauli_pair();
        let psi0 = PureState::basis_state(2, 0).unwrap();
        assert!(covariance(&sz, &sx, &psi0).unwrap().value.norm() < 1e-14);
        let psi = example_state(2, FRAC_PI_4).unwrap();
        assert!(covariance(&sz, &sx, &psi).unwrap().value.norm() < 1e-14);
    }

    #[test]
    fn covariance_conjugate_symmetry() {
        let a = random_unitary(5, 7).unwrap();
        let b = random_unitary(5, 8).unwrap();
        let psi = random_pure_state(5, 9).unwrap();
        let ab = covariance(&a, &b, &psi).unwrap().value;
        let ba = covariance(&b, &a, &psi).unwrap().value;
        assert!((ab - ba.conj()).norm() < 1e-13);
    }

    #[test]
    fn sum_equality_identity_pair() {
        let psi = random_pure_state(4, 1).unwrap();
        let basis = complete_complement(&psi, None).unwrap();
        let id = Operator::identity(4).unwrap();
        for s in SignChoice::BOTH {
            let rhs = sum_equality_rhs(&id, &id, &psi, &basis, s).unwrap();
            assert!(rhs.value.abs() < 1e-13);
        }
    }

    #[test]
    fn sum_equality_pauli_saturates_at_one() {
        let (sz, sx) = pauli_pair();
        for i in 0..=20 {
            let theta = PI / 2.0 * i as f64 / 20.0;
            let psi = example_state(2, theta).unwrap();
            let basis = canonical_complement(2, theta).unwrap();
            for s in SignChoice::BOTH {
                let rhs = sum_equality_rhs(&sz, &sx, &psi, &basis, s).unwrap();
                assert!((rhs.value - 1.0).abs() < 1e-12, "theta={theta}");
            }
        }
    }

    #[test]
    fn sum_equality_random_d4() {
        for seed in 0..50 {
            let u = random_unitary(4, 3 * seed).unwrap();
            let v = random_unitary(4, 3 * seed + 1).unwrap();
            let psi = random_pure_state(4, 3 * seed + 2).unwrap();
            let basis = random_complement(&psi, 7000 + seed).unwrap();
            let lhs = general_variance(&u, &psi).unwrap().value
                + general_variance(&v, &psi).unwrap().value;
            for s in SignChoice::BOTH {
                let rhs = sum_equality_rhs(&u, &v, &psi, &basis, s).unwrap();
                assert!((rhs.value - lhs).abs() < 1e-10, "seed={seed}");
            }
        }
    }

    #[test]
    fn product_equality_rejects_degenerate() {
        let psi = PureState::basis_state(2, 0).unwrap();
        let basis = complete_complement(&psi, None).unwrap();
        let (sz, sx) = pauli_pair();
        // psi is an eigenstate of sigma_z, so dU = 0
        assert!(matches!(
            product_equality_rhs(&sz, &sx, &psi, &basis, SignChoice::Plus),
            Err(Error::DegenerateVariance { .. })
        ));
    }

    #[test]
    fn product_equality_pauli_at_eighth_pi() {
        let (sz, sx) = pauli_pair();
        let theta = FRAC_PI_8;
        let psi = example_state(2, theta).unwrap();
        let basis = canonical_complement(2, theta).unwrap();
        // dU^2 = sin^2(2t), dV^2 = cos^2(2t) -> dU dV = 1/2 at t = pi/8
        for s in SignChoice::BOTH {
            let rhs = product_equality_rhs(&sz, &sx, &psi, &basis, s).unwrap();
            assert!((rhs.value - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn product_equality_random_d3() {
        for seed in 0..50 {
            let u = random_unitary(3, 100 + 3 * seed).unwrap();
            let v = random_unitary(3, 101 + 3 * seed).unwrap();
            let psi = random_pure_state(3, 102 + 3 * seed).unwrap();
            let basis = random_complement(&psi, 8000 + seed).unwrap();
            let lhs = (general_variance(&u, &psi).unwrap().value
                * general_variance(&v, &psi).unwrap().value)
                .sqrt();
            for s in SignChoice::BOTH {
                let rhs = product_equality_rhs(&u, &v, &psi, &basis, s).unwrap();
                assert!((rhs.value - lhs).abs() < 1e-10, "seed={seed}");
            }
        }
    }

    #[test]
    fn hierarchy_full_subset_equals_equality() {
        let u = random_unitary(5, 21).unwrap();
        let v = random_unitary(5, 22).unwrap();
        let psi = random_pure_state(5, 23).unwrap();
        let basis = complete_complement(&psi, None).unwrap();
        for s in SignChoice::BOTH {
            let full = hierarchical_sum_bound(&u, &v, &psi, &basis, 4, s).unwrap();
            let rhs = sum_equality_rhs(&u, &v, &psi, &basis, s).unwrap();
            assert!((full.value - rhs.value).abs() < 1e-12);
            let fullp = hierarchical_product_bound(&u, &v, &psi, &basis, 4, s).unwrap();
            let rhsp = product_equality_rhs(&u, &v, &psi, &basis, s).unwrap();
            assert!((fullp.value - rhsp.value).abs() < 1e-12);
        }
    }

    #[test]
    fn hierarchy_qubit_n1_saturates() {
        let (sz, sx) = pauli_pair();
        for i in 1..40 {
            let theta = PI / 2.0 * i as f64 / 40.0;
            let psi = example_state(2, theta).unwrap();
            let basis = canonical_complement(2, theta).unwrap();
            let lhs_sum = general_variance(&sz, &psi).unwrap().value
                + general_variance(&sx, &psi).unwrap().value;
            for s in SignChoice::BOTH {
                let b = hierarchical_sum_bound(&sz, &sx, &psi, &basis, 1, s).unwrap();
                assert!((b.value - lhs_sum).abs() < 1e-12);
            }
            let du = general_variance(&sz, &psi).unwrap().value.sqrt();
            let dv = general_variance(&sx, &psi).unwrap().value.sqrt();
            if du * dv > tol::DEGENERATE_TOL {
                for s in SignChoice::BOTH {
                    let b = hierarchical_product_bound(&sz, &sx, &psi, &basis, 1, s).unwrap();
                    assert!((b.value - du * dv).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn hierarchy_matches_brute_force_d4() {
        for seed in 0..20 {
            let u = random_unitary(4, 300 + seed).unwrap();
            let v = random_unitary(4, 400 + seed).unwrap();
            let psi = random_pure_state(4, 500 + seed).unwrap();
            let basis = complete_complement(&psi, None).unwrap();
            let cov = covariance(&u, &v, &psi).unwrap().value;
            for s in SignChoice::BOTH {
                let terms = perpendicular_terms(&u, &v, &psi, &basis, s).unwrap();
                for n in 1..=3 {
                    let fast = hierarchical_sum_bound(&u, &v, &psi, &basis, n, s).unwrap();
                    let brute =
                        brute_force_max_subset(&terms, n) - s.factor() * 2.0 * cov.im;
                    assert!((fast.value - brute).abs() < 1e-12);
                    assert_eq!(fast.subset_used.as_ref().unwrap().len(), n);
                }
            }
        }
    }

    #[test]
    fn hierarchy_product_matches_brute_force_d5_dft() {
        let pair = dft_pair(5).unwrap();
        let theta = PI / 3.0;
        let psi = example_state(5, theta).unwrap();
        let basis = canonical_complement(5, theta).unwrap();
        let du = general_variance(pair.clock(), &psi).unwrap().value.sqrt();
        let dv = general_variance(pair.shift(), &psi).unwrap().value.sqrt();
        let cov = covariance(pair.clock(), pair.shift(), &psi).unwrap().value;
        for s in SignChoice::BOTH {
            let u_scaled = pair.clock().scale(C64::new(dv, 0.0));
            let v_scaled = pair.shift().scale(C64::new(du, 0.0));
            let terms = perpendicular_terms(&u_scaled, &v_scaled, &psi, &basis, s).unwrap();
            let brute = brute_force_max_subset(&terms, 2) / (2.0 * du * dv)
                - s.factor() * cov.im;
            let fast =
                hierarchical_product_bound(pair.clock(), pair.shift(), &psi, &basis, 2, s)
                    .unwrap();
            assert!((fast.value - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn hierarchy_rejects_out_of_range_n() {
        let u = random_unitary(3, 1).unwrap();
        let v = random_unitary(3, 2).unwrap();
        let psi = random_pure_state(3, 3).unwrap();
        let basis = complete_complement(&psi, None).unwrap();
        assert!(hierarchical_sum_bound(&u, &v, &psi, &basis, 0, SignChoice::Plus).is_err());
        assert!(hierarchical_sum_bound(&u, &v, &psi, &basis, 3, SignChoice::Plus).is_err());
    }

    #[test]
    fn best_sign_tie_prefers_plus() {
        // for a self-pair both sign variants evaluate bitwise identically,
        // so the tie-break picks Plus
        let u = random_unitary(3, 55).unwrap();
        let psi = random_pure_state(3, 56).unwrap();
        let basis = complete_complement(&psi, None).unwrap();
        let plus = hierarchical_sum_bound(&u, &u, &psi, &basis, 1, SignChoice::Plus).unwrap();
        let minus = hierarchical_sum_bound(&u, &u, &psi, &basis, 1, SignChoice::Minus).unwrap();
        assert_eq!(plus.value, minus.value);
        let b = best_sign(|s| hierarchical_sum_bound(&u, &u, &psi, &basis, 1, s)).unwrap();
        assert_eq!(b.sign_used, Some(SignChoice::Plus));
    }

    #[test]
    fn best_sign_picks_larger() {
        let u = random_unitary(3, 31).unwrap();
        let v = random_unitary(3, 32).unwrap();
        let psi = random_pure_state(3, 33).unwrap();
        let basis = complete_complement(&psi, None).unwrap();
        let plus = hierarchical_sum_bound(&u, &v, &psi, &basis, 1, SignChoice::Plus).unwrap();
        let minus = hierarchical_sum_bound(&u, &v, &psi, &basis, 1, SignChoice::Minus).unwrap();
        let best = best_sign(|s| hierarchical_sum_bound(&u, &v, &psi, &basis, 1, s)).unwrap();
        assert_eq!(best.value, plus.value.max(minus.value));
    }

    #[test]
    fn bpuur1_self_pair() {
        let u = random_unitary(4, 41).unwrap();
        let psi = random_pure_state(4, 42).unwrap();
        let b = bpuur1_bound(&u, &u, &psi).unwrap();
        let var = general_variance(&u, &psi).unwrap().value;
        assert!((b.value - 2.0 * var).abs() < 1e-12);
    }

    #[test]
    fn bpuur1_pauli_equals_one() {
        let (sz, sx) = pauli_pair();
        for i in 0..=40 {
            let theta = PI / 2.0 * i as f64 / 40.0;
            let psi = example_state(2, theta).unwrap();
            let b = bpuur1_bound(&sz, &sx, &psi).unwrap();
            assert!((b.value - 1.0).abs() < 1e-12, "theta={theta}");
        }
    }

    #[test]
    fn bpuur1_below_lhs_d3_dft() {
        let pair = dft_pair(3).unwrap();
        let psi = example_state(3, FRAC_PI_4).unwrap();
        let b = bpuur1_bound(pair.clock(), pair.shift(), &psi).unwrap();
        let lhs = general_variance(pair.clock(), &psi).unwrap().value
            + general_variance(pair.shift(), &psi).unwrap().value;
        assert!(b.value <= lhs + 1e-12);
    }

    #[test]
    fn bpuur2_equals_uurs1_in_d2() {
        let (sz, sx) = pauli_pair();
        let theta = 0.9;
        let psi = example_state(2, theta).unwrap();
        let basis = canonical_complement(2, theta).unwrap();
        for s in SignChoice::BOTH {
            let b2 = bpuur2_bound(&sz, &sx, &psi, &basis.vectors()[0], s).unwrap();
            let u1 = hierarchical_sum_bound(&sz, &sx, &psi, &basis, 1, s).unwrap();
            assert!((b2.value - u1.value).abs() < 1e-12);
        }
    }

    #[test]
    fn bpuur2_vanishing_overlap_leaves_cov_term() {
        // in d=3 pick the perp vector orthogonal to both psi and (U -/+ iV) psi
        let u = random_unitary(3, 61).unwrap();
        let v = random_unitary(3, 62).unwrap();
        let psi = random_pure_state(3, 63).unwrap();
        for s in SignChoice::BOTH {
            let uv = u.apply(psi.amplitudes()).unwrap();
            let vv = v.apply(psi.amplitudes()).unwrap();
            let i_unit = C64::new(0.0, s.factor());
            let f: Vec<C64> = uv.iter().zip(&vv).map(|(x, y)| x - i_unit * y).collect();
            let f_state = PureState::normalized(f).unwrap();
            let basis = complete_complement(&psi, Some(&[f_state.amplitudes().to_vec()]))
                .unwrap();
            // second complement vector is orthogonal to psi and to f
            let perp = basis.vectors()[1].clone();
            let b = bpuur2_bound(&u, &v, &psi, &perp, s).unwrap();
            let cov = covariance(&u, &v, &psi).unwrap().value;
            assert!((b.value - (-s.factor() * 2.0 * cov.im)).abs() < 1e-10);
        }
    }

    #[test]
    fn bpuur2_below_lhs_d3_dft() {
        let pair = dft_pair(3).unwrap();
        let theta = FRAC_PI_4;
        let psi = example_state(3, theta).unwrap();
        let basis = canonical_complement(3, theta).unwrap();
        let lhs = general_variance(pair.clock(), &psi).unwrap().value
            + general_variance(pair.shift(), &psi).unwrap().value;
        for s in SignChoice::BOTH {
            let b = bpuur2_bound(pair.clock(), pair.shift(), &psi, &basis.vectors()[0], s)
                .unwrap();
            assert!(b.value <= lhs + 1e-12);
        }
    }

    #[test]
    fn buur_self_pair_saturates() {
        let u = random_unitary(4, 71).unwrap();
        let psi = random_pure_state(4, 72).unwrap();
        let b = buur_bound(&u, &u, &psi).unwrap();
        let var = general_variance(&u, &psi).unwrap().value;
        assert!((b.value - var * var).abs() < 1e-12);
    }

    #[test]
    fn buur_pauli_coincides_with_product() {
        let (sz, sx) = pauli_pair();
        for i in 0..=40 {
            let theta = PI / 2.0 * i as f64 / 40.0;
            let psi = example_state(2, theta).unwrap();
            let b = buur_bound(&sz, &sx, &psi).unwrap();
            let prod = general_variance(&sz, &psi).unwrap().value
                * general_variance(&sx, &psi).unwrap().value;
            assert!((b.value - prod).abs() < 1e-12, "theta={theta}");
        }
    }

    #[test]
    fn buur_below_product_d4_dft() {
        let pair = dft_pair(4).unwrap();
        let psi = example_state(4, PI / 3.0).unwrap();
        let b = buur_bound(pair.clock(), pair.shift(), &psi).unwrap();
        let prod = general_variance(pair.clock(), &psi).unwrap().value
            * general_variance(pair.shift(), &psi).unwrap().value;
        assert!(b.value <= prod + 1e-12);
    }

    #[test]
    fn msuur_degenerate_qubit_limit() {
        let (sz, sx) = pauli_pair();
        let k = (PI / 2.0 - 1e-12).tan(); // K -> infinity for phi = pi
        for i in 0..=20 {
            let theta = PI / 2.0 * i as f64 / 20.0;
            let psi = example_state(2, theta).unwrap();
            let check = msuur_check(&sz, &sx, &psi, k).unwrap();
            assert!(check.holds);
            assert!(check.residual.abs() < 1e-10, "theta={theta}");
        }
    }

    #[test]
    fn msuur_residual_nonnegative_d3_d6() {
        for d in [3usize, 6] {
            let pair = dft_pair(d).unwrap();
            let k = (PI / d as f64).tan();
            for i in 0..=50 {
                let theta = PI / 2.0 * i as f64 / 50.0;
                let psi = example_state(d, theta).unwrap();
                let check = msuur_check(pair.clock(), pair.shift(), &psi, k).unwrap();
                assert!(check.holds, "d={d} theta={theta}: {}", check.residual);
            }
        }
    }

    #[test]
    fn msuur_rejects_mismatched_k() {
        let pair = dft_pair(3).unwrap();
        let psi = example_state(3, 0.4).unwrap();
        assert!(matches!(
            msuur_check(pair.clock(), pair.shift(), &psi, 1.0),
            Err(Error::CommutationMismatch { .. })
        ));
    }

    #[test]
    fn msuur_lower_bound_closed_form() {
        // grid-search oracle over the constraint region
        let grid_min = |k: f64| -> f64 {
            let steps = 10_000usize;
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                let x = i as f64 / steps as f64;
                // smallest feasible y for this x, from the constraint
                let denom = (1.0 + 2.0 * k) * x + k * k;
                let y = (k * k * (1.0 - x)) / denom;
                if y <= 1.0 {
                    best = best.min(x + y.max(0.0));
                }
            }
            best
        };
        for k in [(PI / 3.0).tan(), 1.0, (PI / 6.0).tan()] {
            let closed = msuur_sum_lower_bound(k).unwrap();
            let grid = grid_min(k);
            assert!((closed - grid).abs() < 1e-4, "K={k}: {closed} vs {grid}");
        }
        assert!((msuur_sum_lower_bound(1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let k3 = (PI / 3.0).tan();
        let want = 2.0 * 3.0f64.sqrt() / (1.0 + 2.0 * 3.0f64.sqrt());
        assert!((msuur_sum_lower_bound(k3).unwrap() - want).abs() < 1e-12);
        assert!((msuur_sum_lower_bound(1e6).unwrap() - 1.0).abs() < 1e-5);
        assert!(msuur_sum_lower_bound(0.0).is_err());
        assert!(msuur_sum_lower_bound(-1.0).is_err());
    }

    #[test]
    fn visibility_identities() {
        let id = Operator::identity(3).unwrap();
        let psi = random_pure_state(3, 81).unwrap();
        assert!((visibility(&id, &psi).unwrap() - 1.0).abs() < 1e-13);

        let (sz, sx) = pauli_pair();
        for i in 0..=20 {
            let theta = PI / 2.0 * i as f64 / 20.0;
            let psi = example_state(2, theta).unwrap();
            let vu = visibility(&sz, &psi).unwrap();
            let vv = visibility(&sx, &psi).unwrap();
            assert!((vu * vu + vv * vv - 1.0).abs() < 1e-12);
            let var = general_variance(&sz, &psi).unwrap().value;
            assert!((vu * vu - (1.0 - var)).abs() < tol::EQ_TOL);
        }
        let psi = example_state(2, FRAC_PI_4).unwrap();
        assert!(visibility(&sz, &psi).unwrap() < 1e-13);
    }

    #[test]
    fn full_report_pauli_quarter_pi() {
        let (sz, sx) = pauli_pair();
        let theta = FRAC_PI_4;
        let psi = example_state(2, theta).unwrap();
        let basis = canonical_complement(2, theta).unwrap();
        let report = full_report(&sz, &sx, &psi, &basis, &[1]).unwrap();
        assert!((report.lhs_sum - 1.0).abs() < 1e-12);
        for rhs in report.bounds_named(BoundName::UuesRhs) {
            assert!((rhs.value - 1.0).abs() < 1e-12);
        }
        assert!((report.bound(BoundName::Bpuur1).unwrap().value - 1.0).abs() < 1e-12);
        let buur = report.bound(BoundName::Buur).unwrap();
        assert!((buur.value - report.lhs_prod).abs() < 1e-12);
    }

    #[test]
    fn full_report_identity_pair_drops_product_entries() {
        let id = Operator::identity(3).unwrap();
        let psi = random_pure_state(3, 91).unwrap();
        let basis = complete_complement(&psi, None).unwrap();
        let report = full_report(&id, &id, &psi, &basis, &[1, 2]).unwrap();
        assert!(report.du2.value < 1e-13);
        assert!(report.dv2.value < 1e-13);
        assert!(report.bounds_named(BoundName::UuepRhs).is_empty());
        assert!(report.bound(BoundName::Uurp(1)).is_none());
        assert!(report.bound(BoundName::Uurp(2)).is_none());
    }

    #[test]
    fn full_report_d5_dft_self_consistent() {
        let pair = dft_pair(5).unwrap();
        let theta = 1.0;
        let psi = example_state(5, theta).unwrap();
        let basis = canonical_complement(5, theta).unwrap();
        let report = full_report(pair.clock(), pair.shift(), &psi, &basis, &[1, 2]).unwrap();
        for rhs in report.bounds_named(BoundName::UuesRhs) {
            assert!((rhs.value - report.lhs_sum).abs() < tol::EQ_TOL);
        }
        for rhs in report.bounds_named(BoundName::UuepRhs) {
            assert!((rhs.value * rhs.value - report.lhs_prod).abs() < 1e-9);
        }
        for b in &report.bounds {
            match b.name {
                BoundName::Uurs(_) | BoundName::Bpuur1 | BoundName::Bpuur2 => {
                    assert!(b.value <= report.lhs_sum + tol::EQ_TOL, "{}", b.name);
                }
                BoundName::Uurp(_) => {
                    assert!(
                        b.value <= report.lhs_prod.sqrt() + tol::EQ_TOL,
                        "{}",
                        b.name
                    );
                }
                BoundName::Buur => {
                    assert!(b.value <= report.lhs_prod + tol::EQ_TOL);
                }
                _ => {}
            }
        }
    }

    #[test]
    fn phase_invariance_of_all_values() {
        let u = random_unitary(4, 11).unwrap();
        let v = random_unitary(4, 12).unwrap();
        let psi = random_pure_state(4, 13).unwrap();
        let basis = complete_complement(&psi, None).unwrap();
        let shifted = PureState::new(
            psi.amplitudes()
                .iter()
                .map(|z| z * C64::from_polar(1.0, 0.83))
                .collect(),
        )
        .unwrap();
        let r1 = full_report(&u, &v, &psi, &basis, &[1, 2]).unwrap();
        let r2 = full_report(&u, &v, &shifted, &basis, &[1, 2]).unwrap();
        assert!((r1.lhs_sum - r2.lhs_sum).abs() < 1e-12);
        assert!((r1.lhs_prod - r2.lhs_prod).abs() < 1e-12);
        assert!((r1.cov.value.norm() - r2.cov.value.norm()) < 1e-12);
        for (b1, b2) in r1.bounds.iter().zip(&r2.bounds) {
            assert_eq!(b1.name, b2.name);
            assert!((b1.value - b2.value).abs() < 1e-11, "{}", b1.name);
        }
    }

    #[test]
    fn nonzero_term_count_dft_d5() {
        let pair = dft_pair(5).unwrap();
        let theta = 0.7;
        let psi = example_state(5, theta).unwrap();
        let basis = canonical_complement(5, theta).unwrap();
        let count =
            nonzero_term_count(pair.clock(), pair.shift(), &psi, &basis, SignChoice::Plus)
                .unwrap();
        assert!(count >= 1 && count <= 4);
    }
}

//! Minimal dense complex linear algebra: pure states, operators,
//! orthonormal complement completion, the principal logarithm of a unitary,
//! and seeded Haar-random sampling.
//!
//! Everything is sized for small dense problems (d up to a few hundred);
//! matrices are row-major `Vec<C64>` with no sparsity or blocking.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Error;
use crate::tol;
use crate::Result;

/// Complex scalar used for all amplitudes and matrix entries.
pub type C64 = num_complex::Complex64;

/// `sum_i conj(a_i) * b_i`, the physicists' inner product `<a|b>`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn all_finite(v: &[C64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// A normalized pure state `|psi>` in a d-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
}

impl PureState {
    /// Builds a state from amplitudes that must already be normalized
    /// within `NORM_TOL`.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidDimension(amps.len()));
        }
        if !all_finite(&amps) {
            return Err(Error::NonFinite);
        }
        let norm = vec_norm(&amps);
        if (norm - 1.0).abs() > tol::NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amps })
    }

    /// Builds a state from arbitrary nonzero amplitudes, normalizing them.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidDimension(amps.len()));
        }
        if !all_finite(&amps) {
            return Err(Error::NonFinite);
        }
        let norm = vec_norm(&amps);
        if norm <= tol::DEGENERATE_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            amps: amps.into_iter().map(|z| z / norm).collect(),
        })
    }

    /// Computational basis state `|k>`.
    pub fn basis_state(dim: usize, k: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if k >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {k} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![C64::ZERO; dim];
        amps[k] = C64::ONE;
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &PureState) -> C64 {
        inner(&self.amps, &other.amps)
    }
}

/// Validated structural tag on an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    General,
    Unitary,
    Hermitian,
}

/// A dense `d x d` complex operator, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    kind: OperatorKind,
    data: Vec<C64>,
}

impl Operator {
    /// An operator with no structural claim.
    pub fn general(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if !all_finite(&data) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            dim,
            kind: OperatorKind::General,
            data,
        })
    }

    /// Validates `U^dag U = I` within `UNITARY_TOL` and tags the operator.
    pub fn unitary(dim: usize, data: Vec<C64>) -> Result<Self> {
        let mut op = Self::general(dim, data)?;
        let deviation = op.unitarity_deviation();
        if deviation > tol::UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        op.kind = OperatorKind::Unitary;
        Ok(op)
    }

    /// Validates `A = A^dag` within `UNITARY_TOL` and tags the operator.
    pub fn hermitian(dim: usize, data: Vec<C64>) -> Result<Self> {
        let mut op = Self::general(dim, data)?;
        let deviation = op.hermiticity_deviation();
        if deviation > tol::UNITARY_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        op.kind = OperatorKind::Hermitian;
        Ok(op)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut data = vec![C64::ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::ONE;
        }
        let mut op = Self::general(dim, data)?;
        op.kind = OperatorKind::Unitary;
        Ok(op)
    }

    /// Diagonal operator from its diagonal entries; tagged by inspection
    /// (unit-modulus entries give a unitary, real entries a Hermitian).
    pub fn diagonal(entries: &[C64]) -> Result<Self> {
        let dim = entries.len();
        let mut data = vec![C64::ZERO; dim * dim];
        for (i, z) in entries.iter().enumerate() {
            data[i * dim + i] = *z;
        }
        let unit = entries
            .iter()
            .all(|z| (z.norm() - 1.0).abs() <= tol::UNITARY_TOL);
        let real = entries.iter().all(|z| z.im.abs() <= tol::UNITARY_TOL);
        if unit {
            Self::unitary(dim, data)
        } else if real {
            Self::hermitian(dim, data)
        } else {
            Self::general(dim, data)
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        let mut out = vec![C64::ZERO; self.dim];
        for i in 0..self.dim {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            out[i] = row.iter().zip(v).map(|(a, x)| a * x).sum();
        }
        Ok(out)
    }

    /// Conjugate transpose; unitarity and Hermiticity survive the adjoint.
    pub fn adjoint(&self) -> Operator {
        let d = self.dim;
        let mut data = vec![C64::ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                data[j * d + i] = self.get(i, j).conj();
            }
        }
        Operator {
            dim: d,
            kind: self.kind,
            data,
        }
    }

    /// Matrix product `self * rhs`; unitary only when both factors are.
    pub fn matmul(&self, rhs: &Operator) -> Result<Operator> {
        if rhs.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        let d = self.dim;
        let mut data = vec![C64::ZERO; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == C64::ZERO {
                    continue;
                }
                for j in 0..d {
                    data[i * d + j] += a * rhs.get(k, j);
                }
            }
        }
        let kind = if self.kind == OperatorKind::Unitary && rhs.kind == OperatorKind::Unitary {
            OperatorKind::Unitary
        } else {
            OperatorKind::General
        };
        Ok(Operator { dim: d, kind, data })
    }

    /// `self * z`, always tagged general.
    pub fn scale(&self, z: C64) -> Operator {
        Operator {
            dim: self.dim,
            kind: OperatorKind::General,
            data: self.data.iter().map(|a| a * z).collect(),
        }
    }

    /// `self + rhs`, tagged general.
    pub fn add(&self, rhs: &Operator) -> Result<Operator> {
        if rhs.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        Ok(Operator {
            dim: self.dim,
            kind: OperatorKind::General,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// `self - rhs`, tagged general.
    pub fn sub(&self, rhs: &Operator) -> Result<Operator> {
        if rhs.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        Ok(Operator {
            dim: self.dim,
            kind: OperatorKind::General,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Commutator `[self, rhs]`.
    pub fn commutator(&self, rhs: &Operator) -> Result<Operator> {
        self.matmul(rhs)?.sub(&rhs.matmul(self)?)
    }

    /// Max-entry deviation of `U^dag U` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                // (U^dag U)_{ij} = sum_k conj(U_{ki}) U_{kj}
                let mut s = C64::ZERO;
                for k in 0..d {
                    s += self.get(k, i).conj() * self.get(k, j);
                }
                let target = if i == j { C64::ONE } else { C64::ZERO };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }

    /// Max-entry deviation of `A - A^dag` from zero.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Max-entry modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Operator) -> f64 {
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `<psi| op |psi>`.
pub fn expectation(op: &Operator, psi: &PureState) -> Result<C64> {
    if op.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: op.dim(),
        });
    }
    let v = op.apply(psi.amplitudes())?;
    Ok(inner(psi.amplitudes(), &v))
}

/// An ordered orthonormal set of `d - 1` vectors spanning the orthogonal
/// complement of an anchor state.
#[derive(Debug, Clone)]
pub struct ComplementBasis {
    anchor: PureState,
    vectors: Vec<Vec<C64>>,
}

impl ComplementBasis {
    /// Validates unit norms, mutual orthogonality, orthogonality to the
    /// anchor, and completeness of the projector sum.
    pub fn new(anchor: PureState, vectors: Vec<Vec<C64>>) -> Result<Self> {
        let d = anchor.dim();
        if vectors.len() != d - 1 {
            return Err(Error::DimensionMismatch {
                expected: d - 1,
                found: vectors.len(),
            });
        }
        for v in &vectors {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
            if !all_finite(v) {
                return Err(Error::NonFinite);
            }
            let n = vec_norm(v);
            if (n - 1.0).abs() > tol::NORM_TOL {
                return Err(Error::NotNormalized { norm: n });
            }
            let overlap = inner(anchor.amplitudes(), v).norm();
            if overlap > tol::ORTH_TOL {
                return Err(Error::NotOrthonormal { residual: overlap });
            }
        }
        for i in 0..vectors.len() {
            for j in (i + 1)..vectors.len() {
                let overlap = inner(&vectors[i], &vectors[j]).norm();
                if overlap > tol::ORTH_TOL {
                    return Err(Error::NotOrthonormal { residual: overlap });
                }
            }
        }
        let basis = Self { anchor, vectors };
        let residual = basis.completeness_residual();
        if residual > tol::ORTH_TOL {
            return Err(Error::NotOrthonormal { residual });
        }
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    pub fn anchor(&self) -> &PureState {
        &self.anchor
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    /// Max-entry deviation of `sum_k |b_k><b_k|` from `I - |psi><psi|`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim();
        let psi = self.anchor.amplitudes();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut s = C64::ZERO;
                for v in &self.vectors {
                    s += v[i] * v[j].conj();
                }
                let target = if i == j { C64::ONE } else { C64::ZERO };
                let expected = target - psi[i] * psi[j].conj();
                worst = worst.max((s - expected).norm());
            }
        }
        worst
    }
}

/// Removes the components of `v` along `psi` and all of `accepted`,
/// re-orthogonalizing once. Returns the projected norm.
fn project_out(v: &mut [C64], psi: &[C64], accepted: &[Vec<C64>]) -> f64 {
    for _ in 0..2 {
        let c = inner(psi, v);
        for (x, p) in v.iter_mut().zip(psi) {
            *x -= c * p;
        }
        for w in accepted {
            let c = inner(w, v);
            for (x, p) in v.iter_mut().zip(w) {
                *x -= c * p;
            }
        }
    }
    vec_norm(v)
}

/// Completes `psi` to a full orthonormal basis and returns the `d - 1`
/// complement vectors.
///
/// With `seed_vectors`, the output is the modified Gram-Schmidt completion
/// seeded by them in order; a seed whose projected norm falls below
/// `ORTH_TOL` is skipped in favor of the next canonical axis. Without
/// seeds, the canonical computational axes are used, dropping the axis
/// where `psi` has its largest amplitude (lowest index wins ties); that
/// axis is kept as a last-resort candidate.
pub fn complete_complement(
    psi: &PureState,
    seed_vectors: Option<&[Vec<C64>]>,
) -> Result<ComplementBasis> {
    let d = psi.dim();
    let mut drop_axis = 0usize;
    let mut best = -1.0f64;
    for (k, a) in psi.amplitudes().iter().enumerate() {
        let m = a.norm();
        if m > best {
            best = m;
            drop_axis = k;
        }
    }

    let mut candidates: Vec<Vec<C64>> = Vec::new();
    if let Some(seeds) = seed_vectors {
        for s in seeds {
            if s.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.len(),
                });
            }
            if !all_finite(s) {
                return Err(Error::NonFinite);
            }
            candidates.push(s.clone());
        }
    }
    let axis = |k: usize| -> Vec<C64> {
        let mut v = vec![C64::ZERO; d];
        v[k] = C64::ONE;
        v
    };
    for k in 0..d {
        if k != drop_axis {
            candidates.push(axis(k));
        }
    }
    candidates.push(axis(drop_axis));

    let mut accepted: Vec<Vec<C64>> = Vec::with_capacity(d - 1);
    for mut cand in candidates {
        if accepted.len() == d - 1 {
            break;
        }
        let norm = project_out(&mut cand, psi.amplitudes(), &accepted);
        if norm < tol::ORTH_TOL {
            continue; // degenerate candidate, fall through to the next axis
        }
        for x in cand.iter_mut() {
            *x /= norm;
        }
        accepted.push(cand);
    }
    if accepted.len() != d - 1 {
        return Err(Error::NotOrthonormal { residual: f64::NAN });
    }
    ComplementBasis::new(psi.clone(), accepted)
}

/// Principal-branch Hermitian generator `h` of a unitary:
/// `exp(i * scale * h)` reproduces `u_op`, with eigenphases in `(-pi, pi]`.
///
/// An eigenphase within `BRANCH_TOL` of the cut at `pi` is reported as a
/// `BranchCut` error instead of being silently resolved to either side.
pub fn principal_log_generator(u_op: &Operator, scale: f64) -> Result<Operator> {
    if u_op.kind() != OperatorKind::Unitary {
        return Err(Error::NotUnitary {
            deviation: u_op.unitarity_deviation(),
        });
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let d = u_op.dim();
    let m = DMatrix::from_fn(d, d, |i, j| u_op.get(i, j));
    let schur = m.schur();
    let (q, t) = schur.unpack();

    let mut phases = Vec::with_capacity(d);
    for k in 0..d {
        let lambda: C64 = t[(k, k)];
        let theta = lambda.arg();
        if std::f64::consts::PI - theta.abs() < tol::BRANCH_TOL {
            return Err(Error::BranchCut { phase: theta });
        }
        phases.push(theta);
    }

    // h = Q diag(theta / scale) Q^dag; a unitary is normal, so the Schur
    // form is diagonal and Q holds the eigenvectors.
    let d2 = d * d;
    let mut data = vec![C64::ZERO; d2];
    for i in 0..d {
        for j in 0..d {
            let mut s = C64::ZERO;
            for k in 0..d {
                s += q[(i, k)] * (phases[k] / scale) * q[(j, k)].conj();
            }
            data[i * d + j] = s;
        }
    }
    // symmetrize away the Schur roundoff
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = (data[i * d + j] + data[j * d + i].conj()) * 0.5;
            data[i * d + j] = avg;
            data[j * d + i] = avg.conj();
        }
        data[i * d + i] = C64::new(data[i * d + i].re, 0.0);
    }
    let h = Operator::hermitian(d, data)?;

    // round-trip check doubles as a guard against a non-diagonal Schur form
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let mut s = C64::ZERO;
            for k in 0..d {
                s += q[(i, k)] * C64::from_polar(1.0, phases[k]) * q[(j, k)].conj();
            }
            worst = worst.max((s - u_op.get(i, j)).norm());
        }
    }
    if worst > tol::LOG_TOL {
        return Err(Error::LogRoundTrip { residual: worst });
    }
    Ok(h)
}

/// `exp(i * scale * h)` for a Hermitian generator, via the same
/// eigendecomposition route as the logarithm.
pub fn exp_i_generator(h: &Operator, scale: f64) -> Result<Operator> {
    if h.kind() != OperatorKind::Hermitian {
        return Err(Error::NotHermitian {
            deviation: h.hermiticity_deviation(),
        });
    }
    let d = h.dim();
    let m = DMatrix::from_fn(d, d, |i, j| h.get(i, j));
    let eig = m.symmetric_eigen();
    let mut data = vec![C64::ZERO; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut s = C64::ZERO;
            for k in 0..d {
                let phase = C64::from_polar(1.0, scale * eig.eigenvalues[k]);
                s += eig.eigenvectors[(i, k)] * phase * eig.eigenvectors[(j, k)].conj();
            }
            data[i * d + j] = s;
        }
    }
    Operator::unitary(d, data)
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Haar-uniform pure state: a normalized complex Gaussian vector.
/// Deterministic for a fixed seed.
pub fn random_pure_state(dim: usize, seed: u64) -> Result<PureState> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let amps: Vec<C64> = (0..dim).map(|_| complex_gaussian(&mut rng)).collect();
        if vec_norm(&amps) > 1e-6 {
            return PureState::normalized(amps);
        }
    }
}

/// Haar-uniform unitary: Gram-Schmidt orthonormalization of a complex
/// Gaussian matrix. The column norms play the role of a positive-diagonal
/// R factor, which makes the Q factor Haar-distributed.
pub fn random_unitary(dim: usize, seed: u64) -> Result<Operator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut cols: Vec<Vec<C64>> = (0..dim)
            .map(|_| (0..dim).map(|_| complex_gaussian(&mut rng)).collect())
            .collect();
        let mut ok = true;
        for j in 0..dim {
            let (done, rest) = cols.split_at_mut(j);
            let col = &mut rest[0];
            for _ in 0..2 {
                for w in done.iter() {
                    let c = inner(w, col);
                    for (x, p) in col.iter_mut().zip(w) {
                        *x -= c * p;
                    }
                }
            }
            let n = vec_norm(col);
            if n < 1e-8 {
                ok = false; // essentially impossible; resample
                break;
            }
            for x in col.iter_mut() {
                *x /= n;
            }
        }
        if !ok {
            continue;
        }
        let mut data = vec![C64::ZERO; dim * dim];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..dim {
                data[i * dim + j] = col[i];
            }
        }
        return Operator::unitary(dim, data);
    }
}

/// Random Hermitian operator with Gaussian entries: `(A + A^dag) / 2` for
/// a complex Gaussian `A`. Deterministic for a fixed seed.
pub fn random_hermitian(dim: usize, seed: u64) -> Result<Operator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![C64::ZERO; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let z = complex_gaussian(&mut rng);
            if i == j {
                data[i * dim + i] = C64::new(z.re, 0.0);
            } else {
                let half = z * 0.5;
                data[i * dim + j] = half;
                data[j * dim + i] = half.conj();
            }
        }
    }
    Operator::hermitian(dim, data)
}

/// Random general (non-normal) operator with complex Gaussian entries,
/// scaled by `1/sqrt(dim)` so the operator norm stays O(1).
/// Deterministic for a fixed seed.
pub fn random_general(dim: usize, seed: u64) -> Result<Operator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (dim as f64).sqrt();
    let data: Vec<C64> = (0..dim * dim)
        .map(|_| complex_gaussian(&mut rng) * scale)
        .collect();
    Operator::general(dim, data)
}

/// Haar-random complement basis for `psi`: the complement of a random
/// unitary's image, completed against random seed vectors.
pub fn random_complement(psi: &PureState, seed: u64) -> Result<ComplementBasis> {
    let d = psi.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<Vec<C64>> = (0..d - 1)
        .map(|_| (0..d).map(|_| complex_gaussian(&mut rng)).collect())
        .collect();
    complete_complement(psi, Some(&seeds))
}

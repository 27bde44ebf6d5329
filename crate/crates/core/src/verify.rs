//! Randomized certification suite behind the `verify` command: every
//! equality, bound, and hierarchy property evaluated over seeded random
//! instances, reporting per-property pass counts and worst residuals.
//! All randomness derives from the configured seed, so two runs with the
//! same configuration produce identical summaries.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::Error;
use crate::limit::{
    convergence_study, hermitian_product_equality, hermitian_sum_equality,
};
use crate::linalg::{
    self, complete_complement, random_complement, random_general, random_hermitian,
    random_pure_state, random_unitary, ComplementBasis, Operator, PureState, C64,
};
use crate::operators::{dft_pair, example_state};
use crate::tol;
use crate::uncertainty::{
    covariance, full_report, general_variance, hierarchical_product_bound,
    hierarchical_sum_bound, msuur_check, msuur_sum_lower_bound, product_equality_rhs,
    sum_equality_rhs, BoundName, SignChoice,
};
use crate::Result;

/// Parameters of one verification run.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Equality tolerance; overridable from the command line.
    pub eq_tol: f64,
}

impl VerifyConfig {
    pub fn new(dims: Vec<usize>, trials: usize, seed: u64) -> Self {
        VerifyConfig {
            dims,
            trials,
            seed,
            eq_tol: tol::EQ_TOL,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.dims.is_empty() {
            return Err(Error::InvalidArgument("need at least one dimension".into()));
        }
        for &d in &self.dims {
            if d < 2 {
                return Err(Error::InvalidDimension(d));
            }
        }
        if !(self.eq_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.eq_tol
            )));
        }
        Ok(())
    }
}

/// Aggregate result of one property over all instances.
#[derive(Debug, Clone)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub attempted: usize,
    pub skipped: usize,
    pub failures: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// All property outcomes of a run, in a fixed order.
#[derive(Debug, Clone)]
pub struct VerifySummary {
    pub outcomes: Vec<PropertyOutcome>,
}

impl VerifySummary {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(PropertyOutcome::passed)
    }

    /// Largest residual among the equality-certification properties.
    pub fn worst_equality_residual(&self) -> f64 {
        self.outcomes
            .iter()
            .filter(|o| o.name.starts_with("equality"))
            .map(|o| o.worst_residual)
            .fold(0.0, f64::max)
    }

    /// Deterministic human-readable report, one line per property.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            let _ = writeln!(
                out,
                "{} {:<34} checks={:<6} skipped={:<4} failures={:<4} worst residual={:.3e} (tol {:.1e})",
                if o.passed() { "PASS" } else { "FAIL" },
                o.name,
                o.attempted,
                o.skipped,
                o.failures,
                o.worst_residual,
                o.tolerance,
            );
        }
        let worst = self.worst_equality_residual();
        let _ = writeln!(
            out,
            "{}: {} properties, worst equality residual {:.3e}",
            if self.all_passed() { "OK" } else { "FAILED" },
            self.outcomes.len(),
            worst,
        );
        out
    }
}

/// splitmix64 step, used to derive decorrelated per-instance seeds.
fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn instance_seed(seed: u64, salt: u64, dim: usize, trial: usize) -> u64 {
    splitmix(splitmix(splitmix(seed ^ salt) ^ dim as u64) ^ trial as u64)
}

/// A generic random verification instance: two unitaries, a Haar state,
/// and a random complement basis.
struct Instance {
    u: Operator,
    v: Operator,
    psi: PureState,
    basis: ComplementBasis,
}

fn unitary_instance(dim: usize, seed: u64) -> Result<Instance> {
    let psi = random_pure_state(dim, splitmix(seed ^ 3))?;
    let basis = random_complement(&psi, splitmix(seed ^ 4))?;
    Ok(Instance {
        u: random_unitary(dim, splitmix(seed ^ 1))?,
        v: random_unitary(dim, splitmix(seed ^ 2))?,
        psi,
        basis,
    })
}

/// Outcome of a single check: the residual, or `None` when the instance is
/// out of the property's hypothesis (degenerate variance and the like).
type CheckResult = Result<Option<f64>>;

/// Evaluates `check` on every `(dim, trial)` cell in parallel and
/// aggregates failures and the worst residual. An error from the check
/// counts as a failure with infinite residual.
fn run_property<F>(
    name: &'static str,
    tolerance: f64,
    cfg: &VerifyConfig,
    salt: u64,
    check: F,
) -> PropertyOutcome
where
    F: Fn(usize, u64) -> CheckResult + Sync,
{
    let cells: Vec<(usize, usize)> = cfg
        .dims
        .iter()
        .flat_map(|&d| (0..cfg.trials).map(move |t| (d, t)))
        .collect();
    let (skipped, failures, worst) = cells
        .par_iter()
        .map(|&(d, t)| match check(d, instance_seed(cfg.seed, salt, d, t)) {
            Ok(None) => (1usize, 0usize, 0.0f64),
            Ok(Some(r)) => (0, usize::from(!(r <= tolerance)), r),
            Err(_) => (0, 1, f64::INFINITY),
        })
        .reduce(
            || (0, 0, 0.0),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2.max(b.2)),
        );
    PropertyOutcome {
        name,
        attempted: cells.len(),
        skipped,
        failures,
        worst_residual: worst,
        tolerance,
    }
}

/// Wraps a single deterministic check as a one-shot outcome.
fn one_shot(name: &'static str, tolerance: f64, check: impl FnOnce() -> CheckResult) -> PropertyOutcome {
    let (skipped, failures, worst) = match check() {
        Ok(None) => (1, 0, 0.0),
        Ok(Some(r)) => (0, usize::from(!(r <= tolerance)), r),
        Err(_) => (0, 1, f64::INFINITY),
    };
    PropertyOutcome {
        name,
        attempted: 1,
        skipped,
        failures,
        worst_residual: worst,
        tolerance,
    }
}

fn max_residual(a: f64, b: f64) -> f64 {
    a.max(b)
}

/// Sum equality on a pair of operators: worst `|rhs - lhs|` over both signs.
fn sum_equality_residual(
    a: &Operator,
    b: &Operator,
    psi: &PureState,
    basis: &ComplementBasis,
) -> Result<f64> {
    let lhs = general_variance(a, psi)?.value + general_variance(b, psi)?.value;
    let mut worst = 0.0;
    for s in SignChoice::BOTH {
        let rhs = sum_equality_rhs(a, b, psi, basis, s)?.value;
        worst = max_residual(worst, (rhs - lhs).abs());
    }
    Ok(worst)
}

/// Product equality: worst `|rhs - dA dB|` over both signs, `None` when the
/// variance product degenerates.
fn product_equality_residual(
    a: &Operator,
    b: &Operator,
    psi: &PureState,
    basis: &ComplementBasis,
) -> Result<Option<f64>> {
    let lhs = (general_variance(a, psi)?.value * general_variance(b, psi)?.value).sqrt();
    let mut worst = 0.0;
    for s in SignChoice::BOTH {
        match product_equality_rhs(a, b, psi, basis, s) {
            Ok(rhs) => worst = max_residual(worst, (rhs.value - lhs).abs()),
            Err(Error::DegenerateVariance { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(worst))
}

/// Brute-force oracle for the size-`n` subset maximum of the sum-form
/// perpendicular terms, recomputed from public primitives.
fn brute_force_sum_subset(
    u: &Operator,
    v: &Operator,
    psi: &PureState,
    basis: &ComplementBasis,
    n: usize,
    s: SignChoice,
) -> Result<f64> {
    let uv = u.apply(psi.amplitudes())?;
    let vv = v.apply(psi.amplitudes())?;
    let i_unit = C64::new(0.0, s.factor());
    let f: Vec<C64> = uv.iter().zip(&vv).map(|(x, y)| x - i_unit * y).collect();
    let terms: Vec<f64> = basis
        .vectors()
        .iter()
        .map(|w| linalg::inner(w, &f).norm_sqr())
        .collect();
    let m = terms.len();
    let mut best = f64::NEG_INFINITY;
    // enumerate all size-n index subsets via bitmask; m <= 5 here
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let sum: f64 = (0..m).filter(|k| mask & (1 << k) != 0).map(|k| terms[k]).sum();
        best = best.max(sum);
    }
    let cov = covariance(u, v, psi)?.value;
    Ok(best - s.factor() * 2.0 * cov.im)
}

/// Runs the full certification suite.
pub fn run_verification(cfg: &VerifyConfig) -> Result<VerifySummary> {
    cfg.validate()?;
    let tol_eq = cfg.eq_tol;
    let mut outcomes = Vec::new();

    outcomes.push(run_property("equality-sum-unitary", tol_eq, cfg, 0x01, |d, seed| {
        let inst = unitary_instance(d, seed)?;
        sum_equality_residual(&inst.u, &inst.v, &inst.psi, &inst.basis).map(Some)
    }));

    outcomes.push(run_property("equality-product-unitary", tol_eq, cfg, 0x02, |d, seed| {
        let inst = unitary_instance(d, seed)?;
        product_equality_residual(&inst.u, &inst.v, &inst.psi, &inst.basis)
    }));

    outcomes.push(run_property("equality-sum-general", tol_eq, cfg, 0x03, |d, seed| {
        let a = random_general(d, splitmix(seed ^ 1))?;
        let b = random_general(d, splitmix(seed ^ 2))?;
        let psi = random_pure_state(d, splitmix(seed ^ 3))?;
        let basis = random_complement(&psi, splitmix(seed ^ 4))?;
        sum_equality_residual(&a, &b, &psi, &basis).map(Some)
    }));

    outcomes.push(run_property("equality-product-general", tol_eq, cfg, 0x04, |d, seed| {
        let a = random_general(d, splitmix(seed ^ 1))?;
        let b = random_general(d, splitmix(seed ^ 2))?;
        let psi = random_pure_state(d, splitmix(seed ^ 3))?;
        let basis = random_complement(&psi, splitmix(seed ^ 4))?;
        product_equality_residual(&a, &b, &psi, &basis)
    }));

    outcomes.push(run_property("equality-sum-hermitian", tol_eq, cfg, 0x05, |d, seed| {
        let u = random_hermitian(d, splitmix(seed ^ 1))?;
        let v = random_hermitian(d, splitmix(seed ^ 2))?;
        let psi = random_pure_state(d, splitmix(seed ^ 3))?;
        let basis = random_complement(&psi, splitmix(seed ^ 4))?;
        let lhs = general_variance(&u, &psi)?.value + general_variance(&v, &psi)?.value;
        let mut worst = 0.0;
        for s in SignChoice::BOTH {
            let rhs = hermitian_sum_equality(&u, &v, &psi, &basis, s)?;
            worst = max_residual(worst, (rhs - lhs).abs());
        }
        Ok(Some(worst))
    }));

    // The quotient form divides by 1 - (1/2) sum of scaled terms, which
    // amplifies roundoff, hence the looser tolerance.
    outcomes.push(run_property("equality-product-hermitian", 1e-8, cfg, 0x06, |d, seed| {
        let u = random_hermitian(d, splitmix(seed ^ 1))?;
        let v = random_hermitian(d, splitmix(seed ^ 2))?;
        let psi = random_pure_state(d, splitmix(seed ^ 3))?;
        let basis = random_complement(&psi, splitmix(seed ^ 4))?;
        let lhs = (general_variance(&u, &psi)?.value * general_variance(&v, &psi)?.value).sqrt();
        let mut worst = 0.0;
        for s in SignChoice::BOTH {
            match hermitian_product_equality(&u, &v, &psi, &basis, s) {
                Ok(rhs) => worst = max_residual(worst, (rhs - lhs).abs()),
                Err(Error::DegenerateVariance { .. })
                | Err(Error::VanishingDenominator { .. }) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        Ok(Some(worst))
    }));

    outcomes.push(run_property("hierarchy-sum-monotone", tol_eq, cfg, 0x07, |d, seed| {
        let inst = unitary_instance(d, seed)?;
        let lhs =
            general_variance(&inst.u, &inst.psi)?.value + general_variance(&inst.v, &inst.psi)?.value;
        let mut worst = 0.0f64;
        for s in SignChoice::BOTH {
            let mut prev = f64::NEG_INFINITY;
            for n in 1..d {
                let b = hierarchical_sum_bound(&inst.u, &inst.v, &inst.psi, &inst.basis, n, s)?;
                worst = max_residual(worst, prev - b.value);
                prev = b.value;
            }
            // the full-size subset restores the equality
            worst = max_residual(worst, (prev - lhs).abs());
        }
        Ok(Some(worst))
    }));

    outcomes.push(run_property("hierarchy-product-monotone", tol_eq, cfg, 0x08, |d, seed| {
        let inst = unitary_instance(d, seed)?;
        let lhs = (general_variance(&inst.u, &inst.psi)?.value
            * general_variance(&inst.v, &inst.psi)?.value)
            .sqrt();
        let mut worst = 0.0f64;
        for s in SignChoice::BOTH {
            let mut prev = f64::NEG_INFINITY;
            for n in 1..d {
                match hierarchical_product_bound(&inst.u, &inst.v, &inst.psi, &inst.basis, n, s) {
                    Ok(b) => {
                        worst = max_residual(worst, prev - b.value);
                        prev = b.value;
                    }
                    Err(Error::DegenerateVariance { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                }
            }
            worst = max_residual(worst, (prev - lhs).abs());
        }
        Ok(Some(worst))
    }));

    // The sorted-prefix maximizer must agree with exhaustive subset
    // enumeration bit for bit (identical terms, identical summation order).
    outcomes.push(run_property("subset-maximizer-bruteforce", 0.0, cfg, 0x09, |d, seed| {
        if d > 6 {
            return Ok(None); // enumeration oracle kept to small dimensions
        }
        let inst = unitary_instance(d, seed)?;
        let mut worst = 0.0f64;
        for s in SignChoice::BOTH {
            for n in 1..d {
                let fast =
                    hierarchical_sum_bound(&inst.u, &inst.v, &inst.psi, &inst.basis, n, s)?.value;
                let slow = brute_force_sum_subset(&inst.u, &inst.v, &inst.psi, &inst.basis, n, s)?;
                worst = max_residual(worst, (fast - slow).abs());
            }
        }
        Ok(Some(worst))
    }));

    outcomes.push(run_property("bound-validity", tol_eq, cfg, 0x0a, |d, seed| {
        let inst = unitary_instance(d, seed)?;
        let ns: Vec<usize> = (1..d).collect();
        let report = full_report(&inst.u, &inst.v, &inst.psi, &inst.basis, &ns)?;
        let lhs_prod_root = report.lhs_prod.sqrt();
        let mut worst = 0.0f64;
        for b in &report.bounds {
            let excess = match b.name {
                BoundName::Bpuur1 | BoundName::Bpuur2 | BoundName::Uurs(_) => {
                    b.value - report.lhs_sum
                }
                BoundName::Buur => b.value - report.lhs_prod,
                BoundName::Uurp(_) => b.value - lhs_prod_root,
                // equality right-hand sides are certified elsewhere
                BoundName::MsuurSum | BoundName::UuesRhs | BoundName::UuepRhs => 0.0,
            };
            worst = max_residual(worst, excess);
        }
        Ok(Some(worst))
    }));

    // The full-sum right-hand sides are basis-free even though the
    // individual perpendicular terms are not.
    outcomes.push(run_property("basis-independence", 1e-10, cfg, 0x0b, |d, seed| {
        let inst = unitary_instance(d, seed)?;
        let other = complete_complement(&inst.psi, None)?;
        let mut worst = 0.0f64;
        for s in SignChoice::BOTH {
            let a = sum_equality_rhs(&inst.u, &inst.v, &inst.psi, &inst.basis, s)?.value;
            let b = sum_equality_rhs(&inst.u, &inst.v, &inst.psi, &other, s)?.value;
            worst = max_residual(worst, (a - b).abs());
            let pa = product_equality_rhs(&inst.u, &inst.v, &inst.psi, &inst.basis, s);
            let pb = product_equality_rhs(&inst.u, &inst.v, &inst.psi, &other, s);
            if let (Ok(pa), Ok(pb)) = (pa, pb) {
                worst = max_residual(worst, (pa.value - pb.value).abs());
            }
        }
        Ok(Some(worst))
    }));

    outcomes.push(run_property("phase-invariance", 1e-10, cfg, 0x0c, |d, seed| {
        let inst = unitary_instance(d, seed)?;
        let alpha = (splitmix(seed ^ 5) % 1_000_000) as f64 / 1_000_000.0 * std::f64::consts::TAU;
        let phase = C64::from_polar(1.0, alpha);
        let rotated = PureState::new(
            inst.psi.amplitudes().iter().map(|a| a * phase).collect(),
        )?;
        let mut worst = 0.0f64;
        for s in SignChoice::BOTH {
            let a = sum_equality_rhs(&inst.u, &inst.v, &inst.psi, &inst.basis, s)?.value;
            let b = sum_equality_rhs(&inst.u, &inst.v, &rotated, &inst.basis, s)?.value;
            worst = max_residual(worst, (a - b).abs());
            let ha = hierarchical_sum_bound(&inst.u, &inst.v, &inst.psi, &inst.basis, 1, s)?.value;
            let hb = hierarchical_sum_bound(&inst.u, &inst.v, &rotated, &inst.basis, 1, s)?.value;
            worst = max_residual(worst, (ha - hb).abs());
        }
        Ok(Some(worst))
    }));

    outcomes.push(run_property("covariance-structure", tol_eq, cfg, 0x0d, |d, seed| {
        let a = random_general(d, splitmix(seed ^ 1))?;
        let b = random_general(d, splitmix(seed ^ 2))?;
        let psi = random_pure_state(d, splitmix(seed ^ 3))?;
        let cab = covariance(&a, &b, &psi)?.value;
        let cba = covariance(&b, &a, &psi)?.value;
        let caa = covariance(&a, &a, &psi)?.value;
        let var_a = general_variance(&a, &psi)?.value;
        let mut worst = (cab - cba.conj()).norm();
        worst = max_residual(worst, caa.im.abs());
        worst = max_residual(worst, (caa.re - var_a).abs());
        Ok(Some(worst))
    }));

    outcomes.push(run_property("msuur-dft-family", 1e-10, cfg, 0x0e, |d, seed| {
        let theta =
            (splitmix(seed ^ 6) % 1_000_001) as f64 / 1_000_000.0 * std::f64::consts::FRAC_PI_2;
        let pair = dft_pair(d)?;
        let psi = example_state(d, theta)?;
        let k = (std::f64::consts::PI / d as f64).tan();
        let check = msuur_check(pair.clock(), pair.shift(), &psi, k)?;
        // only undershoot counts against the relation
        Ok(Some((-check.residual).max(0.0)))
    }));

    outcomes.push(one_shot("msuur-floor-closed-form", 1e-8, || {
        let mut worst = 0.0f64;
        for k in [0.25, 0.5, 1.0, 2.0, 5.0] {
            let closed = msuur_sum_lower_bound(k)?;
            // grid-search oracle along the boundary curve of the region
            // (1 + 2K) x y + K^2 (x + y) = K^2 with x, y in [0, 1]
            let steps = 200_000;
            let mut min_sum = f64::INFINITY;
            for i in 0..=steps {
                let x = i as f64 / steps as f64;
                let denom = (1.0 + 2.0 * k) * x + k * k;
                let y = (k * k * (1.0 - x) / denom).clamp(0.0, 1.0);
                min_sum = min_sum.min(x + y);
            }
            worst = worst.max((closed - min_sum).abs());
        }
        Ok(Some(worst))
    }));

    // the large-K limit recovers the d = 2 floor of 1
    outcomes.push(one_shot("msuur-floor-large-k", 1e-5, || {
        Ok(Some((msuur_sum_lower_bound(1e6)? - 1.0).abs()))
    }));

    outcomes.push(one_shot("limit-convergence-decay", 0.0, || {
        let dims: Vec<usize> = (0..10).map(|i| 9 + 10 * i).collect();
        let study = convergence_study(&dims)?;
        let mut worst = 0.0f64;
        for pair in study.records.chunks(4).collect::<Vec<_>>().windows(2) {
            for (a, b) in pair[0].iter().zip(pair[1]) {
                worst = worst.max(b.relative_error - a.relative_error);
            }
        }
        Ok(Some(worst))
    }));

    Ok(VerifySummary { outcomes })
}

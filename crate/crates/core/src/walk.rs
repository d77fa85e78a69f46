//! The projective direction chain and its additive log-norm walk: cocycle
//! increments, passage time below zero, Lyapunov exponent, empirical
//! invariant measure, and the model condition checklist.
//!
//! A nonnegative matrix `M` acts on a direction `x` of the L1 simplex by
//! `x . M = xM / |xM|`; the walk adds the cocycle increment `ln |xM|` at
//! each step. Positions are always advanced incrementally so that running
//! products of matrices are never materialized.

use std::collections::HashSet;
use std::fmt;

use crate::env::EnvironmentModel;
use crate::linalg::{l1, Matrix};
use crate::scalar::{count, real, Scalar};
use crate::stats::mean_se;
use crate::stream::{par_map_replicas, StreamRng};
use crate::{Error, Result};

/// A direction on the nonnegative part of the L1 unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectivePoint<T> {
    coords: Vec<T>,
}

impl<T: Scalar> ProjectivePoint<T> {
    /// Wraps coordinates that are already normalized (L1 norm 1 within
    /// 1e-12); the stored point is renormalized exactly.
    pub fn new(coords: Vec<T>) -> Result<Self> {
        let point = Self::from_unnormalized(&coords)?;
        let norm = l1(&coords);
        if (norm - T::one()).abs() > real(1e-12) {
            return Err(Error::Domain(format!(
                "direction must have L1 norm 1, got {norm}"
            )));
        }
        Ok(point)
    }

    /// Normalizes an arbitrary nonzero nonnegative vector.
    pub fn from_unnormalized(x: &[T]) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Domain("direction must be nonempty".into()));
        }
        if x.iter().any(|&v| v < T::zero()) {
            return Err(Error::Domain(
                "direction coordinates must be nonnegative".into(),
            ));
        }
        let norm = l1(x);
        if norm <= T::zero() {
            return Err(Error::Domain("direction must be nonzero".into()));
        }
        Ok(Self {
            coords: x.iter().map(|&v| v / norm).collect(),
        })
    }

    /// The barycenter `(1/p, ..., 1/p)`.
    pub fn uniform(p: usize) -> Self {
        Self {
            coords: vec![T::one() / count(p); p],
        }
    }

    /// The vertex `e_i` (0-based `i`).
    pub fn unit(p: usize, i: usize) -> Result<Self> {
        if i >= p {
            return Err(Error::Domain(format!(
                "vertex index {i} out of range for dimension {p}"
            )));
        }
        let mut coords = vec![T::zero(); p];
        coords[i] = T::one();
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Largest coordinate-wise distance to another point.
    pub fn max_distance(&self, other: &Self) -> T {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }
}

/// Advances a normalized direction in place by one matrix and returns the
/// cocycle increment `ln |xM|`. `scratch` must have the same length.
pub(crate) fn advance_direction<T: Scalar>(
    direction: &mut Vec<T>,
    scratch: &mut Vec<T>,
    m: &Matrix<T>,
) -> Result<T> {
    m.left_mul_into(direction, scratch);
    let norm = l1(scratch);
    if norm <= T::zero() {
        return Err(Error::Degenerate(
            "direction annihilated by a matrix with a zero column pattern".into(),
        ));
    }
    for v in scratch.iter_mut() {
        *v /= norm;
    }
    std::mem::swap(direction, scratch);
    Ok(norm.ln())
}

/// The action `x . M = xM / |xM|` of a nonnegative matrix on a direction.
pub fn projective_action<T: Scalar>(
    x: &ProjectivePoint<T>,
    m: &Matrix<T>,
) -> Result<ProjectivePoint<T>> {
    let y = m.left_mul(x.coords());
    if l1(&y) <= T::zero() {
        return Err(Error::Degenerate(
            "matrix annihilates the direction (zero column pattern)".into(),
        ));
    }
    ProjectivePoint::from_unnormalized(&y)
}

/// The additive increment `ln |xM|`; satisfies
/// `cocycle(x, M1 M2) = cocycle(x . M1, M2) + cocycle(x, M1)`.
pub fn cocycle<T: Scalar>(x: &ProjectivePoint<T>, m: &Matrix<T>) -> Result<T> {
    let norm = l1(&m.left_mul(x.coords()));
    if norm <= T::zero() {
        return Err(Error::Degenerate(
            "matrix annihilates the direction (zero column pattern)".into(),
        ));
    }
    Ok(norm.ln())
}

/// One recorded step of the walk.
#[derive(Debug, Clone)]
pub struct WalkStep<T> {
    /// Index of the sampled model state.
    pub state_index: usize,
    /// Cocycle increment of this step.
    pub increment: T,
    /// Position after the step.
    pub position: T,
    /// Direction after the step.
    pub direction: ProjectivePoint<T>,
}

/// A recorded trajectory of the direction chain and its log-norm walk.
#[derive(Debug, Clone)]
pub struct WalkPath<T> {
    /// Starting direction.
    pub start: ProjectivePoint<T>,
    /// Starting position `a`.
    pub initial: T,
    /// Steps in order; step `k` carries the state after `k + 1` matrices.
    pub steps: Vec<WalkStep<T>>,
    /// First index `n >= 1` with position `<= 0`, when attained.
    pub tau: Option<usize>,
}

impl<T: Scalar> WalkPath<T> {
    /// Position after the last recorded step.
    pub fn final_position(&self) -> T {
        self.steps.last().map_or(self.initial, |s| s.position)
    }

    /// Recomputes the passage index from the stored positions.
    pub fn derive_tau(&self) -> Option<usize> {
        self.steps
            .iter()
            .position(|s| s.position <= T::zero())
            .map(|k| k + 1)
    }
}

/// Samples `n` environment states and records the full trajectory from
/// `(x, a)`. The passage time is recorded but the walk is not stopped.
pub fn run_walk<T: Scalar>(
    model: &EnvironmentModel<T>,
    x: &ProjectivePoint<T>,
    a: T,
    n: usize,
    rng: &mut StreamRng,
) -> Result<WalkPath<T>> {
    if x.dim() != model.types() {
        return Err(Error::Domain(format!(
            "direction has dimension {}, model has {} types",
            x.dim(),
            model.types()
        )));
    }
    let mut direction = x.coords().to_vec();
    let mut scratch = vec![T::zero(); x.dim()];
    let mut position = a;
    let mut steps = Vec::with_capacity(n);
    let mut tau = None;
    for k in 0..n {
        let state_index = model.sample_index(rng);
        let increment =
            advance_direction(&mut direction, &mut scratch, model.component(state_index).mean())?;
        position += increment;
        if tau.is_none() && position <= T::zero() {
            tau = Some(k + 1);
        }
        steps.push(WalkStep {
            state_index,
            increment,
            position,
            direction: ProjectivePoint {
                coords: direction.clone(),
            },
        });
    }
    Ok(WalkPath {
        start: x.clone(),
        initial: a,
        steps,
        tau,
    })
}

/// Monte Carlo estimate of the upper Lyapunov exponent.
#[derive(Debug, Clone)]
pub struct LyapunovEstimate<T> {
    /// Mean of `ln |x R_n| / n` over replicas.
    pub pi_hat: T,
    /// Standard error over replicas.
    pub se: T,
    pub n: usize,
    pub replicas: u64,
}

/// Estimates the Lyapunov exponent as the replica average of
/// `ln |x R_n| / n`, accumulated incrementally.
pub fn lyapunov<T: Scalar>(
    model: &EnvironmentModel<T>,
    x: &ProjectivePoint<T>,
    n: usize,
    replicas: u64,
    seed: u64,
) -> Result<LyapunovEstimate<T>> {
    if n == 0 || replicas == 0 {
        return Err(Error::Domain(
            "lyapunov needs at least one step and one replica".into(),
        ));
    }
    if x.dim() != model.types() {
        return Err(Error::Domain(format!(
            "direction has dimension {}, model has {} types",
            x.dim(),
            model.types()
        )));
    }
    let rates = par_map_replicas(seed, replicas, |_, mut rng| -> Result<T> {
        let mut direction = x.coords().to_vec();
        let mut scratch = vec![T::zero(); x.dim()];
        let mut total = T::zero();
        for _ in 0..n {
            let state = model.sample_index(&mut rng);
            total += advance_direction(&mut direction, &mut scratch, model.component(state).mean())?;
        }
        Ok(total / count(n))
    });
    let rates = rates.into_iter().collect::<Result<Vec<T>>>()?;
    let (pi_hat, se) = mean_se(&rates);
    Ok(LyapunovEstimate {
        pi_hat,
        se,
        n,
        replicas,
    })
}

/// Occupation measure of the direction chain after burn-in, with equal
/// weights `1 / samples`.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure<T> {
    points: Vec<ProjectivePoint<T>>,
}

impl<T: Scalar> EmpiricalMeasure<T> {
    pub fn points(&self) -> &[ProjectivePoint<T>] {
        &self.points
    }

    /// Weight of each point.
    pub fn weight(&self) -> T {
        count::<T>(self.points.len()).recip()
    }

    /// Average of a test function over the measure.
    pub fn average<F: Fn(&[T]) -> T>(&self, phi: F) -> T {
        let sum: T = self.points.iter().map(|x| phi(x.coords())).sum();
        sum / count(self.points.len())
    }
}

/// Runs the direction chain for `burn_in + samples` steps and returns the
/// occupation measure of the last `samples` directions.
pub fn invariant_measure<T: Scalar>(
    model: &EnvironmentModel<T>,
    x: &ProjectivePoint<T>,
    burn_in: usize,
    samples: usize,
    rng: &mut StreamRng,
) -> Result<EmpiricalMeasure<T>> {
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let mut direction = x.coords().to_vec();
    let mut scratch = vec![T::zero(); x.dim()];
    for _ in 0..burn_in {
        let state = model.sample_index(rng);
        advance_direction(&mut direction, &mut scratch, model.component(state).mean())?;
    }
    let mut points = Vec::with_capacity(samples);
    for _ in 0..samples {
        let state = model.sample_index(rng);
        advance_direction(&mut direction, &mut scratch, model.component(state).mean())?;
        points.push(ProjectivePoint {
            coords: direction.clone(),
        });
    }
    Ok(EmpiricalMeasure { points })
}

/// Stationarity diagnostic for one test function: the sample average of
/// the exact one-step drift `E[phi(X . M) | X] - phi(X)`.
#[derive(Debug, Clone)]
pub struct StationarityRow<T> {
    /// Name of the test function, e.g. `x_1` or `x_1*x_2`.
    pub function: String,
    /// Mean drift over the sample; near zero at stationarity.
    pub residual: T,
    /// Batch-means standard error of the mean drift.
    pub se: T,
}

/// Compares the occupation measure with its exact one-step image on
/// coordinate monomials up to degree two. The one-step expectation is a
/// finite sum over the model states, so the residual carries only the
/// sampling error of the measure itself.
pub fn stationarity_residuals<T: Scalar>(
    model: &EnvironmentModel<T>,
    measure: &EmpiricalMeasure<T>,
) -> Result<Vec<StationarityRow<T>>> {
    let p = model.types();
    let mut monomials: Vec<(String, Vec<usize>)> = Vec::new();
    for j in 0..p {
        monomials.push((format!("x_{}", j + 1), vec![j]));
    }
    for j in 0..p {
        for k in j..p {
            monomials.push((format!("x_{}*x_{}", j + 1, k + 1), vec![j, k]));
        }
    }

    let mut scratch = vec![T::zero(); p];
    let mut rows = Vec::with_capacity(monomials.len());
    for (name, indices) in monomials {
        let phi = |x: &[T]| indices.iter().fold(T::one(), |acc, &j| acc * x[j]);
        let drifts: Vec<T> = measure
            .points()
            .iter()
            .map(|point| {
                let mut expected = T::zero();
                for state in model.states() {
                    state.component.mean().left_mul_into(point.coords(), &mut scratch);
                    let norm = l1(&scratch);
                    if norm > T::zero() {
                        for v in scratch.iter_mut() {
                            *v /= norm;
                        }
                        expected += state.weight * phi(&scratch);
                    }
                }
                expected - phi(point.coords())
            })
            .collect();
        let batches = 32.min(drifts.len());
        let (residual, se) = crate::stats::batch_statistic(&drifts, batches, |b| {
            let s: T = b.iter().copied().sum();
            s / count(b.len())
        })?;
        rows.push(StationarityRow {
            function: name,
            residual,
            se,
        });
    }
    Ok(rows)
}

/// Verdict of one model condition check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionStatus {
    /// The checkable form of the condition holds.
    Satisfied,
    /// The check could neither confirm nor refute the condition.
    Inconclusive,
    /// Evidence against the condition (or a degenerate quantity).
    Flagged,
}

impl fmt::Display for ConditionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionStatus::Satisfied => write!(f, "satisfied"),
            ConditionStatus::Inconclusive => write!(f, "inconclusive"),
            ConditionStatus::Flagged => write!(f, "flagged"),
        }
    }
}

/// One quantitative line of the condition report.
#[derive(Debug, Clone)]
pub struct ConditionRow<T> {
    /// What was computed, e.g. `H1 E|M|^eps (eps=0.5)`.
    pub quantity: String,
    pub estimate: T,
    /// Zero for exact finite sums.
    pub stderr: T,
    /// Walk length or product length when applicable, else 0.
    pub n: usize,
    /// Monte Carlo replicas, or the number of support states for exact
    /// sums.
    pub replicas: u64,
    pub status: ConditionStatus,
    pub note: String,
}

/// Tuning knobs for the condition checks.
#[derive(Debug, Clone)]
pub struct ConditionParams<T> {
    /// Exponent grid for the norm and second-moment conditions.
    pub eps_grid: Vec<T>,
    /// Threshold grid for the uniform-expansion condition.
    pub delta_grid: Vec<T>,
    /// Walk length for the Lyapunov estimate.
    pub lyapunov_n: usize,
    /// Replicas for the Lyapunov estimate.
    pub lyapunov_replicas: u64,
    pub seed: u64,
}

impl<T: Scalar> Default for ConditionParams<T> {
    fn default() -> Self {
        Self {
            eps_grid: vec![real(0.1), real(0.5), T::one()],
            delta_grid: vec![real(0.05), real(0.1), real(0.25), real(0.5), T::one()],
            lyapunov_n: 256,
            lyapunov_replicas: 4000,
            seed: 0,
        }
    }
}

/// Outcome of the full condition checklist over a finite-support model.
#[derive(Debug, Clone)]
pub struct ConditionReport<T> {
    /// Detailed quantitative rows, one per computed quantity.
    pub rows: Vec<ConditionRow<T>>,
    /// One verdict per condition, in report order.
    pub verdicts: Vec<(String, ConditionStatus)>,
}

impl<T: Scalar> ConditionReport<T> {
    /// True when every condition verdict is `Satisfied`.
    pub fn all_satisfied(&self) -> bool {
        self.verdicts
            .iter()
            .all(|(_, s)| *s == ConditionStatus::Satisfied)
    }

    pub fn verdict(&self, name: &str) -> Option<ConditionStatus> {
        self.verdicts
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s)
    }
}

impl<T: Scalar> fmt::Display for ConditionReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "condition checklist")?;
        for (name, status) in &self.verdicts {
            writeln!(f, "  {name}: {status}")?;
        }
        writeln!(f, "details")?;
        for row in &self.rows {
            write!(
                f,
                "  {} = {:.6e} (se {:.1e}, n {}, replicas {}) [{}]",
                row.quantity, row.estimate, row.stderr, row.n, row.replicas, row.status
            )?;
            if row.note.is_empty() {
                writeln!(f)?;
            } else {
                writeln!(f, " {}", row.note)?;
            }
        }
        Ok(())
    }
}

/// Boolean positivity pattern of a matrix, used for the irreducibility
/// check.
fn positivity_pattern<T: Scalar>(m: &Matrix<T>) -> Vec<bool> {
    m.entries().iter().map(|&e| e > T::zero()).collect()
}

fn pattern_product(a: &[bool], b: &[bool], p: usize) -> Vec<bool> {
    let mut out = vec![false; p * p];
    for i in 0..p {
        for j in 0..p {
            let mut any = false;
            for k in 0..p {
                if a[i * p + k] && b[k * p + j] {
                    any = true;
                    break;
                }
            }
            out[i * p + j] = any;
        }
    }
    out
}

/// Searches the semigroup generated by the support's positivity patterns
/// for an all-positive product of length at most `p^2`. Returns the length
/// when found.
fn positive_product_length<T: Scalar>(supports: &[&Matrix<T>], p: usize) -> Option<usize> {
    let bases: Vec<Vec<bool>> = supports.iter().map(|m| positivity_pattern(m)).collect();
    let mut frontier: HashSet<Vec<bool>> = bases.iter().cloned().collect();
    let mut seen = frontier.clone();
    let max_len = p * p;
    for length in 1..=max_len {
        if frontier.iter().any(|pat| pat.iter().all(|&b| b)) {
            return Some(length);
        }
        if length == max_len {
            break;
        }
        let mut next = HashSet::new();
        for pat in &frontier {
            for base in &bases {
                let prod = pattern_product(pat, base, p);
                if seen.insert(prod.clone()) {
                    next.insert(prod);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    None
}

/// Runs the full condition checklist against a finite-support model:
/// norm-moment finiteness, strong irreducibility (sufficient positive
/// product), entrywise comparability, criticality of the Lyapunov
/// exponent, uniform expansion on an event of positive probability, and
/// the two moment hypotheses of the survival asymptotics. Structural
/// quantities are exact finite sums over the support; only the Lyapunov
/// row is Monte Carlo.
pub fn check_conditions<T: Scalar>(
    model: &EnvironmentModel<T>,
    params: &ConditionParams<T>,
) -> Result<ConditionReport<T>> {
    let p = model.types();
    let states = model.states();
    let support: Vec<&Matrix<T>> = states.iter().map(|s| s.component.mean()).collect();
    let weights: Vec<T> = states.iter().map(|s| s.weight).collect();
    let replicas = states.len() as u64;
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();

    // Finiteness of E|M|^eps: exact over the support, finite whenever the
    // grid is (it always is for finite mixtures).
    for &eps in &params.eps_grid {
        let value: T = support
            .iter()
            .zip(&weights)
            .map(|(m, &w)| w * m.l1_norm().powf(eps))
            .sum();
        rows.push(ConditionRow {
            quantity: format!("H1 E|M|^eps (eps={eps})"),
            estimate: value,
            stderr: T::zero(),
            n: 0,
            replicas,
            status: ConditionStatus::Satisfied,
            note: "exact finite sum over the support".into(),
        });
    }
    verdicts.push(("H1 norm moment".into(), ConditionStatus::Satisfied));

    // Strong irreducibility, checked through the sufficient condition that
    // some product over the support has all entries strictly positive.
    let h2 = positive_product_length(&support, p);
    let h2_status = if h2.is_some() {
        ConditionStatus::Satisfied
    } else {
        ConditionStatus::Inconclusive
    };
    rows.push(ConditionRow {
        quantity: "H2 positive product found".into(),
        estimate: if h2.is_some() { T::one() } else { T::zero() },
        stderr: T::zero(),
        n: h2.unwrap_or(p * p),
        replicas,
        status: h2_status,
        note: match h2 {
            Some(len) => format!("all-positive product of length {len}"),
            None => format!("no all-positive product up to length {}", p * p),
        },
    });
    verdicts.push(("H2 strong irreducibility".into(), h2_status));

    // Entrywise comparability: the largest within-matrix entry ratio over
    // the support; a zero entry anywhere makes the ratio infinite.
    let mut ratio = T::one();
    let mut zero_entry = false;
    for m in &support {
        match m.entry_ratio_bound() {
            Some(b) => ratio = ratio.max(b),
            None => zero_entry = true,
        }
    }
    let h3_status = if zero_entry {
        ConditionStatus::Flagged
    } else {
        ConditionStatus::Satisfied
    };
    rows.push(ConditionRow {
        quantity: "H3 entry ratio bound".into(),
        estimate: if zero_entry { T::infinity() } else { ratio },
        stderr: T::zero(),
        n: 0,
        replicas,
        status: h3_status,
        note: if zero_entry {
            "a support matrix has a zero entry".into()
        } else {
            "any b above this value works".into()
        },
    });
    verdicts.push(("H3 entry comparability".into(), h3_status));

    // Criticality: Lyapunov exponent compatible with zero.
    let lyap = lyapunov(
        model,
        &ProjectivePoint::uniform(p),
        params.lyapunov_n,
        params.lyapunov_replicas,
        params.seed,
    )?;
    let h4_status = if lyap.pi_hat.abs() <= real::<T>(3.0) * lyap.se {
        ConditionStatus::Satisfied
    } else {
        ConditionStatus::Flagged
    };
    rows.push(ConditionRow {
        quantity: "H4 Lyapunov exponent".into(),
        estimate: lyap.pi_hat,
        stderr: lyap.se,
        n: lyap.n,
        replicas: lyap.replicas,
        status: h4_status,
        note: "criticality requires a value compatible with 0".into(),
    });
    verdicts.push(("H4 zero Lyapunov exponent".into(), h4_status));

    // Uniform expansion: min over directions of ln|xM| equals the log of
    // the minimal row sum, so the event probability is an exact sum.
    let mut h5_witness: Option<T> = None;
    for &delta in &params.delta_grid {
        let threshold = delta.exp();
        let prob: T = support
            .iter()
            .zip(&weights)
            .filter(|(m, _)| m.min_row_sum() >= threshold)
            .map(|(_, &w)| w)
            .sum();
        if prob > T::zero() && delta > T::zero() {
            h5_witness = Some(match h5_witness {
                Some(best) => best.max(delta),
                None => delta,
            });
        }
        rows.push(ConditionRow {
            quantity: format!("H5 P(min row sum >= e^delta) (delta={delta})"),
            estimate: prob,
            stderr: T::zero(),
            n: 0,
            replicas,
            status: if prob > T::zero() {
                ConditionStatus::Satisfied
            } else {
                ConditionStatus::Inconclusive
            },
            note: "exact finite sum over the support".into(),
        });
    }
    let h5_status = if h5_witness.is_some() {
        ConditionStatus::Satisfied
    } else {
        ConditionStatus::Inconclusive
    };
    rows.push(ConditionRow {
        quantity: "H5 witness delta".into(),
        estimate: h5_witness.unwrap_or_else(T::zero),
        stderr: T::zero(),
        n: 0,
        replicas,
        status: h5_status,
        note: match h5_witness {
            Some(_) => "largest grid delta with positive probability".into(),
            None => "no grid delta had positive probability".into(),
        },
    });
    verdicts.push(("H5 uniform expansion".into(), h5_status));

    // Reciprocal-norm moment: x -> 1/|xM| is convex on the simplex, so the
    // supremum sits at a vertex, where |xM| is a row sum.
    let mut worst = T::zero();
    let mut infinite = false;
    for i in 0..p {
        let mut value = T::zero();
        for (m, &w) in support.iter().zip(&weights) {
            let row = m.row_sum(i);
            if row <= T::zero() {
                infinite = true;
            } else {
                value += w / row;
            }
        }
        worst = worst.max(value);
    }
    let expon_status = if infinite {
        ConditionStatus::Flagged
    } else {
        ConditionStatus::Satisfied
    };
    rows.push(ConditionRow {
        quantity: "sup_x E[1/|xM|]".into(),
        estimate: if infinite { T::infinity() } else { worst },
        stderr: T::zero(),
        n: 0,
        replicas,
        status: expon_status,
        note: "supremum attained at a simplex vertex by convexity".into(),
    });
    verdicts.push(("reciprocal norm moment".into(), expon_status));

    // Second-moment hypothesis: E[eta^(1+eps)] exact over the support.
    for &eps in &params.eps_grid {
        let value: T = states
            .iter()
            .map(|s| s.weight * s.component.eta().powf(T::one() + eps))
            .sum();
        rows.push(ConditionRow {
            quantity: format!("E[eta^(1+eps)] (eps={eps})"),
            estimate: value,
            stderr: T::zero(),
            n: 0,
            replicas,
            status: ConditionStatus::Satisfied,
            note: "exact finite sum over the support".into(),
        });
    }
    verdicts.push(("second moment of eta".into(), ConditionStatus::Satisfied));

    Ok(ConditionReport { rows, verdicts })
}

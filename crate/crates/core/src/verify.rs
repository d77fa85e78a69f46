//! Randomized verification campaigns for the analytic identities and
//! bounds the estimators lean on.
//!
//! Each campaign draws seeded random instances (laws, weight matrices,
//! evaluation points), measures how far the checked relation is from
//! holding, and reports the worst case together with the replica id that
//! regenerates it. Slack is normalized by the largest quantity entering
//! the comparison, so a reported value near machine precision means the
//! relation holds as tightly as floating point allows, at any scale.

use std::collections::HashSet;

use rayon::prelude::*;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::env::{EnvironmentComponent, FractionalLinear, OffspringLaw};
use crate::gf::{
    compose, delta2, evaluate, h_end_derivatives, psi, survival_section, telescope,
};
use crate::linalg::{dot, l1, one_minus, Matrix};
use crate::scalar::{count, real, Scalar};
use crate::stream::{replica_rng, StreamRng};
use crate::walk::{cocycle, projective_action, ProjectivePoint};
use crate::{Error, Result};

/// Outcome of one verification campaign.
#[derive(Debug, Clone)]
pub struct CheckResult<T> {
    pub check_name: &'static str,
    /// Number of random instances drawn.
    pub instances: u64,
    /// Instances whose normalized slack exceeded the tolerance.
    pub violations: u64,
    /// Largest normalized slack seen; negative values are margin.
    pub max_slack: T,
    /// Replica id of the worst instance: rerunning the campaign with the
    /// same campaign seed regenerates it as stream `worst_seed`.
    pub worst_seed: u64,
    /// Normalized slack above which an instance counts as a violation.
    pub tolerance: T,
}

impl<T: Scalar> CheckResult<T> {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Runs one campaign: instance `i` draws from `replica_rng(seed, i)`, and
/// the closure returns its normalized slack. An evaluation error counts as
/// an infinite-slack violation rather than aborting the campaign.
pub(crate) fn run_check<T, F>(
    check_name: &'static str,
    tolerance: T,
    seed: u64,
    instances: u64,
    instance_slack: F,
) -> CheckResult<T>
where
    T: Scalar,
    F: Fn(u64, &mut StreamRng) -> Result<T> + Sync,
{
    // Instance i always draws from stream i, so the outcome is a pure
    // function of the campaign seed; the reduction below is associative
    // and breaks slack ties toward the smaller stream id, so the result
    // does not depend on how rayon splits the range.
    let (violations, max_slack, worst_seed) = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i);
            let slack = match instance_slack(i, &mut rng) {
                Ok(slack) if !slack.is_nan() => slack,
                _ => T::infinity(),
            };
            let violation = u64::from(slack > tolerance);
            (violation, slack, i)
        })
        .reduce(
            || (0, T::neg_infinity(), u64::MAX),
            |a, b| {
                let worse = b.1 > a.1 || (b.1 == a.1 && b.2 < a.2);
                let (slack, id) = if worse { (b.1, b.2) } else { (a.1, a.2) };
                (a.0 + b.0, slack, id)
            },
        );
    CheckResult {
        check_name,
        instances,
        violations,
        max_slack,
        worst_seed: if worst_seed == u64::MAX { 0 } else { worst_seed },
        tolerance,
    }
}

/// Positive weights summing to one.
fn random_probs<T: Scalar>(len: usize, rng: &mut StreamRng) -> Vec<T> {
    let mut out: Vec<T> = (0..len)
        .map(|_| real::<T>(0.05 + rng.gen::<f64>()))
        .collect();
    let total = l1(&out);
    for v in out.iter_mut() {
        *v /= total;
    }
    out
}

/// A finite-support law over `p` types: up to six distinct count vectors
/// with at most five children per type, positive probabilities.
fn random_law<T: Scalar>(p: usize, rng: &mut StreamRng) -> OffspringLaw<T> {
    loop {
        let size = rng.gen_range(1..=6usize);
        let mut seen = HashSet::new();
        let mut points = Vec::with_capacity(size);
        for _ in 0..size {
            let z: Vec<u32> = (0..p).map(|_| rng.gen_range(0..=5u32)).collect();
            if seen.insert(z.clone()) {
                points.push(z);
            }
        }
        let probs = random_probs(points.len(), rng);
        if let Ok(law) = OffspringLaw::new(p, points.into_iter().zip(probs).collect()) {
            return law;
        }
    }
}

/// A random component over `p` types; with `positive_mean` every mean
/// entry is strictly positive, so the entry-ratio bound exists.
fn random_component<T: Scalar>(
    p: usize,
    positive_mean: bool,
    rng: &mut StreamRng,
) -> EnvironmentComponent<T> {
    loop {
        let laws: Vec<OffspringLaw<T>> = (0..p).map(|_| random_law(p, rng)).collect();
        let Ok(comp) = EnvironmentComponent::from_laws(laws) else {
            continue;
        };
        if comp.mean().l1_norm() < real::<T>(1e-6) {
            continue;
        }
        if positive_mean && comp.mean().min_entry() <= T::zero() {
            continue;
        }
        return comp;
    }
}

/// A matrix with entries uniform on `[0.05, 2.05)`.
fn random_weight_matrix<T: Scalar>(p: usize, rng: &mut StreamRng) -> Matrix<T> {
    let rows = (0..p)
        .map(|_| {
            (0..p)
                .map(|_| real::<T>(0.05 + 2.0 * rng.gen::<f64>()))
                .collect()
        })
        .collect();
    Matrix::from_rows(rows).expect("positive rows form a matrix")
}

/// A point of the cube `[0, hi)^p`.
fn random_point<T: Scalar>(p: usize, hi: f64, rng: &mut StreamRng) -> Vec<T> {
    (0..p).map(|_| real::<T>(hi * rng.gen::<f64>())).collect()
}

fn violation<T: Scalar>(below_zero: T, above_bound: T, scale: T) -> T {
    below_zero.max(above_bound) / scale.max(T::one())
}

/// The telescoping decomposition of the reciprocal survival functional
/// reproduces the direct evaluation: relative residual below `1e-9` over
/// random chains of up to 15 environments in up to three types.
pub fn check_telescoping_identity<T: Scalar>(seed: u64, instances: u64) -> CheckResult<T> {
    run_check(
        "telescoping_identity",
        real(1e-9),
        seed,
        instances,
        |_, rng| {
            let p = rng.gen_range(1..=3usize);
            let n = rng.gen_range(1..=15usize);
            let chain: Vec<EnvironmentComponent<T>> =
                (0..n).map(|_| random_component(p, true, rng)).collect();
            let x = random_probs::<T>(p, rng);
            let s = if rng.gen_bool(0.25) {
                vec![T::zero(); p]
            } else {
                random_point(p, 0.9, rng)
            };
            Ok(telescope(&chain, &x, &s)?.residual)
        },
    )
}

/// `0 <= psi <= b p^2 eta` for components with comparable mean entries,
/// any positive weight matrix, any `s` in the open cube.
pub fn check_psi_bound<T: Scalar>(seed: u64, instances: u64) -> CheckResult<T> {
    run_check("psi_bound", real(1e-12), seed, instances, |_, rng| {
        let p = rng.gen_range(1..=3usize);
        let comp = random_component::<T>(p, true, rng);
        let a = random_weight_matrix(p, rng);
        let s = random_point(p, 0.98, rng);
        let value = psi(&comp, &a, &s)?;
        let b = comp
            .mean()
            .entry_ratio_bound()
            .ok_or_else(|| Error::Degenerate("mean matrix not strictly positive".into()))?;
        let bound = b * count::<T>(p) * count::<T>(p) * comp.eta();
        // The two reciprocals psi subtracts set the roundoff scale.
        let cols = a.column_sums();
        let linear = dot(&cols, &comp.mean().right_mul(&one_minus(&s)));
        let recip = l1(&cols) / linear;
        Ok(violation(
            -value,
            value - bound,
            bound.max(recip + value.abs()),
        ))
    })
}

/// The sandwich for the normalized section `H(z)` of the weighted
/// generating function: `0 <= 1/(1-H(z)) - 1/(H'(1)(1-z)) <= H''(1)/H'(1)^2`
/// across a grid of `z` values per instance.
pub fn check_reciprocal_gap<T: Scalar>(seed: u64, instances: u64) -> CheckResult<T> {
    const Z_GRID: [f64; 8] = [0.0, 0.15, 0.35, 0.55, 0.75, 0.9, 0.97, 0.999];
    run_check("reciprocal_gap_bound", real(1e-12), seed, instances, |_, rng| {
        let p = rng.gen_range(1..=3usize);
        let comp = random_component::<T>(p, true, rng);
        let a = random_weight_matrix(p, rng);
        let s = random_point(p, 0.98, rng);
        let (slope, curvature) = h_end_derivatives(&comp, &a, &s)?;
        let cap = curvature / (slope * slope);
        let mut worst = T::neg_infinity();
        for &zf in &Z_GRID {
            let z = real::<T>(zf);
            let alive = survival_section(&comp, &a, &s, z)?;
            if alive <= T::zero() {
                return Err(Error::Degenerate("section hit certain extinction".into()));
            }
            let linear_recip = (slope * (T::one() - z)).recip();
            let gap = alive.recip() - linear_recip;
            let slack = violation(-gap, gap - cap, cap.max(linear_recip + gap.max(T::zero())));
            worst = worst.max(slack);
        }
        Ok(worst)
    })
}

/// Second-order term against its quadratic envelope:
/// `|Delta_2(s)| <= mu |1-s|^2` in L1 norms.
pub fn check_second_moment_envelope<T: Scalar>(seed: u64, instances: u64) -> CheckResult<T> {
    run_check(
        "second_moment_envelope",
        real(1e-12),
        seed,
        instances,
        |_, rng| {
            let p = rng.gen_range(1..=3usize);
            let comp = random_component::<T>(p, false, rng);
            let s = random_point(p, 1.0, rng);
            let lhs = l1(&delta2(&comp, &s)?);
            let u_norm = l1(&one_minus(&s));
            let bound = comp.mu() * u_norm * u_norm;
            Ok(violation(T::zero(), lhs - bound, bound))
        },
    )
}

/// Weighted mean-direction lower bound:
/// `|A M (1-s)| >= |A| |M| |1-s| / (b p^2)` when the entries of `M` are
/// comparable within ratio `b`.
pub fn check_weighted_mean_lower_bound<T: Scalar>(seed: u64, instances: u64) -> CheckResult<T> {
    run_check(
        "weighted_mean_lower_bound",
        real(1e-12),
        seed,
        instances,
        |_, rng| {
            let p = rng.gen_range(1..=3usize);
            let comp = random_component::<T>(p, true, rng);
            let a = random_weight_matrix(p, rng);
            let s = random_point(p, 0.98, rng);
            let u = one_minus(&s);
            let weighted = l1(&a.right_mul(&comp.mean().right_mul(&u)));
            let b = comp
                .mean()
                .entry_ratio_bound()
                .ok_or_else(|| Error::Degenerate("mean matrix not strictly positive".into()))?;
            let lower =
                a.l1_norm() * comp.mean().l1_norm() * l1(&u) / (b * count::<T>(p) * count::<T>(p));
            Ok(violation(T::zero(), lower - weighted, weighted))
        },
    )
}

/// The log-norm increment is additive along matrix products:
/// `rho(x, M1 M2) = rho(x, M1) + rho(x . M1, M2)`.
pub fn check_cocycle_property<T: Scalar>(seed: u64, instances: u64) -> CheckResult<T> {
    run_check("cocycle_property", real(1e-12), seed, instances, |_, rng| {
        let p = rng.gen_range(1..=4usize);
        let x = ProjectivePoint::from_unnormalized(&random_probs::<T>(p, rng))?;
        let m1 = random_weight_matrix(p, rng);
        let m2 = random_weight_matrix(p, rng);
        let whole = cocycle(&x, &m1.matmul(&m2))?;
        let split = cocycle(&x, &m1)? + cocycle(&projective_action(&x, &m1)?, &m2)?;
        Ok((whole - split).abs() / whole.abs().max(T::one()))
    })
}

/// The projective action lands on the simplex: nonnegative coordinates
/// with L1 norm exactly one.
pub fn check_projective_normalization<T: Scalar>(seed: u64, instances: u64) -> CheckResult<T> {
    run_check(
        "projective_normalization",
        real(1e-12),
        seed,
        instances,
        |_, rng| {
            let p = rng.gen_range(1..=4usize);
            let x = ProjectivePoint::from_unnormalized(&random_probs::<T>(p, rng))?;
            let y = projective_action(&x, &random_weight_matrix(p, rng))?;
            let total: T = y.coords().iter().copied().sum();
            let most_negative = y
                .coords()
                .iter()
                .fold(T::zero(), |acc, &c| acc.min(c));
            Ok((total - T::one()).abs().max(-most_negative))
        },
    )
}

/// Backward composition splits at any interior index:
/// `f_{0,n}(s) = f_{0,m}(f_{m,n}(s))`.
pub fn check_composition_associativity<T: Scalar>(seed: u64, instances: u64) -> CheckResult<T> {
    run_check(
        "composition_associativity",
        real(1e-12),
        seed,
        instances,
        |_, rng| {
            let p = rng.gen_range(1..=3usize);
            let n = rng.gen_range(2..=10usize);
            let split = rng.gen_range(1..n);
            let chain: Vec<EnvironmentComponent<T>> =
                (0..n).map(|_| random_component(p, false, rng)).collect();
            let s = random_point(p, 1.0, rng);
            let whole = compose(&chain, &s)?;
            let tail = compose(&chain[split..], &s)?;
            let parts = compose(&chain[..split], &tail)?;
            let worst = whole
                .iter()
                .zip(&parts)
                .fold(T::zero(), |acc, (w, p)| acc.max((*w - *p).abs()));
            Ok(worst)
        },
    )
}

/// The closed-form ceiling on the reciprocal survival at `s = 0`:
/// `1/(x, 1 - f_{0,n}(0)) <= exp(-S_n) + b p^2 sum_k eta_k exp(-S_k)`.
pub fn check_telescoping_bound<T: Scalar>(seed: u64, instances: u64) -> CheckResult<T> {
    run_check(
        "telescoping_bound",
        real(1e-12),
        seed,
        instances,
        |_, rng| {
            let p = rng.gen_range(1..=3usize);
            let n = rng.gen_range(1..=12usize);
            let chain: Vec<EnvironmentComponent<T>> =
                (0..n).map(|_| random_component(p, true, rng)).collect();
            let x = random_probs::<T>(p, rng);
            let report = telescope(&chain, &x, &vec![T::zero(); p])?;
            let bound = report
                .bound
                .ok_or_else(|| Error::Degenerate("entry-ratio bound unavailable".into()))?;
            Ok(violation(T::zero(), report.left - bound, bound.max(report.left)))
        },
    )
}

/// `|x A| >= min_i |e_i A|` for `x` on the simplex, with the minimum
/// attained at a vertex; both sides computed from row sums.
pub fn check_rowsum_vertex_minimum<T: Scalar>(seed: u64, instances: u64) -> CheckResult<T> {
    run_check(
        "rowsum_vertex_minimum",
        real(1e-12),
        seed,
        instances,
        |_, rng| {
            let p = rng.gen_range(1..=4usize);
            let m = random_weight_matrix::<T>(p, rng);
            let min_row = m.min_row_sum();
            let vertex_min = (0..p)
                .map(|i| m.row_sum(i))
                .fold(T::infinity(), T::min);
            let mut worst = (min_row - vertex_min).abs();
            for _ in 0..5 {
                let x = random_probs::<T>(p, rng);
                let weighted = l1(&m.left_mul(&x));
                worst = worst.max(min_row - weighted);
            }
            Ok(worst / m.l1_norm().max(T::one()))
        },
    )
}

/// `mu` and `eta` are invariant under a consistent relabeling of the
/// types (parent order and offspring coordinates permuted together).
pub fn check_eta_relabeling<T: Scalar>(seed: u64, instances: u64) -> CheckResult<T> {
    run_check(
        "eta_relabeling_invariance",
        real(1e-12),
        seed,
        instances,
        |_, rng| {
            let p = rng.gen_range(2..=3usize);
            let comp = random_component::<T>(p, false, rng);
            let mut perm: Vec<usize> = (0..p).collect();
            perm.shuffle(rng);
            let relabeled: Vec<OffspringLaw<T>> = (0..p)
                .map(|j| {
                    let support = comp
                        .law(perm[j])
                        .support()
                        .iter()
                        .map(|(z, prob)| {
                            let zp: Vec<u32> = (0..p).map(|l| z[perm[l]]).collect();
                            (zp, *prob)
                        })
                        .collect();
                    OffspringLaw::new(p, support)
                })
                .collect::<Result<_>>()?;
            let twin = EnvironmentComponent::from_laws(relabeled)?;
            let mu_diff = (comp.mu() - twin.mu()).abs() / comp.mu().max(T::one());
            let eta_diff = (comp.eta() - twin.eta()).abs() / comp.eta().max(T::one());
            Ok(mu_diff.max(eta_diff))
        },
    )
}

/// Truncated fractional-linear laws reproduce the closed-form moments and
/// generating function values.
pub fn check_fl_truncation<T: Scalar>(seed: u64, instances: u64) -> CheckResult<T> {
    run_check(
        "fractional_linear_truncation",
        real(1e-10),
        seed,
        instances,
        |_, rng| {
            let p = rng.gen_range(1..=2usize);
            let fls: Vec<FractionalLinear<T>> = (0..p)
                .map(|_| {
                    FractionalLinear::new(
                        real::<T>(0.6 * rng.gen::<f64>()),
                        real::<T>(0.2 + 0.6 * rng.gen::<f64>()),
                        random_probs(p, rng),
                    )
                })
                .collect::<Result<_>>()?;
            let comp = EnvironmentComponent::from_fractional_linear(fls.clone())?;
            let s = random_point(p, 1.0, rng);
            let mut worst = T::zero();
            for (i, fl) in fls.iter().enumerate() {
                let truncated = comp.law(i).mean();
                for (t, c) in truncated.iter().zip(fl.mean_row()) {
                    worst = worst.max((*t - c).abs() / c.max(T::one()));
                }
                let gf_diff = (comp.law(i).pgf(&s) - fl.gf(&s)).abs();
                worst = worst.max(gf_diff);
            }
            Ok(worst)
        },
    )
}

/// Generating functions evaluate to exactly one at `s = 1`, finite-support
/// and closed-form alike.
pub fn check_unit_normalization<T: Scalar>(seed: u64, instances: u64) -> CheckResult<T> {
    run_check(
        "unit_normalization",
        real(1e-12),
        seed,
        instances,
        |_, rng| {
            let p = rng.gen_range(1..=3usize);
            let comp = if rng.gen_bool(0.5) {
                random_component::<T>(p, false, rng)
            } else {
                let fls: Vec<FractionalLinear<T>> = (0..p)
                    .map(|_| {
                        FractionalLinear::new(
                            real::<T>(0.6 * rng.gen::<f64>()),
                            real::<T>(0.2 + 0.6 * rng.gen::<f64>()),
                            random_probs(p, rng),
                        )
                    })
                    .collect::<Result<_>>()?;
                EnvironmentComponent::from_fractional_linear(fls)?
            };
            let values = evaluate(&comp, &vec![T::one(); p])?;
            Ok(values
                .iter()
                .fold(T::zero(), |acc, &v| acc.max((v - T::one()).abs())))
        },
    )
}

/// Runs every campaign at its full budget. Later seeds are offset so no
/// two campaigns share instance streams.
pub fn run_verification<T: Scalar>(seed: u64) -> Vec<CheckResult<T>> {
    vec![
        check_telescoping_identity(seed, 200),
        check_psi_bound(seed.wrapping_add(1), 10_000),
        check_reciprocal_gap(seed.wrapping_add(2), 10_000),
        check_second_moment_envelope(seed.wrapping_add(3), 10_000),
        check_weighted_mean_lower_bound(seed.wrapping_add(4), 10_000),
        check_cocycle_property(seed.wrapping_add(5), 10_000),
        check_projective_normalization(seed.wrapping_add(6), 10_000),
        check_composition_associativity(seed.wrapping_add(7), 2_000),
        check_telescoping_bound(seed.wrapping_add(8), 2_000),
        check_rowsum_vertex_minimum(seed.wrapping_add(9), 10_000),
        check_eta_relabeling(seed.wrapping_add(10), 10_000),
        check_fl_truncation(seed.wrapping_add(11), 300),
        check_unit_normalization(seed.wrapping_add(12), 10_000),
    ]
}

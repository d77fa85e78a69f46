//! Harmonic-function machinery for the walk killed at zero: estimation of
//! `h(x, a) = lim E[S_n; tau > n]`, sandwich-bound fitting, exact one-step
//! harmonicity residuals, passage-tail asymptotics with the variance
//! normalization, and the self-normalized h-weighted endpoint sampler
//! (the walk conditioned to stay positive).

use crate::env::EnvironmentModel;
use crate::scalar::{count, real, Scalar};
use crate::stats::{batch_statistic, mean_se, sample_variance, self_normalized_mean};
use crate::stream::{par_map_replicas, StreamRng};
use crate::walk::{advance_direction, cocycle, projective_action, ProjectivePoint};
use crate::{Error, Result};

/// Salt mixed into the seed of the variance pass so it never shares
/// replica streams with the survival pass.
const SIGMA_STREAM_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

fn validate_grid(grid: &[usize]) -> Result<usize> {
    if grid.is_empty() {
        return Err(Error::Domain("the n grid must be nonempty".into()));
    }
    if grid[0] == 0 {
        return Err(Error::Domain("grid values must be at least 1".into()));
    }
    for w in grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Domain(
                "the n grid must be strictly increasing".into(),
            ));
        }
    }
    Ok(*grid.last().unwrap())
}

fn validate_start<T: Scalar>(model: &EnvironmentModel<T>, x: &ProjectivePoint<T>, a: T) -> Result<()> {
    if x.dim() != model.types() {
        return Err(Error::Domain(format!(
            "direction has dimension {}, model has {} types",
            x.dim(),
            model.types()
        )));
    }
    if a <= T::zero() {
        return Err(Error::Domain(format!(
            "the starting level must be positive, got {a}"
        )));
    }
    Ok(())
}

/// Walks one replica to the top of the grid, recording per grid point the
/// position (or the bare survival indicator) while the walk is alive, and
/// zero afterwards. Stops as soon as the walk is killed.
fn killed_grid_samples<T: Scalar>(
    model: &EnvironmentModel<T>,
    x: &[T],
    a: T,
    grid: &[usize],
    record_position: bool,
    rng: &mut StreamRng,
) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); grid.len()];
    let mut direction = x.to_vec();
    let mut scratch = vec![T::zero(); x.len()];
    let mut position = a;
    let mut next_grid = 0;
    let n_max = *grid.last().unwrap();
    for step in 1..=n_max {
        let state = model.sample_index(rng);
        position += advance_direction(&mut direction, &mut scratch, model.component(state).mean())?;
        if position <= T::zero() {
            return Ok(out);
        }
        if step == grid[next_grid] {
            out[next_grid] = if record_position { position } else { T::one() };
            next_grid += 1;
        }
    }
    Ok(out)
}

/// One grid point of the harmonic estimator.
#[derive(Debug, Clone)]
pub struct HarmonicPoint<T> {
    pub n: usize,
    /// Estimate of `E[S_n; tau > n]`.
    pub value: T,
    pub se: T,
}

/// The harmonic-function estimate at one `(x, a)` cell.
#[derive(Debug, Clone)]
pub struct HarmonicEstimate<T> {
    /// Starting level of the walk.
    pub a: T,
    /// Per-n estimates of `E[S_n; tau > n]` over the grid.
    pub per_n: Vec<HarmonicPoint<T>>,
    /// The value at the largest grid point.
    pub h_hat: T,
    /// Its standard error.
    pub se: T,
    /// Whether the last two grid points agree within 2% relative.
    pub stable: bool,
}

/// Estimates `h(x, a)` as `E[S_n; tau > n]` over the grid, all grid
/// points sharing each replica's path. The limit value is taken at the
/// largest `n` and flagged unstable if the tail of the grid still moves.
pub fn estimate_h<T: Scalar>(
    model: &EnvironmentModel<T>,
    x: &ProjectivePoint<T>,
    a: T,
    grid: &[usize],
    replicas: u64,
    seed: u64,
) -> Result<HarmonicEstimate<T>> {
    validate_grid(grid)?;
    validate_start(model, x, a)?;
    if replicas == 0 {
        return Err(Error::Domain("need at least one replica".into()));
    }
    let samples = par_map_replicas(seed, replicas, |_, mut rng| {
        killed_grid_samples(model, x.coords(), a, grid, true, &mut rng)
    });
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let mut per_n = Vec::with_capacity(grid.len());
    let mut column = vec![T::zero(); samples.len()];
    for (idx, &n) in grid.iter().enumerate() {
        for (row, sample) in samples.iter().enumerate() {
            column[row] = sample[idx];
        }
        let (value, se) = mean_se(&column);
        per_n.push(HarmonicPoint { n, value, se });
    }
    let last = per_n.last().unwrap();
    let (h_hat, se) = (last.value, last.se);
    let stable = per_n.len() >= 2 && h_hat > T::zero() && {
        let prev = &per_n[per_n.len() - 2];
        (h_hat - prev.value).abs() <= real::<T>(0.02) * h_hat
    };
    Ok(HarmonicEstimate {
        a,
        per_n,
        h_hat,
        se,
        stable,
    })
}

/// Fitted constants of the sandwich `max{0, a - d} < h <= C (1 + a)`.
#[derive(Debug, Clone)]
pub struct HarmonicBounds<T> {
    pub d_hat: T,
    pub c_upper: T,
}

impl<T: Scalar> HarmonicBounds<T> {
    /// Whether one `(a, h)` point satisfies the fitted sandwich, including
    /// the rearranged lower form `1 + a <= (d + 1)(1 + h)`.
    pub fn admits(&self, a: T, h: T) -> bool {
        T::zero().max(a - self.d_hat) < h
            && h <= self.c_upper * (T::one() + a)
            && T::one() + a <= (self.d_hat + T::one()) * (T::one() + h)
    }
}

/// Fits the sandwich constants over sampled `(a, h)` points: the smallest
/// `d` making the lower bound strict on every point (plus a hair of
/// margin) and the smallest `C` making the upper bound hold.
pub fn fit_h_bounds<T: Scalar>(points: &[(T, T)]) -> Result<HarmonicBounds<T>> {
    if points.is_empty() {
        return Err(Error::Insufficient("no (a, h) points to fit".into()));
    }
    let mut d_raw = T::zero();
    let mut c_upper = T::zero();
    let mut a_max = T::zero();
    for &(a, h) in points {
        if !(a > T::zero()) || !(h > T::zero()) || !a.is_finite() || !h.is_finite() {
            return Err(Error::Domain(format!(
                "bound fitting needs positive finite points, got (a={a}, h={h})"
            )));
        }
        d_raw = d_raw.max(a - h);
        c_upper = c_upper.max(h / (T::one() + a));
        a_max = a_max.max(a);
    }
    let d_hat = d_raw.max(T::zero()) + real::<T>(1e-9) * (T::one() + a_max);
    Ok(HarmonicBounds { d_hat, c_upper })
}

/// Exact relative one-step harmonicity residual
/// `|E[h(X_1, S_1); tau > 1] - h(x, a)| / h(x, a)`, with the one-step
/// expectation enumerated over the model's finite support.
pub fn harmonicity_residual<T, H>(
    model: &EnvironmentModel<T>,
    x: &ProjectivePoint<T>,
    a: T,
    h: H,
) -> Result<T>
where
    T: Scalar,
    H: Fn(&ProjectivePoint<T>, T) -> T,
{
    validate_start(model, x, a)?;
    let here = h(x, a);
    if here <= T::zero() {
        return Err(Error::Degenerate(format!(
            "harmonicity residual needs h(x, a) > 0, got {here}"
        )));
    }
    let mut expected = T::zero();
    for state in model.states() {
        let m = state.component.mean();
        let increment = cocycle(x, m)?;
        let landing = a + increment;
        if landing > T::zero() {
            expected += state.weight * h(&projective_action(x, m)?, landing);
        }
    }
    Ok((expected - here).abs() / here)
}

/// One grid point of the passage-tail report.
#[derive(Debug, Clone)]
pub struct TauTailPoint<T> {
    pub n: usize,
    /// Estimate of `P(tau > n)`.
    pub p_hat: T,
    pub se: T,
    /// `sqrt(n) * p_hat`, the quantity that flattens at criticality.
    pub sqrt_n_p: T,
}

/// Passage-tail estimates with the variance normalization of the
/// square-root law `P(tau > n) ~ (2 h / (sigma sqrt(2 pi))) / sqrt(n)`.
#[derive(Debug, Clone)]
pub struct TauTailReport<T> {
    /// Starting level.
    pub a: T,
    pub points: Vec<TauTailPoint<T>>,
    /// Batch-means estimate of `Var(S_n - a) / n` at the largest grid `n`
    /// under the unconditioned walk.
    pub sigma2_hat: T,
    pub sigma2_se: T,
    /// `2 h / (sigma sqrt(2 pi))` when an `h` estimate was supplied.
    pub implied_constant: Option<T>,
}

/// Estimates `P(tau > n)` over the grid (nested per replica, so the curve
/// is exactly nonincreasing) plus the walk variance at the grid top.
pub fn tau_tail<T: Scalar>(
    model: &EnvironmentModel<T>,
    x: &ProjectivePoint<T>,
    a: T,
    grid: &[usize],
    replicas: u64,
    sigma_replicas: u64,
    h_hat: Option<T>,
    seed: u64,
) -> Result<TauTailReport<T>> {
    let n_max = validate_grid(grid)?;
    validate_start(model, x, a)?;
    if replicas == 0 || sigma_replicas == 0 {
        return Err(Error::Domain("need at least one replica per pass".into()));
    }

    let samples = par_map_replicas(seed, replicas, |_, mut rng| {
        killed_grid_samples(model, x.coords(), a, grid, false, &mut rng)
    });
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(grid.len());
    let mut column = vec![T::zero(); samples.len()];
    for (idx, &n) in grid.iter().enumerate() {
        for (row, sample) in samples.iter().enumerate() {
            column[row] = sample[idx];
        }
        let (p_hat, se) = mean_se(&column);
        points.push(TauTailPoint {
            n,
            p_hat,
            se,
            sqrt_n_p: count::<T>(n).sqrt() * p_hat,
        });
    }

    // Unconditioned deviations S_n - a at the grid top, on salted streams
    // so the two passes never share randomness.
    let deviations = par_map_replicas(seed ^ SIGMA_STREAM_SALT, sigma_replicas, |_, mut rng| {
        let mut direction = x.coords().to_vec();
        let mut scratch = vec![T::zero(); x.dim()];
        let mut total = T::zero();
        for _ in 0..n_max {
            let state = model.sample_index(&mut rng);
            total +=
                advance_direction(&mut direction, &mut scratch, model.component(state).mean())?;
        }
        Ok(total)
    });
    let deviations = deviations.into_iter().collect::<Result<Vec<T>>>()?;
    let batches = 32.min(deviations.len());
    let (sigma2_hat, sigma2_se) = batch_statistic(&deviations, batches, |chunk| {
        let mean = chunk.iter().copied().sum::<T>() / count(chunk.len());
        sample_variance(chunk, mean) / count(n_max)
    })?;

    let implied_constant = h_hat.map(|h| {
        real::<T>(2.0) * h / (sigma2_hat.sqrt() * (real::<T>(2.0) * T::PI()).sqrt())
    });

    Ok(TauTailReport {
        a,
        points,
        sigma2_hat,
        sigma2_se,
        implied_constant,
    })
}

/// The linear-in-`a` envelope fitted over several passage-tail reports.
#[derive(Debug, Clone)]
pub struct EnvelopeFit<T> {
    /// Smallest constant with `sqrt(n) P(tau > n) <= c (1 + a)` on every
    /// fitted point.
    pub c_hat: T,
    /// Per-report peak of `sqrt(n) p_hat / (1 + a)`, for vacuity checks.
    pub per_a: Vec<(T, T)>,
}

/// Fits one envelope constant across reports taken at different starting
/// levels.
pub fn fit_envelope<T: Scalar>(reports: &[TauTailReport<T>]) -> Result<EnvelopeFit<T>> {
    if reports.is_empty() {
        return Err(Error::Insufficient("no reports to fit".into()));
    }
    let mut per_a = Vec::with_capacity(reports.len());
    let mut c_hat = T::zero();
    for report in reports {
        let mut peak = T::zero();
        for point in &report.points {
            peak = peak.max(point.sqrt_n_p / (T::one() + report.a));
        }
        c_hat = c_hat.max(peak);
        per_a.push((report.a, peak));
    }
    Ok(EnvelopeFit { c_hat, per_a })
}

/// A self-normalized endpoint-weighted estimate.
#[derive(Debug, Clone)]
pub struct HatEstimate<T> {
    pub value: T,
    pub se: T,
    /// Replicas alive at the horizon.
    pub survivors: u64,
    /// Effective sample size of the normalized weights.
    pub ess: T,
}

/// Shared engine for the conditioned and h-weighted estimators: runs
/// killed walks to the horizon `n`, evaluates `y` at step `k`, and
/// weights surviving paths by `endpoint_weight` at the horizon.
fn weighted_endpoint_estimate<T, W, Y>(
    model: &EnvironmentModel<T>,
    x: &ProjectivePoint<T>,
    a: T,
    k: usize,
    n: usize,
    replicas: u64,
    seed: u64,
    endpoint_weight: W,
    y: Y,
) -> Result<HatEstimate<T>>
where
    T: Scalar,
    W: Fn(&[T], T) -> T + Sync,
    Y: Fn(&[T], T) -> T + Sync,
{
    if k > n {
        return Err(Error::Domain(format!(
            "the observation step {k} must not exceed the horizon {n}"
        )));
    }
    if n == 0 || replicas == 0 {
        return Err(Error::Domain(
            "need a positive horizon and at least one replica".into(),
        ));
    }
    validate_start(model, x, a)?;
    let draws = par_map_replicas(seed, replicas, |_, mut rng| -> Result<(T, T)> {
        let mut direction = x.coords().to_vec();
        let mut scratch = vec![T::zero(); x.dim()];
        let mut position = a;
        let mut observed = if k == 0 {
            y(&direction, position)
        } else {
            T::zero()
        };
        for step in 1..=n {
            let state = model.sample_index(&mut rng);
            position +=
                advance_direction(&mut direction, &mut scratch, model.component(state).mean())?;
            if position <= T::zero() {
                return Ok((T::zero(), T::zero()));
            }
            if step == k {
                observed = y(&direction, position);
            }
        }
        Ok((endpoint_weight(&direction, position), observed))
    });
    let mut weights = Vec::with_capacity(draws.len());
    let mut values = Vec::with_capacity(draws.len());
    let mut survivors = 0u64;
    for draw in draws {
        let (w, v) = draw?;
        if w > T::zero() {
            survivors += 1;
        }
        weights.push(w);
        values.push(v);
    }
    if survivors == 0 {
        return Err(Error::NoSurvivors(format!(
            "no path stayed positive for {n} steps; increase replicas or the level"
        )));
    }
    let (value, se, ess) = self_normalized_mean(&weights, &values)?;
    Ok(HatEstimate {
        value,
        se,
        survivors,
        ess,
    })
}

/// The h-weighted expectation of `Y = y(X_k, S_k)`: surviving paths are
/// reweighted by `h(X_n, S_n)` and self-normalized, realizing the
/// endpoint change of measure of the walk conditioned to stay positive.
/// The estimator is invariant under scaling `h` by a positive constant.
#[allow(clippy::too_many_arguments)]
pub fn hat_expectation<T, H, Y>(
    model: &EnvironmentModel<T>,
    x: &ProjectivePoint<T>,
    a: T,
    k: usize,
    n: usize,
    replicas: u64,
    seed: u64,
    h: H,
    y: Y,
) -> Result<HatEstimate<T>>
where
    T: Scalar,
    H: Fn(&[T], T) -> T + Sync,
    Y: Fn(&[T], T) -> T + Sync,
{
    weighted_endpoint_estimate(model, x, a, k, n, replicas, seed, h, y)
}

/// The plain conditional expectation `E[y(X_k, S_k) | tau > n]`, using
/// unit weights on surviving paths.
#[allow(clippy::too_many_arguments)]
pub fn conditional_expectation<T, Y>(
    model: &EnvironmentModel<T>,
    x: &ProjectivePoint<T>,
    a: T,
    k: usize,
    n: usize,
    replicas: u64,
    seed: u64,
    y: Y,
) -> Result<HatEstimate<T>>
where
    T: Scalar,
    Y: Fn(&[T], T) -> T + Sync,
{
    weighted_endpoint_estimate(model, x, a, k, n, replicas, seed, |_, _| T::one(), y)
}

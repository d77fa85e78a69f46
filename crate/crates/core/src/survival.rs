//! Survival probability of the branching population: direct particle
//! simulation, the environment-averaged generating-function estimator
//! (zero branching variance), and the square-root scaling fit.

use crate::env::{EnvironmentComponent, EnvironmentModel};
use crate::scalar::{count, real, Scalar};
use crate::stats::{mean_se, pooled_mean, weighted_line_fit};
use crate::stream::{par_map_replicas, StreamRng};
use crate::{Error, Result};

/// Total-population ceiling: runs that reach it are frozen and counted as
/// surviving.
pub const DEFAULT_POPULATION_CAP: u64 = 10_000_000;

/// Particle counts by type at one generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchingState {
    pub counts: Vec<u64>,
    pub generation: usize,
}

impl BranchingState {
    /// One particle of the given type (0-based) at generation zero.
    pub fn single(types: usize, parent_type: usize) -> Result<Self> {
        if parent_type >= types {
            return Err(Error::Domain(format!(
                "parent type {parent_type} out of range for {types} types"
            )));
        }
        let mut counts = vec![0u64; types];
        counts[parent_type] = 1;
        Ok(Self {
            counts,
            generation: 0,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn extinct(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }
}

/// A simulated population trajectory.
#[derive(Debug, Clone)]
pub struct PopulationRun {
    /// States from generation 0 up to extinction, the cap event, or the
    /// horizon, whichever comes first.
    pub trajectory: Vec<BranchingState>,
    /// Whether the run was frozen at the population cap (counted alive).
    pub capped: bool,
}

impl PopulationRun {
    /// Whether the population counts as alive at generation `n`: either
    /// the trajectory reaches `n` with particles, or it was frozen at the
    /// cap before `n`.
    pub fn alive_at(&self, n: usize) -> bool {
        match self.trajectory.iter().find(|s| s.generation == n) {
            Some(state) => !state.extinct(),
            None => self.capped,
        }
    }
}

/// Advances the population by one generation under one environment
/// component. Returns `None` when the next generation would exceed `cap`.
fn one_generation<T: Scalar>(
    comp: &EnvironmentComponent<T>,
    counts: &[u64],
    next: &mut [u64],
    cap: u64,
    rng: &mut StreamRng,
) -> Option<()> {
    for v in next.iter_mut() {
        *v = 0;
    }
    let mut total = 0u64;
    for (parent_type, &parents) in counts.iter().enumerate() {
        for _ in 0..parents {
            let offspring = comp.sample_offspring(parent_type, rng);
            for (slot, &z) in next.iter_mut().zip(offspring) {
                *slot += z as u64;
                total += z as u64;
            }
            if total > cap {
                return None;
            }
        }
    }
    Some(())
}

/// Simulates the population for `n` generations, sampling one environment
/// component per generation. Extinction stops the run early; exceeding
/// `cap` freezes it with the capped flag set.
pub fn simulate_population<T: Scalar>(
    model: &EnvironmentModel<T>,
    z0: &BranchingState,
    n: usize,
    cap: u64,
    rng: &mut StreamRng,
) -> Result<PopulationRun> {
    if cap == 0 {
        return Err(Error::Domain("the population cap must be positive".into()));
    }
    if z0.counts.len() != model.types() {
        return Err(Error::Domain(format!(
            "initial state has {} types, model has {}",
            z0.counts.len(),
            model.types()
        )));
    }
    let mut trajectory = vec![BranchingState {
        counts: z0.counts.clone(),
        generation: z0.generation,
    }];
    let mut counts = z0.counts.clone();
    let mut next = vec![0u64; counts.len()];
    for step in 1..=n {
        if counts.iter().all(|&c| c == 0) {
            break;
        }
        let state = model.sample_index(rng);
        if one_generation(model.component(state), &counts, &mut next, cap, rng).is_none() {
            return Ok(PopulationRun {
                trajectory,
                capped: true,
            });
        }
        std::mem::swap(&mut counts, &mut next);
        trajectory.push(BranchingState {
            counts: counts.clone(),
            generation: z0.generation + step,
        });
    }
    Ok(PopulationRun {
        trajectory,
        capped: false,
    })
}

/// One grid point of a survival report.
#[derive(Debug, Clone)]
pub struct SurvivalPoint<T> {
    pub n: usize,
    /// Estimated survival probability at generation `n`.
    pub p_hat: T,
    pub se: T,
    /// `sqrt(n) * p_hat`, the quantity that flattens at criticality.
    pub sqrt_n_p: T,
    /// Fraction of replicas frozen at the population cap by generation
    /// `n` (always zero for the generating-function estimator).
    pub capped_fraction: T,
}

/// Survival estimates over an `n` grid for one starting type.
#[derive(Debug, Clone)]
pub struct ScalingReport<T> {
    /// 0-based starting type.
    pub type_index: usize,
    pub points: Vec<SurvivalPoint<T>>,
}

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

/// Estimates survival by direct particle simulation: one population run
/// per replica, checked against the grid generations. Capped runs count
/// as alive from the cap event onward.
pub fn population_survival<T: Scalar>(
    model: &EnvironmentModel<T>,
    parent_type: usize,
    grid: &[usize],
    replicas: u64,
    cap: u64,
    seed: u64,
) -> Result<ScalingReport<T>> {
    let n_max = validate_grid(grid)?;
    if parent_type >= model.types() {
        return Err(Error::Domain(format!(
            "parent type {parent_type} out of range for {} types",
            model.types()
        )));
    }
    if cap == 0 {
        return Err(Error::Domain("the population cap must be positive".into()));
    }
    if replicas == 0 {
        return Err(Error::Domain("need at least one replica".into()));
    }
    let p = model.types();
    let samples = par_map_replicas(seed, replicas, |_, mut rng| {
        // (alive indicator, capped indicator) per grid point.
        let mut alive = vec![T::zero(); grid.len()];
        let mut capped = vec![T::zero(); grid.len()];
        let mut counts = vec![0u64; p];
        counts[parent_type] = 1;
        let mut next = vec![0u64; p];
        let mut frozen = false;
        let mut grid_idx = 0;
        for step in 1..=n_max {
            if !frozen {
                if counts.iter().all(|&c| c == 0) {
                    break;
                }
                let state = model.sample_index(&mut rng);
                if one_generation(model.component(state), &counts, &mut next, cap, &mut rng)
                    .is_none()
                {
                    frozen = true;
                } else {
                    std::mem::swap(&mut counts, &mut next);
                }
            }
            if step == grid[grid_idx] {
                if frozen || counts.iter().any(|&c| c > 0) {
                    alive[grid_idx] = T::one();
                }
                if frozen {
                    capped[grid_idx] = T::one();
                }
                grid_idx += 1;
                if grid_idx == grid.len() {
                    break;
                }
            }
        }
        (alive, capped)
    });
    let mut points = Vec::with_capacity(grid.len());
    let mut column = vec![T::zero(); samples.len()];
    for (idx, &n) in grid.iter().enumerate() {
        for (row, (alive, _)) in samples.iter().enumerate() {
            column[row] = alive[idx];
        }
        let (p_hat, se) = mean_se(&column);
        let capped_fraction =
            samples.iter().map(|(_, c)| c[idx]).sum::<T>() / count(samples.len());
        points.push(SurvivalPoint {
            n,
            p_hat,
            se,
            sqrt_n_p: count::<T>(n).sqrt() * p_hat,
            capped_fraction,
        });
    }
    Ok(ScalingReport {
        type_index: parent_type,
        points,
    })
}

/// Estimates annealed survival through the quenched identity: per
/// replica, one environment prefix of the maximal grid length is sampled,
/// and survival at each grid `n` is computed exactly by a backward
/// complement-space pass over the first `n` environments (sums of
/// nonnegative terms, so tiny survival probabilities keep relative
/// accuracy at any depth). Branching randomness is integrated out, so the
/// variance is over environments only. Nested prefixes make the
/// per-replica sequence nonincreasing in `n`; that is asserted to a
/// `1e-12` tolerance.
pub fn annealed_survival<T: Scalar>(
    model: &EnvironmentModel<T>,
    parent_type: usize,
    grid: &[usize],
    replicas: u64,
    seed: u64,
) -> Result<ScalingReport<T>> {
    let n_max = validate_grid(grid)?;
    if parent_type >= model.types() {
        return Err(Error::Domain(format!(
            "parent type {parent_type} out of range for {} types",
            model.types()
        )));
    }
    if replicas == 0 {
        return Err(Error::Domain("need at least one replica".into()));
    }
    let p = model.types();
    let samples = par_map_replicas(seed, replicas, |_, mut rng| -> Result<Vec<T>> {
        let mut states = Vec::with_capacity(n_max);
        for _ in 0..n_max {
            states.push(model.sample_index(&mut rng));
        }
        let mut survivals = Vec::with_capacity(grid.len());
        let mut u = vec![T::one(); p];
        let mut scratch = vec![T::zero(); p];
        let mut next = vec![T::zero(); p];
        for &n in grid {
            for v in u.iter_mut() {
                *v = T::one();
            }
            for &state in states[..n].iter().rev() {
                model
                    .component(state)
                    .extinction_complement_into(&u, &mut scratch, &mut next);
                std::mem::swap(&mut u, &mut next);
            }
            survivals.push(u[parent_type]);
        }
        for w in survivals.windows(2) {
            if w[1] > w[0] + real::<T>(1e-12) {
                return Err(Error::Degenerate(format!(
                    "survival rose along one environment: {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(survivals)
    });
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(grid.len());
    let mut column = vec![T::zero(); samples.len()];
    for (idx, &n) in grid.iter().enumerate() {
        for (row, sample) in samples.iter().enumerate() {
            column[row] = sample[idx];
        }
        let (p_hat, se) = mean_se(&column);
        points.push(SurvivalPoint {
            n,
            p_hat,
            se,
            sqrt_n_p: count::<T>(n).sqrt() * p_hat,
            capped_fraction: T::zero(),
        });
    }
    Ok(ScalingReport {
        type_index: parent_type,
        points,
    })
}

/// Fitted decay of the survival curve.
#[derive(Debug, Clone)]
pub struct BetaFit<T> {
    /// Log-log slope of `p_hat` against `n` over the top half of the
    /// grid; `-1/2` at criticality.
    pub slope: T,
    pub slope_ci: (T, T),
    /// Pooled `sqrt(n) * p_hat` over the top half of the grid.
    pub beta_hat: T,
    pub beta_ci: (T, T),
}

/// Fits the square-root law on the top half of the grid: a weighted
/// log-log regression for the decay exponent and an inverse-variance
/// pooled level for the limit constant. Requires at least four grid
/// points spanning a factor of eight.
pub fn fit_beta<T: Scalar>(points: &[SurvivalPoint<T>]) -> Result<BetaFit<T>> {
    if points.len() < 4 {
        return Err(Error::Insufficient(format!(
            "need at least 4 grid points, got {}",
            points.len()
        )));
    }
    let span = count::<T>(points.last().unwrap().n) / count::<T>(points[0].n);
    if span < real(8.0) {
        return Err(Error::Insufficient(format!(
            "grid must span a factor of at least 8 in n, got {span}"
        )));
    }
    let top = &points[points.len() / 2..];
    let mut xs = Vec::with_capacity(top.len());
    let mut ys = Vec::with_capacity(top.len());
    let mut ws = Vec::with_capacity(top.len());
    let mut betas = Vec::with_capacity(top.len());
    let mut beta_ses = Vec::with_capacity(top.len());
    for point in top {
        if point.p_hat <= T::zero() {
            return Err(Error::Insufficient(format!(
                "no surviving mass at n = {}; cannot fit the decay",
                point.n
            )));
        }
        // Delta method: se(log p) = se(p) / p, floored to keep exact
        // (zero-error) synthetic inputs usable.
        let se_log = (point.se / point.p_hat).max(real(1e-15));
        xs.push(count::<T>(point.n).ln());
        ys.push(point.p_hat.ln());
        ws.push(se_log.powi(-2));
        betas.push(point.sqrt_n_p);
        beta_ses.push((count::<T>(point.n).sqrt() * point.se).max(real(1e-15)));
    }
    let line = weighted_line_fit(&xs, &ys, &ws)?;
    let half_width = real::<T>(1.96) * line.slope_se;
    let (beta_hat, beta_se) = pooled_mean(&betas, &beta_ses)?;
    let beta_half = real::<T>(1.96) * beta_se;
    Ok(BetaFit {
        slope: line.slope,
        slope_ci: (line.slope - half_width, line.slope + half_width),
        beta_hat,
        beta_ci: (beta_hat - beta_half, beta_hat + beta_half),
    })
}

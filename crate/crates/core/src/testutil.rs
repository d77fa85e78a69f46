//! Exact dynamic-programming oracles for the unit-step lattice walk killed
//! at zero, used as references in tests of the passage-time and harmonic
//! estimators.
//!
//! The walk lives on positive integer levels, moves one level up or down
//! with probability 1/2 each, and is killed on reaching level 0. All
//! probabilities are dyadic rationals; up to a few dozen steps they are
//! exact in double precision, and beyond that the DP recursion only
//! averages pairs, so the accumulated rounding stays near machine epsilon
//! times the step count.

/// Forward distribution over alive levels: entry `j - 1` is the
/// probability of being alive at level `j` after `steps` steps, starting
/// from `start_level >= 1`.
pub fn lattice_alive_distribution(start_level: usize, steps: usize) -> Vec<f64> {
    assert!(start_level >= 1, "the walk starts strictly above the barrier");
    let top = start_level + steps;
    let mut cur = vec![0.0f64; top + 2];
    cur[start_level] = 1.0;
    let mut next = vec![0.0f64; top + 2];
    for _ in 0..steps {
        for v in next.iter_mut() {
            *v = 0.0;
        }
        for j in 1..=top {
            let mass = cur[j];
            if mass > 0.0 {
                next[j + 1] += 0.5 * mass;
                if j > 1 {
                    next[j - 1] += 0.5 * mass;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur[1..=top].to_vec()
}

/// Survival profile by backward recursion: entry `j - 1` is the
/// probability of staying alive for `steps` more steps from level `j`,
/// for `j` in `1..=max_level`.
pub fn lattice_survival_profile(steps: usize, max_level: usize) -> Vec<f64> {
    // Levels above max_level + steps are never consulted; pad the table so
    // the recursion can look one level up at every stage.
    let top = max_level + steps + 1;
    let mut cur = vec![1.0f64; top + 1];
    cur[0] = 0.0;
    let mut next = vec![0.0f64; top + 1];
    for stage in 0..steps {
        next[0] = 0.0;
        for j in 1..=(top - stage - 1) {
            let down = if j > 1 { cur[j - 1] } else { 0.0 };
            next[j] = 0.5 * (cur[j + 1] + down);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur[1..=max_level].to_vec()
}

/// Probability of staying alive for `steps` steps from `start_level`.
pub fn lattice_survival(start_level: usize, steps: usize) -> f64 {
    lattice_alive_distribution(start_level, steps).iter().sum()
}

/// Expected level restricted to survival, `E[level; alive]`, after
/// `steps` steps. By optional stopping this equals `start_level` exactly
/// for every horizon.
pub fn lattice_mean_level_alive(start_level: usize, steps: usize) -> f64 {
    lattice_alive_distribution(start_level, steps)
        .iter()
        .enumerate()
        .map(|(idx, &p)| (idx + 1) as f64 * p)
        .sum()
}

/// Conditional probability that the level at `at_step` exceeds
/// `threshold_level`, given survival up to `horizon >= at_step`.
pub fn lattice_indicator_given_survival(
    start_level: usize,
    threshold_level: usize,
    at_step: usize,
    horizon: usize,
) -> f64 {
    assert!(at_step <= horizon);
    let dist = lattice_alive_distribution(start_level, at_step);
    let tail = lattice_survival_profile(horizon - at_step, dist.len());
    let mut above = 0.0;
    let mut total = 0.0;
    for (idx, (&mass, &surv)) in dist.iter().zip(&tail).enumerate() {
        let level = idx + 1;
        let joint = mass * surv;
        total += joint;
        if level > threshold_level {
            above += joint;
        }
    }
    above / total
}

/// The level-weighted analogue of the conditional indicator: the
/// expectation of `1{level > threshold}` at `at_step` under the
/// level-proportional change of measure on alive paths. This is the
/// horizon-free limit of the conditional probability above.
pub fn lattice_hat_indicator(start_level: usize, threshold_level: usize, at_step: usize) -> f64 {
    let dist = lattice_alive_distribution(start_level, at_step);
    let mut above = 0.0;
    for (idx, &mass) in dist.iter().enumerate() {
        let level = idx + 1;
        if level > threshold_level {
            above += level as f64 * mass;
        }
    }
    above / start_level as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survival_from_level_one_follows_the_central_binomial_law() {
        // From level 1 the survival probability after n steps equals
        // C(n, floor(n/2)) / 2^n.
        let binom = |n: u64, k: u64| -> f64 {
            let mut v = 1.0f64;
            for i in 0..k {
                v = v * (n - i) as f64 / (i + 1) as f64;
            }
            v
        };
        for n in [1usize, 2, 3, 4, 7, 10, 15] {
            let expected = binom(n as u64, (n / 2) as u64) / 2f64.powi(n as i32);
            let got = lattice_survival(1, n);
            assert!(
                (got - expected).abs() < 1e-13,
                "survival({n}) = {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn alive_mean_level_is_conserved() {
        for start in [1usize, 2, 5] {
            for steps in [0usize, 1, 3, 10, 25, 50] {
                let mean = lattice_mean_level_alive(start, steps);
                assert!(
                    (mean - start as f64).abs() < 1e-11,
                    "mean level {mean} drifted from {start} after {steps} steps"
                );
            }
        }
    }

    #[test]
    fn forward_and_backward_survival_agree() {
        for start in [1usize, 3, 6] {
            for steps in [1usize, 4, 9, 16] {
                let forward = lattice_survival(start, steps);
                let backward = lattice_survival_profile(steps, start)[start - 1];
                assert!((forward - backward).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn conditional_indicator_interpolates_between_plain_and_weighted() {
        // At horizon = at_step the conditioning adds nothing beyond
        // survival to at_step.
        let plain = lattice_indicator_given_survival(5, 5, 4, 4);
        let dist = lattice_alive_distribution(5, 4);
        let above: f64 = dist.iter().enumerate().filter(|(i, _)| i + 1 > 5).map(|(_, &p)| p).sum();
        let total: f64 = dist.iter().sum();
        assert!((plain - above / total).abs() < 1e-13);

        // As the horizon grows the conditional probability approaches the
        // level-weighted value.
        let target = lattice_hat_indicator(5, 5, 4);
        let near = lattice_indicator_given_survival(5, 5, 4, 800);
        let far = lattice_indicator_given_survival(5, 5, 4, 50);
        assert!((near - target).abs() < (far - target).abs());
        assert!((near - target).abs() < 2e-2);
    }

    #[test]
    fn hat_weights_are_self_normalizing() {
        // The level-weighted mass of all alive paths is exactly 1.
        for steps in [1usize, 5, 12] {
            let dist = lattice_alive_distribution(3, steps);
            let weighted: f64 = dist
                .iter()
                .enumerate()
                .map(|(idx, &p)| (idx + 1) as f64 * p)
                .sum();
            assert!((weighted / 3.0 - 1.0).abs() < 1e-12);
        }
    }
}

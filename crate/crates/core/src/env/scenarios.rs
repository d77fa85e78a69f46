//! Named scenario builders used across tests and experiment configs.
//!
//! Each builder produces a fully validated [`EnvironmentModel`] whose key
//! quantities are known in closed form, so estimators can be checked
//! against exact answers.

use crate::env::model::{geometric_with_mean, EigenvalueState, EnvironmentModel};
use crate::env::{EnvironmentComponent, OffspringLaw};
use crate::scalar::{real, Scalar};
use crate::Result;

/// Single-type model with one deterministic environment: geometric
/// offspring with the given mean every generation.
///
/// With `mean = 1` the generating function is `1/(2 - s)` and the
/// extinction probability by generation `n` is exactly `n/(n+1)`.
pub fn deterministic_geometric<T: Scalar>(mean: T) -> Result<EnvironmentModel<T>> {
    EnvironmentModel::fractional_linear(vec![(vec![geometric_with_mean(mean)?], T::one())])
}

/// Single-type critical model: mean `exp(±delta)` with equal probability,
/// geometric offspring. The log-mean walk is the symmetric lattice walk
/// with step `delta`.
pub fn scalar_symmetric<T: Scalar>(delta: T) -> Result<EnvironmentModel<T>> {
    EnvironmentModel::scalar_symmetric(delta)
}

/// Two-type model with the deterministic environment in which every
/// particle of either type produces exactly one child of each type; the
/// mean matrix is the all-ones matrix.
pub fn paired_doubling<T: Scalar>() -> Result<EnvironmentModel<T>> {
    let law = OffspringLaw::point_mass(2, vec![1, 1])?;
    let comp = EnvironmentComponent::from_laws(vec![law.clone(), law])?;
    EnvironmentModel::finite_mixture(vec![(comp, T::one())])
}

/// Two-type model in which each particle is replaced by one particle of
/// its own type: the mean matrix is the identity and the log-norm walk
/// never moves.
pub fn identity_reproduction<T: Scalar>() -> Result<EnvironmentModel<T>> {
    let law1 = OffspringLaw::point_mass(2, vec![1, 0])?;
    let law2 = OffspringLaw::point_mass(2, vec![0, 1])?;
    let comp = EnvironmentComponent::from_laws(vec![law1, law2])?;
    EnvironmentModel::finite_mixture(vec![(comp, T::one())])
}

/// Deterministic common-left-eigenvector model: a single state with
/// eigenvalue `rho`, so `|x R_n|` grows exactly like `rho^n` for any
/// starting direction.
pub fn deterministic_row_sums<T: Scalar>(rho: T, spread: T) -> Result<EnvironmentModel<T>> {
    EnvironmentModel::common_left_eigenvector(
        vec![real(0.5), real(0.5)],
        vec![EigenvalueState {
            rho,
            spread,
            weight: T::one(),
        }],
    )
}

/// Critical two-type scenario: mean matrices share the left eigenvector
/// `(1/2, 1/2)` and the eigenvalue is `exp(±gamma)` with equal probability,
/// so the log-norm walk along the eigenvector is symmetric and the
/// Lyapunov exponent vanishes by construction. The two states use
/// different row spreads, which keeps the projective chain moving.
pub fn two_type_critical<T: Scalar>(gamma: T) -> Result<EnvironmentModel<T>> {
    let half = real::<T>(0.5);
    EnvironmentModel::common_left_eigenvector(
        vec![half, half],
        vec![
            EigenvalueState {
                rho: gamma.exp(),
                spread: real(0.15),
                weight: half,
            },
            EigenvalueState {
                rho: (-gamma).exp(),
                spread: real(0.05),
                weight: half,
            },
        ],
    )
}

/// Like [`two_type_critical`] but fully symmetric under swapping the two
/// types (equal spreads), so the survival scaling constants of the two
/// starting types coincide.
pub fn two_type_symmetric_critical<T: Scalar>(gamma: T) -> Result<EnvironmentModel<T>> {
    let half = real::<T>(0.5);
    let spread = real::<T>(0.1);
    EnvironmentModel::common_left_eigenvector(
        vec![half, half],
        vec![
            EigenvalueState {
                rho: gamma.exp(),
                spread,
                weight: half,
            },
            EigenvalueState {
                rho: (-gamma).exp(),
                spread,
                weight: half,
            },
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builders_produce_valid_models() {
        assert_eq!(deterministic_geometric(1.0f64).unwrap().types(), 1);
        assert_eq!(scalar_symmetric(0.5f64).unwrap().types(), 1);
        assert_eq!(paired_doubling::<f64>().unwrap().types(), 2);
        assert_eq!(identity_reproduction::<f64>().unwrap().types(), 2);
        assert_eq!(two_type_critical(0.3f64).unwrap().states().len(), 2);
    }

    #[test]
    fn two_type_critical_eigenvalues_are_log_symmetric() {
        let model = two_type_critical(0.3f64).unwrap();
        let rhos: Vec<f64> = model
            .states()
            .iter()
            .map(|s| s.component.left_eigen().unwrap().1)
            .collect();
        assert!((rhos[0].ln() + rhos[1].ln()).abs() < 1e-14);
        // Both states keep strictly positive mean matrices.
        for state in model.states() {
            assert!(state.component.mean().min_entry() > 0.0);
        }
    }

    #[test]
    fn identity_reproduction_mean_is_identity() {
        let model = identity_reproduction::<f64>().unwrap();
        let m = model.component(0).mean();
        assert_eq!((m.get(0, 0), m.get(0, 1)), (1.0, 0.0));
        assert_eq!((m.get(1, 0), m.get(1, 1)), (0.0, 1.0));
    }
}

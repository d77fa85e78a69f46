//! Environment models: i.i.d. distributions over environment components.

use std::sync::Arc;

use rand::Rng;

use crate::env::component::EnvironmentComponent;
use crate::env::fl::FractionalLinear;
use crate::scalar::{prob_tol, real, Scalar};
use crate::{Error, Result};

/// The scenario family a model was built from.
#[derive(Debug, Clone)]
pub enum ModelKind<T> {
    /// Explicit weighted components.
    FiniteMixture,
    /// Weighted states of per-type fractional-linear parameters.
    FractionalLinear,
    /// One type, mean `exp(delta)` or `exp(-delta)` with equal probability.
    ScalarSymmetric { delta: T },
    /// All mean matrices share the left eigenvector `v`; the eigenvalue is
    /// drawn from a finite law.
    CommonLeftEigenvector { v: Vec<T> },
}

/// One state of the mixture defining a model.
#[derive(Debug, Clone)]
pub struct ModelState<T> {
    pub component: Arc<EnvironmentComponent<T>>,
    pub weight: T,
}

/// Eigenvalue state for [`EnvironmentModel::common_left_eigenvector`]:
/// the mean-matrix eigenvalue `rho`, how far the per-type mixing rows are
/// spread away from `v` (0 keeps every row equal to `v`), and the state's
/// probability.
#[derive(Debug, Clone, Copy)]
pub struct EigenvalueState<T> {
    pub rho: T,
    pub spread: T,
    pub weight: T,
}

/// A distribution over environment components, sampled i.i.d. per
/// generation.
///
/// Every scenario family reduces at construction to a finite weighted list
/// of components, so exact enumeration over states is always available to
/// the condition checkers.
#[derive(Debug, Clone)]
pub struct EnvironmentModel<T> {
    states: Vec<ModelState<T>>,
    cum: Vec<T>,
    kind: ModelKind<T>,
    types: usize,
}

impl<T: Scalar> EnvironmentModel<T> {
    fn from_states(states: Vec<ModelState<T>>, kind: ModelKind<T>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidModel("model needs at least one state".into()));
        }
        let types = states[0].component.types();
        let mut total = T::zero();
        for (k, state) in states.iter().enumerate() {
            if state.component.types() != types {
                return Err(Error::InvalidModel(format!(
                    "state {k} has {} types, expected {types}",
                    state.component.types()
                )));
            }
            if !(state.weight >= T::zero()) {
                return Err(Error::InvalidModel(format!(
                    "state {k} has negative weight {}",
                    state.weight
                )));
            }
            total += state.weight;
        }
        if (total - T::one()).abs() > prob_tol::<T>() {
            return Err(Error::InvalidModel(format!(
                "state weights sum to {total}, not 1"
            )));
        }
        let mut cum = Vec::with_capacity(states.len());
        let mut acc = T::zero();
        for state in &states {
            acc += state.weight;
            cum.push(acc);
        }
        Ok(Self {
            states,
            cum,
            kind,
            types,
        })
    }

    /// Model from explicit weighted components.
    pub fn finite_mixture(components: Vec<(EnvironmentComponent<T>, T)>) -> Result<Self> {
        let states = components
            .into_iter()
            .map(|(component, weight)| ModelState {
                component: Arc::new(component),
                weight,
            })
            .collect();
        Self::from_states(states, ModelKind::FiniteMixture)
    }

    /// Model from weighted states of fractional-linear parameters (one
    /// parameter set per parent type in each state).
    pub fn fractional_linear(states: Vec<(Vec<FractionalLinear<T>>, T)>) -> Result<Self> {
        let states = states
            .into_iter()
            .map(|(params, weight)| {
                Ok(ModelState {
                    component: Arc::new(EnvironmentComponent::from_fractional_linear(params)?),
                    weight,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_states(states, ModelKind::FractionalLinear)
    }

    /// Single-type model whose mean is `exp(delta)` or `exp(-delta)` with
    /// equal probability; the log-mean walk is then the symmetric lattice
    /// walk with step `delta`. Offspring are geometric with the matching
    /// mean.
    pub fn scalar_symmetric(delta: T) -> Result<Self> {
        if !(delta > T::zero()) {
            return Err(Error::InvalidModel(format!(
                "scalar symmetric model needs delta > 0, got {delta}"
            )));
        }
        let half = real::<T>(0.5);
        let mut states = Vec::with_capacity(2);
        for sign in [T::one(), -T::one()] {
            let mean = (sign * delta).exp();
            let fl = geometric_with_mean(mean)?;
            states.push(ModelState {
                component: Arc::new(EnvironmentComponent::from_fractional_linear(vec![fl])?),
                weight: half,
            });
        }
        Self::from_states(states, ModelKind::ScalarSymmetric { delta })
    }

    /// Model whose mean matrices all share the left eigenvector `v` (given
    /// up to positive scale): state `m` has mean matrix `rho_m W_m` where
    /// the rows of `W_m` are probability vectors averaging to `v` under
    /// `v`-weights, so `v M = rho_m v` exactly and the log-norm walk along
    /// `v` is the i.i.d. walk with steps `ln rho_m`.
    ///
    /// `spread` moves the first-coordinate mass of the mixing rows away
    /// from `v` (rows stay inside the simplex or the construction fails);
    /// spread zero makes every row equal to `v`.
    pub fn common_left_eigenvector(v: Vec<T>, states: Vec<EigenvalueState<T>>) -> Result<Self> {
        let p = v.len();
        if p == 0 {
            return Err(Error::InvalidModel("eigenvector must be nonempty".into()));
        }
        if v.iter().any(|&vi| !(vi > T::zero())) {
            return Err(Error::InvalidModel(
                "eigenvector must be strictly positive".into(),
            ));
        }
        let norm: T = v.iter().copied().sum();
        let v: Vec<T> = v.into_iter().map(|vi| vi / norm).collect();
        // Signed pattern with v-weighted sum zero: displacing row i by
        // spread * pattern[i] * (e_1 - e_2) keeps the v-average of the rows
        // at v, hence v M = rho v exactly.
        let pattern: Vec<T> = if p == 1 {
            vec![T::zero()]
        } else {
            let head: T = v[..p - 1].iter().copied().sum();
            let mut s = vec![T::one(); p];
            s[p - 1] = -head / v[p - 1];
            s
        };
        let mut model_states = Vec::with_capacity(states.len());
        for (m, st) in states.iter().enumerate() {
            if !(st.rho > T::zero()) {
                return Err(Error::InvalidModel(format!(
                    "state {m}: eigenvalue must be positive, got {}",
                    st.rho
                )));
            }
            if p == 1 && st.spread != T::zero() {
                return Err(Error::InvalidModel(format!(
                    "state {m}: a single-type model admits no spread"
                )));
            }
            if st.spread < T::zero() {
                return Err(Error::InvalidModel(format!(
                    "state {m}: spread must be nonnegative"
                )));
            }
            let mut params = Vec::with_capacity(p);
            for i in 0..p {
                let mut mixer = v.clone();
                if p > 1 {
                    let shift = st.spread * pattern[i];
                    mixer[0] += shift;
                    mixer[1] -= shift;
                }
                if mixer.iter().any(|&w| !(w > T::zero())) {
                    return Err(Error::InvalidModel(format!(
                        "state {m}: spread {} pushes a mixing row out of the simplex",
                        st.spread
                    )));
                }
                // Expected total rho for every row makes row i of the mean
                // matrix rho * mixer_i.
                let geom = st.rho / (T::one() + st.rho);
                let stall = T::one() / (T::one() + st.rho);
                params.push(FractionalLinear::new(stall, geom, mixer)?);
            }
            let component = EnvironmentComponent::from_fractional_linear(params)?
                .with_left_eigen(v.clone(), st.rho)?;
            model_states.push(ModelState {
                component: Arc::new(component),
                weight: st.weight,
            });
        }
        Self::from_states(model_states, ModelKind::CommonLeftEigenvector { v })
    }

    /// Number of particle types `p`.
    pub fn types(&self) -> usize {
        self.types
    }

    pub fn kind(&self) -> &ModelKind<T> {
        &self.kind
    }

    pub fn states(&self) -> &[ModelState<T>] {
        &self.states
    }

    pub fn component(&self, state: usize) -> &EnvironmentComponent<T> {
        &self.states[state].component
    }

    pub fn weight(&self, state: usize) -> T {
        self.states[state].weight
    }

    /// The shared left eigenvector, for scenarios that fix one.
    pub fn left_eigenvector(&self) -> Option<&[T]> {
        match &self.kind {
            ModelKind::CommonLeftEigenvector { v } => Some(v),
            _ => None,
        }
    }

    /// Draws a state index.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: T = T::from_f64(rng.gen::<f64>()).unwrap();
        match self.cum.iter().position(|&c| u < c) {
            Some(idx) => idx,
            None => self.states.len() - 1,
        }
    }

    /// Draws a component (shared handle).
    pub fn sample_component<R: Rng + ?Sized>(&self, rng: &mut R) -> Arc<EnvironmentComponent<T>> {
        Arc::clone(&self.states[self.sample_index(rng)].component)
    }
}

/// Geometric-type law with the given mean `m`: stalls with probability
/// `1/(1+m)`, otherwise a geometric total with parameter `m/(1+m)`; its
/// generating function is `1/(1 + m(1-s))`.
pub fn geometric_with_mean<T: Scalar>(mean: T) -> Result<FractionalLinear<T>> {
    if !(mean > T::zero()) {
        return Err(Error::InvalidModel(format!(
            "geometric offspring law needs a positive mean, got {mean}"
        )));
    }
    let denom = T::one() + mean;
    FractionalLinear::new(T::one() / denom, mean / denom, vec![T::one()])
}

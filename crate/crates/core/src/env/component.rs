//! One generation's environment: offspring laws plus derived moments.

use std::sync::{Arc, OnceLock};

use rand::Rng;

use crate::env::fl::{FractionalLinear, DEFAULT_TRUNCATION_TAIL};
use crate::env::law::OffspringLaw;
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Second-moment summary of a family of offspring laws: the
/// second-factorial-moment matrices per parent type, their total L1 mass
/// `mu`, and the normalized ratio `eta = mu / |M|^2`.
#[derive(Debug, Clone)]
pub struct SecondMoments<T> {
    pub hessians: Vec<Matrix<T>>,
    pub mu: T,
    pub eta: T,
}

/// Mean matrix of a family of laws: entry `(i, j)` is the expected number
/// of type-`j` children of a type-`i` parent. Requires one law per type,
/// each over the same number of types.
pub fn mean_matrix<T: Scalar>(laws: &[OffspringLaw<T>]) -> Result<Matrix<T>> {
    let p = laws.len();
    if p == 0 {
        return Err(Error::InvalidModel("need at least one offspring law".into()));
    }
    let mut rows = Vec::with_capacity(p);
    for (i, law) in laws.iter().enumerate() {
        if law.types() != p {
            return Err(Error::InvalidModel(format!(
                "law {i} covers {} types, expected {p}",
                law.types()
            )));
        }
        rows.push(law.mean());
    }
    Matrix::from_rows(rows)
}

/// Second-factorial-moment matrices with the derived scalars `mu` and
/// `eta`. Fails when the mean matrix has zero norm, since `eta` divides
/// by it.
pub fn second_moments<T: Scalar>(laws: &[OffspringLaw<T>]) -> Result<SecondMoments<T>> {
    let mean = mean_matrix(laws)?;
    let norm = mean.l1_norm();
    if norm <= T::zero() {
        return Err(Error::Degenerate(
            "mean matrix has zero norm; eta is undefined".into(),
        ));
    }
    let hessians: Vec<Matrix<T>> = laws.iter().map(|law| law.second_factorial()).collect();
    let mu: T = hessians.iter().map(|b| b.l1_norm()).sum();
    Ok(SecondMoments {
        hessians,
        mu,
        eta: mu / (norm * norm),
    })
}

/// How the component evaluates its generating functions.
#[derive(Debug, Clone)]
enum GfForm<T> {
    /// Sum over the explicit support of each law.
    Finite,
    /// Closed-form fractional-linear expressions (exact at any depth).
    FractionalLinear(Vec<FractionalLinear<T>>),
}

/// The environment of one generation: an offspring law per parent type,
/// with cached mean matrix, second-moment matrices, and the scalars the
/// analytic bounds use.
///
/// Components are immutable after construction and shared by reference
/// from sampling loops.
#[derive(Debug, Clone)]
pub struct EnvironmentComponent<T> {
    types: usize,
    /// Samplable per-type laws. Filled at construction for finite
    /// components; fractional-linear components enumerate their truncated
    /// supports here on first use, since generating-function work never
    /// needs them.
    laws: OnceLock<Vec<Arc<OffspringLaw<T>>>>,
    gf: GfForm<T>,
    mean: Matrix<T>,
    hessians: Vec<Matrix<T>>,
    mu: T,
    eta: T,
    /// Left eigenvector and eigenvalue of the mean matrix, when the
    /// component was built by a scenario that fixes them.
    left_eigen: Option<(Vec<T>, T)>,
}

impl<T: Scalar> EnvironmentComponent<T> {
    /// Builds a component from explicit finite-support laws, one per type.
    pub fn from_laws(laws: Vec<OffspringLaw<T>>) -> Result<Self> {
        let moments = second_moments(&laws)?;
        let mean = mean_matrix(&laws)?;
        Ok(Self {
            types: laws.len(),
            laws: OnceLock::from(laws.into_iter().map(Arc::new).collect::<Vec<_>>()),
            gf: GfForm::Finite,
            mean,
            hessians: moments.hessians,
            mu: moments.mu,
            eta: moments.eta,
            left_eigen: None,
        })
    }

    /// Builds a component from fractional-linear parameters, one per type.
    ///
    /// Moments come from the closed forms; the samplable laws are the
    /// truncations (tail below [`DEFAULT_TRUNCATION_TAIL`]), which match
    /// the closed-form means to within `1e-10`.
    pub fn from_fractional_linear(params: Vec<FractionalLinear<T>>) -> Result<Self> {
        let p = params.len();
        if p == 0 {
            return Err(Error::InvalidModel(
                "need at least one fractional-linear law".into(),
            ));
        }
        let mut rows = Vec::with_capacity(p);
        let mut hessians = Vec::with_capacity(p);
        for (i, fl) in params.iter().enumerate() {
            if fl.types() != p {
                return Err(Error::InvalidModel(format!(
                    "fractional-linear law {i} covers {} types, expected {p}",
                    fl.types()
                )));
            }
            // Enumerating the truncated support is deferred to first use,
            // but its feasibility is part of construction.
            fl.truncation_horizon(DEFAULT_TRUNCATION_TAIL)?;
            rows.push(fl.mean_row());
            hessians.push(fl.hessian());
        }
        let mean = Matrix::from_rows(rows)?;
        let norm = mean.l1_norm();
        if norm <= T::zero() {
            return Err(Error::Degenerate(
                "mean matrix has zero norm; eta is undefined".into(),
            ));
        }
        let mu: T = hessians.iter().map(|b| b.l1_norm()).sum();
        Ok(Self {
            types: p,
            laws: OnceLock::new(),
            gf: GfForm::FractionalLinear(params),
            mean,
            hessians,
            mu,
            eta: mu / (norm * norm),
            left_eigen: None,
        })
    }

    /// Records a known left eigenpair of the mean matrix, after checking
    /// it really is one.
    pub fn with_left_eigen(mut self, v: Vec<T>, rho: T) -> Result<Self> {
        let vm = self.mean.left_mul(&v);
        let tol = crate::scalar::real::<T>(1e-10) * rho.max(T::one());
        for (got, &vi) in vm.iter().zip(&v) {
            if (*got - rho * vi).abs() > tol {
                return Err(Error::InvalidModel(format!(
                    "claimed left eigenpair fails: (vM)_j = {got}, rho v_j = {}",
                    rho * vi
                )));
            }
        }
        self.left_eigen = Some((v, rho));
        Ok(self)
    }

    pub fn types(&self) -> usize {
        self.types
    }

    /// The samplable per-type laws, enumerating truncated supports on
    /// first use for fractional-linear components. The enumeration cannot
    /// fail here: its horizon was validated at construction.
    fn samplable_laws(&self) -> &[Arc<OffspringLaw<T>>] {
        self.laws.get_or_init(|| match &self.gf {
            GfForm::Finite => unreachable!("finite components store laws at construction"),
            GfForm::FractionalLinear(params) => params
                .iter()
                .map(|fl| {
                    let law = fl
                        .truncated_law(DEFAULT_TRUNCATION_TAIL)
                        .expect("truncation horizon was validated at construction");
                    Arc::new(law)
                })
                .collect(),
        })
    }

    pub fn law(&self, parent_type: usize) -> &OffspringLaw<T> {
        &self.samplable_laws()[parent_type]
    }

    pub fn mean(&self) -> &Matrix<T> {
        &self.mean
    }

    pub fn hessians(&self) -> &[Matrix<T>] {
        &self.hessians
    }

    /// Total L1 mass of the second-factorial-moment matrices.
    pub fn mu(&self) -> T {
        self.mu
    }

    /// `mu / |M|^2`, the scale-free second-moment ratio.
    pub fn eta(&self) -> T {
        self.eta
    }

    /// Left eigenpair `(v, rho)` when the scenario fixed one.
    pub fn left_eigen(&self) -> Option<(&[T], T)> {
        self.left_eigen.as_ref().map(|(v, rho)| (v.as_slice(), *rho))
    }

    /// True when the generating functions are evaluated in closed form
    /// rather than by summing the stored support.
    pub fn has_closed_form_gf(&self) -> bool {
        matches!(self.gf, GfForm::FractionalLinear(_))
    }

    /// Evaluates all `p` generating functions at `s`, writing into `out`.
    /// Outputs are clamped to `[0, 1]`, which the exact values satisfy;
    /// clamping only removes roundoff overshoot.
    ///
    /// The caller is responsible for `s` lying in the unit cube; the
    /// checked entry point is [`crate::gf::evaluate`].
    pub(crate) fn gf_values_into(&self, s: &[T], out: &mut [T]) {
        debug_assert_eq!(s.len(), self.types());
        debug_assert_eq!(out.len(), self.types());
        match &self.gf {
            GfForm::Finite => {
                for (o, law) in out.iter_mut().zip(self.samplable_laws()) {
                    *o = law.pgf(s).max(T::zero()).min(T::one());
                }
            }
            GfForm::FractionalLinear(params) => {
                for (o, fl) in out.iter_mut().zip(params) {
                    *o = fl.gf(s).max(T::zero()).min(T::one());
                }
            }
        }
    }

    /// Evaluates all `p` survival weights `1 - f_i(s)` as sums of
    /// nonnegative terms, so each output keeps relative accuracy even where
    /// `f_i(s)` is within roundoff of one. `u` must hold `1 - s` entrywise;
    /// callers that track survival fractions natively pass them here and
    /// never subtract near-equal quantities.
    pub(crate) fn survival_values_into(&self, s: &[T], u: &[T], out: &mut [T]) {
        debug_assert_eq!(s.len(), self.types());
        debug_assert_eq!(u.len(), self.types());
        debug_assert_eq!(out.len(), self.types());
        match &self.gf {
            GfForm::Finite => {
                for (o, law) in out.iter_mut().zip(self.samplable_laws()) {
                    *o = law.survival_weight(s, u).max(T::zero()).min(T::one());
                }
            }
            GfForm::FractionalLinear(params) => {
                for (o, fl) in out.iter_mut().zip(params) {
                    *o = fl.gf_complement(u).max(T::zero()).min(T::one());
                }
            }
        }
    }

    /// One backward step of the extinction recursion in complement space:
    /// given `u_next = 1 - f_{k+1,n}(s)` computes `1 - f_k(1 - u_next)`
    /// into `out`. `s_scratch` receives the reconstructed argument
    /// `1 - u_next`. Working with complements keeps the tiny survival
    /// probabilities of deep compositions at full relative accuracy.
    pub(crate) fn extinction_complement_into(
        &self,
        u_next: &[T],
        s_scratch: &mut [T],
        out: &mut [T],
    ) {
        for (s, &u) in s_scratch.iter_mut().zip(u_next) {
            *s = (T::one() - u).max(T::zero()).min(T::one());
        }
        self.survival_values_into(s_scratch, u_next, out);
    }

    /// Draws an offspring vector for a parent of the given type.
    pub fn sample_offspring<R: Rng + ?Sized>(&self, parent_type: usize, rng: &mut R) -> &[u32] {
        self.samplable_laws()[parent_type].sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_matrix_of_explicit_two_type_laws() {
        // Type 1 splits into one child of each type; type 2 produces one
        // type-1 child. Mean matrix [[1,1],[1,0]].
        let law1 = OffspringLaw::<f64>::point_mass(2, vec![1, 1]).unwrap();
        let law2 = OffspringLaw::<f64>::point_mass(2, vec![1, 0]).unwrap();
        let m = mean_matrix(&[law1, law2]).unwrap();
        assert_eq!(
            (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1)),
            (1.0, 1.0, 1.0, 0.0)
        );
    }

    #[test]
    fn second_moments_of_squaring_law() {
        // z = 2 with probability 1: f(s) = s^2, B = [2], mu = 2,
        // |M| = 2 so eta = 1/2.
        let law = OffspringLaw::<f64>::point_mass(1, vec![2]).unwrap();
        let sm = second_moments(&[law]).unwrap();
        assert_eq!(sm.hessians[0].get(0, 0), 2.0);
        assert_eq!(sm.mu, 2.0);
        assert_eq!(sm.eta, 0.5);
    }

    #[test]
    fn second_moments_of_paired_doubling() {
        // Both types produce (1,1): each B has zero diagonal and unit
        // off-diagonal, so mu = 4; |M| = 4 gives eta = 1/4.
        let law = OffspringLaw::<f64>::point_mass(2, vec![1, 1]).unwrap();
        let sm = second_moments(&[law.clone(), law]).unwrap();
        assert_eq!(sm.mu, 4.0);
        assert_eq!(sm.eta, 0.25);
    }

    #[test]
    fn eta_of_critical_geometric_is_two() {
        let fl = FractionalLinear::<f64>::new(0.5, 0.5, vec![1.0]).unwrap();
        let comp = EnvironmentComponent::from_fractional_linear(vec![fl]).unwrap();
        assert!((comp.mu() - 2.0).abs() < 1e-15);
        assert!((comp.eta() - 2.0).abs() < 1e-15);
        assert!(comp.has_closed_form_gf());
    }

    #[test]
    fn childless_component_is_rejected() {
        let fl = FractionalLinear::<f64>::new(1.0, 0.5, vec![1.0]).unwrap();
        let err = EnvironmentComponent::from_fractional_linear(vec![fl]).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
        let law = OffspringLaw::<f64>::point_mass(1, vec![0]).unwrap();
        assert!(EnvironmentComponent::from_laws(vec![law]).is_err());
    }

    #[test]
    fn eta_is_invariant_under_type_relabeling() {
        let law1 =
            OffspringLaw::<f64>::new(2, vec![(vec![2, 1], 0.5), (vec![0, 1], 0.5)]).unwrap();
        let law2 =
            OffspringLaw::<f64>::new(2, vec![(vec![1, 0], 0.25), (vec![1, 3], 0.75)]).unwrap();
        let direct = second_moments(&[law1, law2]).unwrap();
        // Swap the two types: reverse law order and flip coordinates.
        let law1s =
            OffspringLaw::<f64>::new(2, vec![(vec![0, 1], 0.25), (vec![3, 1], 0.75)]).unwrap();
        let law2s =
            OffspringLaw::<f64>::new(2, vec![(vec![1, 2], 0.5), (vec![1, 0], 0.5)]).unwrap();
        let swapped = second_moments(&[law1s, law2s]).unwrap();
        assert!((direct.mu - swapped.mu).abs() < 1e-12);
        assert!((direct.eta - swapped.eta).abs() < 1e-12);
    }

    #[test]
    fn survival_values_complement_the_gf_values() {
        let law1 =
            OffspringLaw::<f64>::new(2, vec![(vec![2, 1], 0.5), (vec![0, 1], 0.5)]).unwrap();
        let law2 =
            OffspringLaw::<f64>::new(2, vec![(vec![1, 0], 0.25), (vec![1, 3], 0.75)]).unwrap();
        let finite = EnvironmentComponent::from_laws(vec![law1, law2]).unwrap();
        let fl = FractionalLinear::new(0.3, 0.45, vec![0.7, 0.3]).unwrap();
        let closed =
            EnvironmentComponent::from_fractional_linear(vec![fl.clone(), fl]).unwrap();
        let s = [0.35, 0.8];
        let u = [0.65, 0.2];
        for comp in [&finite, &closed] {
            let mut f = [0.0; 2];
            let mut surv = [0.0; 2];
            comp.gf_values_into(&s, &mut f);
            comp.survival_values_into(&s, &u, &mut surv);
            for i in 0..2 {
                assert!(
                    (surv[i] - (1.0 - f[i])).abs() < 1e-14,
                    "type {i}: survival {} vs 1 - gf {}",
                    surv[i],
                    1.0 - f[i]
                );
            }
            // One complement step from u_next = 1 (extinction at horizon 0,
            // i.e. argument s = 0) reproduces 1 - f(0).
            let mut scratch = [0.0; 2];
            let mut step = [0.0; 2];
            comp.extinction_complement_into(&[1.0, 1.0], &mut scratch, &mut step);
            let mut f0 = [0.0; 2];
            comp.gf_values_into(&[0.0, 0.0], &mut f0);
            for i in 0..2 {
                assert!((step[i] - (1.0 - f0[i])).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn left_eigen_claims_are_checked() {
        let law = OffspringLaw::<f64>::point_mass(2, vec![1, 1]).unwrap();
        let comp = EnvironmentComponent::from_laws(vec![law.clone(), law]).unwrap();
        // Rows are (1,1) twice: v = (1/2,1/2) is a left eigenvector with
        // eigenvalue 2.
        let ok = comp.clone().with_left_eigen(vec![0.5, 0.5], 2.0);
        assert!(ok.is_ok());
        let bad = comp.with_left_eigen(vec![0.5, 0.5], 3.0);
        assert!(bad.is_err());
    }
}

//! Fractional-linear offspring laws.
//!
//! A parent either stalls (no children) or produces a geometric total
//! number of children whose types are drawn i.i.d. from a mixing
//! distribution. The generating function of such a law is a ratio of
//! affine functions of `s`, so it can be evaluated exactly at any depth of
//! composition; an explicit finite-support law is available through
//! truncation for the particle-level samplers.

use crate::env::law::OffspringLaw;
use crate::linalg::Matrix;
use crate::scalar::{prob_tol, real, Scalar};
use crate::{Error, Result};

/// Default truncation tail for [`FractionalLinear::truncated_law`]; one
/// decade below the documented `1e-12` bound so derived moments stay well
/// inside their own tolerances after renormalization.
pub const DEFAULT_TRUNCATION_TAIL: f64 = 1e-13;

/// Parameters of a fractional-linear offspring law.
#[derive(Debug, Clone)]
pub struct FractionalLinear<T> {
    /// Probability of producing no children at all.
    stall: T,
    /// Parameter of the geometric total-children count: given no stall,
    /// `P(total = t) = (1 - geom) geom^(t-1)` for `t >= 1`.
    geom: T,
    /// Distribution of each child's type, i.i.d. across children.
    mixer: Vec<T>,
}

impl<T: Scalar> FractionalLinear<T> {
    /// Validates parameters. `stall = 1` is allowed and yields the law
    /// with no children; models requiring a nonzero mean matrix reject it
    /// downstream.
    pub fn new(stall: T, geom: T, mixer: Vec<T>) -> Result<Self> {
        if !(stall >= T::zero() && stall <= T::one()) {
            return Err(Error::InvalidLaw(format!(
                "stall probability {stall} outside [0, 1]"
            )));
        }
        if !(geom > T::zero() && geom < T::one()) {
            return Err(Error::InvalidLaw(format!(
                "geometric parameter {geom} outside (0, 1)"
            )));
        }
        if mixer.is_empty() {
            return Err(Error::InvalidLaw("mixer must be nonempty".into()));
        }
        if mixer.iter().any(|&w| w < T::zero()) {
            return Err(Error::InvalidLaw("mixer has a negative weight".into()));
        }
        let total: T = mixer.iter().copied().sum();
        if (total - T::one()).abs() > prob_tol::<T>() {
            return Err(Error::InvalidLaw(format!(
                "mixer weights sum to {total}, not 1"
            )));
        }
        Ok(Self { stall, geom, mixer })
    }

    pub fn types(&self) -> usize {
        self.mixer.len()
    }

    pub fn stall(&self) -> T {
        self.stall
    }

    pub fn geom(&self) -> T {
        self.geom
    }

    pub fn mixer(&self) -> &[T] {
        &self.mixer
    }

    /// Expected total number of children `(1 - stall) / (1 - geom)`.
    pub fn expected_total(&self) -> T {
        (T::one() - self.stall) / (T::one() - self.geom)
    }

    /// Generating function `stall + (1-stall)(1-geom)u / (1 - geom u)`
    /// with `u = mixer . s`.
    pub fn gf(&self, s: &[T]) -> T {
        debug_assert_eq!(s.len(), self.mixer.len());
        let u = crate::linalg::dot(&self.mixer, s);
        let one = T::one();
        self.stall + (one - self.stall) * (one - self.geom) * u / (one - self.geom * u)
    }

    /// Complement `1 - gf(s)` computed from the survival fractions
    /// `u = 1 - s`: with `d = mixer . u` the closed form is
    /// `(1-stall) d / ((1-geom) + geom d)`, a ratio of nonnegative sums, so
    /// the result keeps relative accuracy however close `s` is to one.
    pub(crate) fn gf_complement(&self, u: &[T]) -> T {
        debug_assert_eq!(u.len(), self.mixer.len());
        let d = crate::linalg::dot(&self.mixer, u);
        let one = T::one();
        (one - self.stall) * d / ((one - self.geom) + self.geom * d)
    }

    /// Row of the mean matrix: `expected_total * mixer`.
    pub fn mean_row(&self) -> Vec<T> {
        let c = self.expected_total();
        self.mixer.iter().map(|&w| c * w).collect()
    }

    /// Second-factorial-moment matrix `E[z_k (z_l - delta_kl)]`, which for
    /// this family is `coeff * mixer_k * mixer_l` with
    /// `coeff = (1-stall) 2 geom / (1-geom)^2`.
    pub fn hessian(&self) -> Matrix<T> {
        let one = T::one();
        let coeff =
            (one - self.stall) * real::<T>(2.0) * self.geom / ((one - self.geom) * (one - self.geom));
        let p = self.mixer.len();
        let mut out = Matrix::zeros(p);
        for k in 0..p {
            for l in 0..p {
                out.set(k, l, coeff * self.mixer[k] * self.mixer[l]);
            }
        }
        out
    }

    /// Explicit finite-support law: the geometric total is truncated once
    /// the remaining tail mass drops below `tail_tol`, then the support is
    /// renormalized.
    /// Smallest total-count horizon whose ignored tail mass stays below
    /// `tail_tol`, with a guard against a combinatorial blowup of the
    /// enumerated support. Zero when the law is a point mass at zero.
    pub(crate) fn truncation_horizon(&self, tail_tol: f64) -> Result<usize> {
        let p = self.mixer.len();
        let alive = T::one() - self.stall;
        if !(alive > T::zero()) {
            return Ok(0);
        }
        // Smallest t_max with alive * geom^t_max < tail_tol.
        let tol = real::<T>(tail_tol);
        let t_max = ((tol / alive).ln() / self.geom.ln())
            .ceil()
            .to_usize()
            .ok_or_else(|| Error::Degenerate("truncation horizon does not fit in usize".into()))?
            .max(1);
        // Support size grows like t_max^p; refuse degenerate blowups.
        let rough_points: f64 =
            (1..=p).fold(1.0, |acc, k| acc * (t_max as f64 + k as f64) / k as f64);
        if rough_points > 2e6 {
            return Err(Error::Degenerate(format!(
                "truncated support would need about {rough_points:.0} points"
            )));
        }
        Ok(t_max)
    }

    pub fn truncated_law(&self, tail_tol: f64) -> Result<OffspringLaw<T>> {
        let p = self.mixer.len();
        let one = T::one();
        let alive = one - self.stall;
        let mut support: Vec<(Vec<u32>, T)> = vec![(vec![0; p], self.stall)];
        let t_max = self.truncation_horizon(tail_tol)?;
        if t_max > 0 {
            let mut z = vec![0u32; p];
            for t in 1..=t_max {
                let mass = alive
                    * (one - self.geom)
                    * self.geom.powi(t as i32 - 1);
                self.push_compositions(t as u32, 0, mass, &mut z, &mut support);
            }
        }
        OffspringLaw::new_renormalized(p, support)
    }

    /// Enumerates type compositions of `remaining` children over types
    /// `type_idx..`, carrying the accumulated probability `weight`
    /// (binomial coefficient times mixer powers so far).
    fn push_compositions(
        &self,
        remaining: u32,
        type_idx: usize,
        weight: T,
        z: &mut Vec<u32>,
        out: &mut Vec<(Vec<u32>, T)>,
    ) {
        let p = self.mixer.len();
        if type_idx == p - 1 {
            let w = self.mixer[type_idx];
            if remaining > 0 && w == T::zero() {
                return;
            }
            let prob = weight * w.powi(remaining as i32);
            if prob > T::zero() {
                z[type_idx] = remaining;
                out.push((z.clone(), prob));
                z[type_idx] = 0;
            }
            return;
        }
        let w = self.mixer[type_idx];
        // Split `remaining` between this type and the rest: the binomial
        // factor C(remaining, k) accumulates incrementally.
        let mut binom = T::one();
        for k in 0..=remaining {
            if k > 0 {
                binom = binom * T::from_u32(remaining - k + 1).unwrap() / T::from_u32(k).unwrap();
                if w == T::zero() {
                    break;
                }
            }
            let contrib = weight * binom * w.powi(k as i32);
            if contrib > T::zero() {
                z[type_idx] = k;
                self.push_compositions(remaining - k, type_idx + 1, contrib, z, out);
                z[type_idx] = 0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::l1;

    /// The single-type critical case: stall 1/2, geometric parameter 1/2.
    fn critical_geometric() -> FractionalLinear<f64> {
        FractionalLinear::new(0.5, 0.5, vec![1.0]).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(FractionalLinear::<f64>::new(-0.1, 0.5, vec![1.0]).is_err());
        assert!(FractionalLinear::<f64>::new(0.5, 1.0, vec![1.0]).is_err());
        assert!(FractionalLinear::<f64>::new(0.5, 0.0, vec![1.0]).is_err());
        assert!(FractionalLinear::<f64>::new(0.5, 0.5, vec![0.6, 0.6]).is_err());
        // stall = 1 is a valid (childless) law.
        assert!(FractionalLinear::<f64>::new(1.0, 0.5, vec![1.0]).is_ok());
    }

    #[test]
    fn critical_geometric_gf_is_reciprocal_affine() {
        // stall 1/2 and geometric parameter 1/2 give f(s) = 1/(2 - s).
        let fl = critical_geometric();
        for &s in &[0.0, 0.25, 0.5, 0.9, 1.0] {
            assert!((fl.gf(&[s]) - 1.0 / (2.0 - s)).abs() < 1e-15);
        }
        assert!((fl.mean_row()[0] - 1.0).abs() < 1e-15);
        assert!((fl.hessian().get(0, 0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn truncated_law_matches_the_series() {
        // 1/(2-s) expands into p_k = (1/2)^(k+1).
        let law = critical_geometric().truncated_law(1e-13).unwrap();
        for (z, prob) in law.support() {
            let expect = 0.5f64.powi(z[0] as i32 + 1);
            assert!(
                (prob - expect).abs() < 1e-12,
                "p_{} = {prob}, expected {expect}",
                z[0]
            );
        }
        assert!((law.mean()[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn stall_one_yields_the_childless_law() {
        let fl = FractionalLinear::<f64>::new(1.0, 0.5, vec![1.0]).unwrap();
        let law = fl.truncated_law(1e-13).unwrap();
        assert_eq!(law.support().len(), 1);
        assert_eq!(law.support()[0].0, vec![0]);
        assert!((fl.gf(&[0.3]) - 1.0).abs() < 1e-15);
        assert_eq!(l1(&fl.mean_row()), 0.0);
    }

    #[test]
    fn two_type_truncation_matches_closed_form_moments() {
        let fl = FractionalLinear::<f64>::new(0.3, 0.45, vec![0.7, 0.3]).unwrap();
        let law = fl.truncated_law(1e-13).unwrap();
        let mean = law.mean();
        let row = fl.mean_row();
        for (m, r) in mean.iter().zip(&row) {
            assert!((m - r).abs() < 1e-10, "truncated {m} vs closed form {r}");
        }
        let b_trunc = law.second_factorial();
        let b_exact = fl.hessian();
        for k in 0..2 {
            for l in 0..2 {
                assert!((b_trunc.get(k, l) - b_exact.get(k, l)).abs() < 1e-9);
            }
        }
        // Truncated pgf agrees with the closed form inside the cube.
        let s = [0.2, 0.8];
        assert!((law.pgf(&s) - fl.gf(&s)).abs() < 1e-12);
    }

    #[test]
    fn gf_is_one_at_the_all_ones_point() {
        let fl = FractionalLinear::<f64>::new(0.3, 0.45, vec![0.7, 0.3]).unwrap();
        assert!((fl.gf(&[1.0, 1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complement_agrees_with_subtraction_and_stays_accurate_near_one() {
        let fl = FractionalLinear::<f64>::new(0.3, 0.45, vec![0.7, 0.3]).unwrap();
        let s = [0.2, 0.8];
        let u = [0.8, 0.2];
        assert!((fl.gf_complement(&u) - (1.0 - fl.gf(&s))).abs() < 1e-15);
        // At u ~ 1e-14 direct subtraction loses most digits; the complement
        // form must match the first-order expansion (mean_row . u) to high
        // relative accuracy.
        let tiny = [1e-14, 3e-14];
        let linear = fl.mean_row()[0] * tiny[0] + fl.mean_row()[1] * tiny[1];
        let got = fl.gf_complement(&tiny);
        assert!(
            ((got - linear) / linear).abs() < 1e-10,
            "complement {got} vs linearization {linear}"
        );
    }
}

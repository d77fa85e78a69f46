//! Finitely supported offspring distributions.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::linalg::Matrix;
use crate::scalar::{prob_tol, Scalar};
use crate::{Error, Result};

/// Distribution of an offspring count vector `z` in `N^p`.
///
/// The support is an explicit list of `(z, prob)` pairs with distinct `z`,
/// nonnegative probabilities, and total mass one (within
/// [`prob_tol`]). Construction validates; a law that exists is usable by
/// every downstream consumer without further checks.
#[derive(Debug, Clone)]
pub struct OffspringLaw<T> {
    types: usize,
    support: Vec<(Vec<u32>, T)>,
    /// Cumulative probabilities, for inverse-CDF sampling.
    cum: Vec<T>,
}

impl<T: Scalar> OffspringLaw<T> {
    /// Validates and builds a law over `types`-dimensional count vectors.
    pub fn new(types: usize, support: Vec<(Vec<u32>, T)>) -> Result<Self> {
        if types == 0 {
            return Err(Error::InvalidLaw("number of types must be positive".into()));
        }
        if support.is_empty() {
            return Err(Error::InvalidLaw("support must be nonempty".into()));
        }
        let mut seen = HashSet::with_capacity(support.len());
        let mut total = T::zero();
        for (z, prob) in &support {
            if z.len() != types {
                return Err(Error::InvalidLaw(format!(
                    "support point {z:?} has {} coordinates, expected {types}",
                    z.len()
                )));
            }
            if !(*prob >= T::zero()) {
                return Err(Error::InvalidLaw(format!(
                    "support point {z:?} has negative probability {prob}"
                )));
            }
            if !seen.insert(z.clone()) {
                return Err(Error::InvalidLaw(format!("duplicate support point {z:?}")));
            }
            total += *prob;
        }
        if (total - T::one()).abs() > prob_tol::<T>() {
            return Err(Error::InvalidLaw(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let mut cum = Vec::with_capacity(support.len());
        let mut acc = T::zero();
        for (_, prob) in &support {
            acc += *prob;
            cum.push(acc);
        }
        Ok(Self { types, support, cum })
    }

    /// Divides out the total mass, then validates. For supports produced by
    /// truncating an infinite law.
    pub fn new_renormalized(types: usize, mut support: Vec<(Vec<u32>, T)>) -> Result<Self> {
        let total: T = support.iter().map(|(_, p)| *p).sum();
        if total <= T::zero() {
            return Err(Error::InvalidLaw("support carries no mass".into()));
        }
        for (_, p) in &mut support {
            *p /= total;
        }
        Self::new(types, support)
    }

    /// The law putting all mass on a single count vector.
    pub fn point_mass(types: usize, z: Vec<u32>) -> Result<Self> {
        Self::new(types, vec![(z, T::one())])
    }

    /// Number of types `p`.
    pub fn types(&self) -> usize {
        self.types
    }

    pub fn support(&self) -> &[(Vec<u32>, T)] {
        &self.support
    }

    /// Expected offspring counts `E[z_j]`, one entry per child type.
    pub fn mean(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.types];
        for (z, prob) in &self.support {
            for (o, &zj) in out.iter_mut().zip(z) {
                *o += *prob * T::from_u32(zj).unwrap();
            }
        }
        out
    }

    /// Second factorial moments `E[z_k (z_l - delta_kl)]` as a matrix over
    /// `(k, l)`; diagonal entries are `E[z_k (z_k - 1)]`.
    pub fn second_factorial(&self) -> Matrix<T> {
        let mut out = Matrix::zeros(self.types);
        for (z, prob) in &self.support {
            for k in 0..self.types {
                let zk = T::from_u32(z[k]).unwrap();
                for l in 0..self.types {
                    let zl = T::from_u32(z[l]).unwrap();
                    let factor = if k == l { zl - T::one() } else { zl };
                    let v = out.get(k, l) + *prob * zk * factor;
                    out.set(k, l, v);
                }
            }
        }
        out
    }

    /// Probability generating function `E[prod_j s_j^{z_j}]` for `s` in the
    /// unit cube.
    pub fn pgf(&self, s: &[T]) -> T {
        debug_assert_eq!(s.len(), self.types);
        let mut acc = T::zero();
        for (z, prob) in &self.support {
            let mut term = *prob;
            for (&sj, &zj) in s.iter().zip(z) {
                if zj > 0 {
                    term *= sj.powi(zj as i32);
                }
            }
            acc += term;
        }
        acc
    }

    /// Complement of the generating function, `1 - pgf(s)`, accumulated as
    /// a sum of nonnegative terms so the result keeps full relative accuracy
    /// even where the pgf is close to one. `u` must hold `1 - s` entrywise;
    /// passing it explicitly lets callers who track survival fractions
    /// directly avoid the cancellation in computing `1 - s` themselves.
    pub(crate) fn survival_weight(&self, s: &[T], u: &[T]) -> T {
        debug_assert_eq!(s.len(), self.types);
        debug_assert_eq!(u.len(), self.types);
        let mut total = T::zero();
        for (z, prob) in &self.support {
            // 1 - prod_j s_j^{z_j} telescopes into sum_j prefix_j * (1 - s_j^{z_j})
            // with prefix_j = prod_{l<j} s_l^{z_l}, and 1 - s^k factors as
            // u * (1 + s + .. + s^{k-1}); every piece is nonnegative.
            let mut prefix = T::one();
            let mut acc = T::zero();
            for (j, &zj) in z.iter().enumerate() {
                if zj == 0 {
                    continue;
                }
                let mut geom = T::one();
                let mut power = T::one();
                for _ in 1..zj {
                    power *= s[j];
                    geom += power;
                }
                acc += prefix * u[j] * geom;
                prefix *= power * s[j];
            }
            total += *prob * acc;
        }
        total
    }

    /// Draws the index of a support point.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: T = T::from_f64(rng.gen::<f64>()).unwrap();
        // Inverse CDF: first cumulative value above the uniform draw. Any
        // rounding shortfall in the final cumulative sum falls back to the
        // last point.
        match self.cum.iter().position(|&c| u < c) {
            Some(idx) => idx,
            None => self.support.len() - 1,
        }
    }

    /// Draws an offspring count vector.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &[u32] {
        let idx = self.sample_index(rng);
        &self.support[idx].0
    }

    /// Plain-text table of the law: header `z_1,..,z_p,prob`, one row per
    /// support point.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for j in 1..=self.types {
            let _ = write!(out, "z_{j},");
        }
        out.push_str("prob\n");
        for (z, prob) in &self.support {
            for zj in z {
                let _ = write!(out, "{zj},");
            }
            let _ = writeln!(out, "{prob}");
        }
        out
    }
}

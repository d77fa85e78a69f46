//! Multivariate probability generating functions of environment
//! components: evaluation, backward composition over an environment block,
//! quenched survival, and the telescoping decomposition of the reciprocal
//! survival functional.
//!
//! Throughout, `f` denotes the vector of per-type generating functions of
//! one component, `M` its mean matrix, and `A` a nonnegative weighting
//! matrix. All matrix functionals reduce to the column-sum vector of `A`,
//! which for `A = diag(x) R` is the row vector `x R`; the incremental
//! variants exploit that to stay overflow-safe at large depth.

use std::borrow::Borrow;

use crate::env::EnvironmentComponent;
use crate::linalg::{dot, l1, one_minus, Matrix};
use crate::scalar::{count, real, Scalar};
use crate::{Error, Result};

/// Checks that `s` is a point of the closed unit cube of dimension `p`
/// (tiny roundoff overshoot is tolerated).
fn check_cube<T: Scalar>(s: &[T], p: usize) -> Result<()> {
    if s.len() != p {
        return Err(Error::Domain(format!(
            "argument has dimension {}, expected {p}",
            s.len()
        )));
    }
    let slack = real::<T>(1e-9);
    for (j, &sj) in s.iter().enumerate() {
        if !(sj >= -slack && sj <= T::one() + slack) {
            return Err(Error::Domain(format!(
                "coordinate s_{} = {sj} lies outside the unit cube",
                j + 1
            )));
        }
    }
    Ok(())
}

/// Evaluates the component's generating functions at `s` in the unit cube.
pub fn evaluate<T: Scalar>(comp: &EnvironmentComponent<T>, s: &[T]) -> Result<Vec<T>> {
    check_cube(s, comp.types())?;
    let mut out = vec![T::zero(); comp.types()];
    comp.gf_values_into(s, &mut out);
    Ok(out)
}

/// Backward composition over an environment block: for a chain
/// `(f_0, .., f_{n-1})` returns `f_0(f_1(.. f_{n-1}(s)))`. The empty chain
/// is the identity.
pub fn compose<T, C>(chain: &[C], s: &[T]) -> Result<Vec<T>>
where
    T: Scalar,
    C: Borrow<EnvironmentComponent<T>>,
{
    if let Some(first) = chain.first() {
        check_cube(s, first.borrow().types())?;
    }
    let mut cur = s.to_vec();
    let mut next = vec![T::zero(); s.len()];
    for comp in chain.iter().rev() {
        comp.borrow().gf_values_into(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// Backward composition keeping every intermediate value: entry `k` of the
/// result is `f_k(f_{k+1}(..f_{n-1}(s)))`, and entry `n` is `s` itself.
pub fn compose_iterates<T, C>(chain: &[C], s: &[T]) -> Result<Vec<Vec<T>>>
where
    T: Scalar,
    C: Borrow<EnvironmentComponent<T>>,
{
    if let Some(first) = chain.first() {
        check_cube(s, first.borrow().types())?;
    }
    let n = chain.len();
    let mut out = vec![Vec::new(); n + 1];
    out[n] = s.to_vec();
    for k in (0..n).rev() {
        let mut next = vec![T::zero(); s.len()];
        chain[k].borrow().gf_values_into(&out[k + 1], &mut next);
        out[k] = next;
    }
    Ok(out)
}

/// Probability that the population started from one particle of
/// `parent_type` (0-based) is still alive after passing through the whole
/// chain: `1 - f_{0,n}(0)` at that coordinate.
///
/// The recursion runs in complement space (`u_k = 1 - f_{k,n}(0)`), where
/// every step is a sum of nonnegative terms, so the result keeps relative
/// accuracy at any depth even though the survival probability itself decays.
pub fn quenched_survival<T, C>(chain: &[C], parent_type: usize) -> Result<T>
where
    T: Scalar,
    C: Borrow<EnvironmentComponent<T>>,
{
    let p = chain
        .first()
        .map(|c| c.borrow().types())
        .ok_or_else(|| Error::Domain("survival needs a nonempty chain".into()))?;
    if parent_type >= p {
        return Err(Error::Domain(format!(
            "parent type {parent_type} out of range for {p} types"
        )));
    }
    let mut u = vec![T::one(); p];
    let mut scratch = vec![T::zero(); p];
    let mut next = vec![T::zero(); p];
    for comp in chain.iter().rev() {
        let comp = comp.borrow();
        if comp.types() != p {
            return Err(Error::Domain(
                "chain components disagree on the number of types".into(),
            ));
        }
        comp.extinction_complement_into(&u, &mut scratch, &mut next);
        std::mem::swap(&mut u, &mut next);
    }
    Ok(u[parent_type])
}

/// Second-order directional term: coordinate `i` is
/// `(1-s)^T B^(i) (1-s)` with `B^(i)` the second-factorial-moment matrix
/// of type `i`. Its L1 norm is bounded by `mu |1-s|^2`.
pub fn delta2<T: Scalar>(comp: &EnvironmentComponent<T>, s: &[T]) -> Result<Vec<T>> {
    check_cube(s, comp.types())?;
    let u = one_minus(s);
    Ok(comp
        .hessians()
        .iter()
        .map(|b| b.quadratic_form(&u))
        .collect())
}

/// Validates a weighting matrix and reduces it to its column sums.
fn weight_columns<T: Scalar>(a: &Matrix<T>, p: usize) -> Result<Vec<T>> {
    if a.dim() != p {
        return Err(Error::Domain(format!(
            "weight matrix has dimension {}, expected {p}",
            a.dim()
        )));
    }
    if !a.is_nonnegative() {
        return Err(Error::Domain("weight matrix must be nonnegative".into()));
    }
    let cols = a.column_sums();
    if l1(&cols) <= T::zero() {
        return Err(Error::Degenerate("weight matrix must be nonzero".into()));
    }
    Ok(cols)
}

/// Normalized section of the weighted generating function along the
/// segment from `s` to `1`:
/// `H(z) = |A f(s + z(1-s))| / |A|`, increasing from `H(0)` to `H(1) = 1`.
pub fn h_of_z<T: Scalar>(
    comp: &EnvironmentComponent<T>,
    a: &Matrix<T>,
    s: &[T],
    z: T,
) -> Result<T> {
    check_cube(s, comp.types())?;
    if !(z >= T::zero() && z <= T::one()) {
        return Err(Error::Domain(format!("z = {z} outside [0, 1]")));
    }
    let cols = weight_columns(a, comp.types())?;
    h_of_z_cols(comp, &cols, s, z)
}

pub(crate) fn h_of_z_cols<T: Scalar>(
    comp: &EnvironmentComponent<T>,
    cols: &[T],
    s: &[T],
    z: T,
) -> Result<T> {
    let point: Vec<T> = s.iter().map(|&sj| sj + z * (T::one() - sj)).collect();
    let mut f = vec![T::zero(); comp.types()];
    comp.gf_values_into(&point, &mut f);
    Ok(dot(cols, &f) / l1(cols))
}

/// One-sided derivatives of `H` at `z = 1`:
/// `H'(1) = |A M (1-s)| / |A|` and `H''(1) = |A Delta_2(s)| / |A|`.
pub fn h_end_derivatives<T: Scalar>(
    comp: &EnvironmentComponent<T>,
    a: &Matrix<T>,
    s: &[T],
) -> Result<(T, T)> {
    check_cube(s, comp.types())?;
    let cols = weight_columns(a, comp.types())?;
    let u = one_minus(s);
    let norm = l1(&cols);
    let slope = dot(&cols, &comp.mean().right_mul(&u)) / norm;
    let curvature = dot(&cols, &delta2(comp, s)?) / norm;
    Ok((slope, curvature))
}

/// Complement of the section, `1 - H(z)`, evaluated without cancellation:
/// the survival fractions of the section point `s + z(1-s)` are exactly
/// `(1-z)(1-s)` and feed the nonnegative-sum survival forms, so the result
/// keeps relative accuracy arbitrarily close to `z = 1`.
pub fn survival_section<T: Scalar>(
    comp: &EnvironmentComponent<T>,
    a: &Matrix<T>,
    s: &[T],
    z: T,
) -> Result<T> {
    check_cube(s, comp.types())?;
    if !(z >= T::zero() && z <= T::one()) {
        return Err(Error::Domain(format!("z = {z} outside [0, 1]")));
    }
    let cols = weight_columns(a, comp.types())?;
    survival_section_cols(comp, &cols, s, z)
}

pub(crate) fn survival_section_cols<T: Scalar>(
    comp: &EnvironmentComponent<T>,
    cols: &[T],
    s: &[T],
    z: T,
) -> Result<T> {
    let one = T::one();
    let point: Vec<T> = s.iter().map(|&sj| sj + z * (one - sj)).collect();
    let u: Vec<T> = s.iter().map(|&sj| (one - z) * (one - sj)).collect();
    let mut surv = vec![T::zero(); comp.types()];
    comp.survival_values_into(&point, &u, &mut surv);
    Ok(dot(cols, &surv) / l1(cols))
}

/// The error functional of the linearized reciprocal survival:
/// `psi(s) = |A| / |A(1 - f(s))| - |A| / |A M (1-s)|`.
///
/// Under entrywise comparability of `M` (ratio bound `b`) it satisfies
/// `0 <= psi <= b p^2 eta`.
pub fn psi<T: Scalar>(comp: &EnvironmentComponent<T>, a: &Matrix<T>, s: &[T]) -> Result<T> {
    check_cube(s, comp.types())?;
    let cols = weight_columns(a, comp.types())?;
    psi_cols(comp, &cols, s)
}

pub(crate) fn psi_cols<T: Scalar>(
    comp: &EnvironmentComponent<T>,
    cols: &[T],
    s: &[T],
) -> Result<T> {
    let p = comp.types();
    let u = one_minus(s);
    if l1(&u) <= T::zero() {
        return Err(Error::Domain("psi is undefined at s = 1".into()));
    }
    let norm = l1(cols);
    let mut surv = vec![T::zero(); p];
    comp.survival_values_into(s, &u, &mut surv);
    let alive = dot(cols, &surv);
    if alive <= T::zero() {
        return Err(Error::Degenerate(
            "f(s) = 1 under the weight vector at s < 1".into(),
        ));
    }
    let linear = dot(cols, &comp.mean().right_mul(&u));
    if linear <= T::zero() {
        return Err(Error::Degenerate(
            "A M (1-s) vanishes; mean matrix is degenerate under the weights".into(),
        ));
    }
    Ok(norm / alive - norm / linear)
}

/// One weighted error term of the telescoping decomposition.
#[derive(Debug, Clone)]
pub struct TelescopeTerm<T> {
    /// `psi` of environment `k`, weighted by the running walk position.
    pub psi: T,
    /// `exp(-S_k)` with `S_k = ln |x R_k|`.
    pub weight: T,
}

/// Exact decomposition of the reciprocal survival functional over a fixed
/// environment chain, with the second-moment upper bound when available.
#[derive(Debug, Clone)]
pub struct TelescopeReport<T> {
    /// `1 / (x, 1 - f_{0,n}(s))`.
    pub left: T,
    /// Leading walk term `1 / |A R_n (1-s)|`.
    pub leading: T,
    /// Weighted `psi` terms, one per environment.
    pub terms: Vec<TelescopeTerm<T>>,
    /// `leading + sum of terms`; equals `left` up to roundoff.
    pub right: T,
    /// `|left - right| / left`.
    pub residual: T,
    /// Entry-ratio bound `b` over the chain's mean matrices, when every
    /// entry is positive.
    pub ratio_bound: Option<T>,
    /// At `s = 0` and with `b` available: the closed-form upper bound
    /// `exp(-S_n) + b p^2 sum_k eta_k exp(-S_k)`.
    pub bound: Option<T>,
    /// `bound - left`; nonnegative up to roundoff when defined.
    pub bound_slack: Option<T>,
}

/// Decomposes `1/(x, 1 - f_{0,n}(s))` into the walk term plus weighted
/// `psi` errors, telescoping over the chain.
///
/// `x` is a nonzero nonnegative weight vector (the diagonal of `A`). Walk
/// weights are accumulated incrementally from cocycle increments of the
/// normalized direction, so depth is limited only by the chain itself.
pub fn telescope<T, C>(chain: &[C], x: &[T], s: &[T]) -> Result<TelescopeReport<T>>
where
    T: Scalar,
    C: Borrow<EnvironmentComponent<T>>,
{
    let n = chain.len();
    if n == 0 {
        return Err(Error::Domain("telescope needs a nonempty chain".into()));
    }
    let p = chain[0].borrow().types();
    if x.len() != p {
        return Err(Error::Domain(format!(
            "weight vector has dimension {}, expected {p}",
            x.len()
        )));
    }
    if x.iter().any(|&xi| xi < T::zero()) || l1(x) <= T::zero() {
        return Err(Error::Domain(
            "weight vector must be nonnegative and nonzero".into(),
        ));
    }
    check_cube(s, p)?;

    let iterates = compose_iterates(chain, s)?;
    let alive = dot(x, &one_minus(&iterates[0]));
    if alive <= T::zero() {
        return Err(Error::Degenerate(
            "certain extinction under this chain; reciprocal survival diverges".into(),
        ));
    }
    let left = alive.recip();

    // Normalized direction and log-norm of x R_k, advanced one environment
    // at a time.
    let norm0 = l1(x);
    let mut direction: Vec<T> = x.iter().map(|&xi| xi / norm0).collect();
    let mut log_norm = norm0.ln();
    let mut next = vec![T::zero(); p];

    let mut terms = Vec::with_capacity(n);
    let mut ratio_bound: Option<T> = chain[0].borrow().mean().entry_ratio_bound();
    let mut eta_weighted = T::zero();
    for (k, comp) in chain.iter().enumerate() {
        let comp = comp.borrow();
        let weight = (-log_norm).exp();
        let psi_k = psi_cols(comp, &direction, &iterates[k + 1])?;
        terms.push(TelescopeTerm {
            psi: psi_k,
            weight,
        });
        eta_weighted += comp.eta() * weight;
        ratio_bound = match (ratio_bound, comp.mean().entry_ratio_bound()) {
            (Some(b), Some(c)) => Some(b.max(c)),
            _ => None,
        };
        comp.mean().left_mul_into(&direction, &mut next);
        let step = l1(&next);
        if step <= T::zero() {
            return Err(Error::Degenerate(format!(
                "direction annihilated by the mean matrix of environment {k}"
            )));
        }
        for d in next.iter_mut() {
            *d /= step;
        }
        std::mem::swap(&mut direction, &mut next);
        log_norm += step.ln();
    }

    let end = dot(&direction, &one_minus(s));
    if end <= T::zero() {
        return Err(Error::Degenerate(
            "A R_n (1-s) vanishes; leading term undefined".into(),
        ));
    }
    let leading = (-log_norm).exp() / end;
    let right = leading + terms.iter().map(|t| t.psi * t.weight).sum::<T>();
    let residual = (left - right).abs() / left;

    // The closed-form bound applies to the survival case s = 0.
    let at_zero = s.iter().all(|&sj| sj == T::zero());
    let (bound, bound_slack) = match (at_zero, ratio_bound) {
        (true, Some(b)) => {
            let psq = count::<T>(p) * count::<T>(p);
            let bound = (-log_norm).exp() + b * psq * eta_weighted;
            (Some(bound), Some(bound - left))
        }
        _ => (None, None),
    };

    Ok(TelescopeReport {
        left,
        leading,
        terms,
        right,
        residual,
        ratio_bound,
        bound,
        bound_slack,
    })
}

//! Summary statistics shared by the estimators: means with standard
//! errors, batch-based error bars for variance estimates, weighted least
//! squares on a line, and self-normalized importance-sampling means.

use crate::scalar::{count, Scalar};
use crate::{Error, Result};

/// Sample mean and standard error of the mean.
///
/// Returns `(0, 0)` for an empty slice and `(x, 0)` for a single value.
pub fn mean_se<T: Scalar>(values: &[T]) -> (T, T) {
    let n = values.len();
    if n == 0 {
        return (T::zero(), T::zero());
    }
    let mean = values.iter().copied().sum::<T>() / count(n);
    if n == 1 {
        return (mean, T::zero());
    }
    let var = sample_variance(values, mean);
    (mean, (var / count(n)).sqrt())
}

/// Unbiased sample variance around a precomputed mean.
pub fn sample_variance<T: Scalar>(values: &[T], mean: T) -> T {
    let n = values.len();
    if n < 2 {
        return T::zero();
    }
    let ss = values
        .iter()
        .map(|&v| {
            let d = v - mean;
            d * d
        })
        .sum::<T>();
    ss / count(n - 1)
}

/// Batch-means error bar for a statistic of i.i.d. values.
///
/// Splits `values` into `batches` contiguous blocks, applies `stat` to each
/// block, and returns `(stat(values), se)` where `se` is the standard error
/// of the batch statistics around their mean. Used where the statistic
/// itself is nonlinear (variances, ratios) and no closed-form error exists.
pub fn batch_statistic<T: Scalar, F>(values: &[T], batches: usize, stat: F) -> Result<(T, T)>
where
    F: Fn(&[T]) -> T,
{
    let n = values.len();
    if batches < 2 || n < 2 * batches {
        return Err(Error::Insufficient(format!(
            "batch statistic needs at least 2 values per batch ({n} values, {batches} batches)"
        )));
    }
    let full = stat(values);
    let per = n / batches;
    let batch_vals: Vec<T> = (0..batches)
        .map(|b| stat(&values[b * per..(b + 1) * per]))
        .collect();
    let (bmean, _) = mean_se(&batch_vals);
    let bvar = sample_variance(&batch_vals, bmean);
    Ok((full, (bvar / count(batches)).sqrt()))
}

/// Weighted least-squares fit of `y = intercept + slope * x`.
#[derive(Debug, Clone)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Standard error of the slope assuming the weights are inverse
    /// variances of the `y` values.
    pub slope_se: T,
}

/// Fits a line by weighted least squares; `weights` should be inverse
/// variances. Needs at least two distinct `x` values.
pub fn weighted_line_fit<T: Scalar>(x: &[T], y: &[T], weights: &[T]) -> Result<LineFit<T>> {
    if x.len() != y.len() || x.len() != weights.len() {
        return Err(Error::Domain("line fit inputs must have equal length".into()));
    }
    if x.len() < 2 {
        return Err(Error::Insufficient("line fit needs at least two points".into()));
    }
    let mut sw = T::zero();
    let mut sx = T::zero();
    let mut sy = T::zero();
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(weights) {
        sw += wi;
        sx += wi * xi;
        sy += wi * yi;
        sxx += wi * xi * xi;
        sxy += wi * xi * yi;
    }
    let det = sw * sxx - sx * sx;
    if det <= T::zero() {
        return Err(Error::Degenerate(
            "line fit needs at least two distinct x values".into(),
        ));
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / sw;
    Ok(LineFit {
        slope,
        intercept,
        slope_se: (sw / det).sqrt(),
    })
}

/// Inverse-variance weighted mean of independent estimates.
///
/// `ses` are the standard errors of the individual values; returns the
/// combined mean and its standard error.
pub fn pooled_mean<T: Scalar>(values: &[T], ses: &[T]) -> Result<(T, T)> {
    if values.is_empty() || values.len() != ses.len() {
        return Err(Error::Domain("pooled mean needs matching nonempty inputs".into()));
    }
    let mut sw = T::zero();
    let mut swv = T::zero();
    for (&v, &se) in values.iter().zip(ses) {
        if se <= T::zero() {
            return Err(Error::Degenerate("pooled mean needs positive standard errors".into()));
        }
        let w = (se * se).recip();
        sw += w;
        swv += w * v;
    }
    Ok((swv / sw, sw.sqrt().recip()))
}

/// Self-normalized weighted mean `sum(w_i y_i) / sum(w_i)` with the usual
/// linearized error estimate, plus the effective sample size of the weights.
pub fn self_normalized_mean<T: Scalar>(weights: &[T], values: &[T]) -> Result<(T, T, T)> {
    if weights.is_empty() || weights.len() != values.len() {
        return Err(Error::Domain(
            "self-normalized mean needs matching nonempty inputs".into(),
        ));
    }
    let total = weights.iter().copied().sum::<T>();
    if total <= T::zero() {
        return Err(Error::Degenerate("weights must have positive total".into()));
    }
    let mean = super::linalg::dot(weights, values) / total;
    let mut var = T::zero();
    let mut wsq = T::zero();
    for (&w, &y) in weights.iter().zip(values) {
        let wn = w / total;
        let d = y - mean;
        var += wn * wn * d * d;
        wsq += wn * wn;
    }
    Ok((mean, var.sqrt(), wsq.recip()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se_of_known_sample() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // variance 5/3, se = sqrt(5/12)
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn batch_statistic_matches_full_sample_estimate() {
        let values: Vec<f64> = (0..1000).map(|i| (i % 7) as f64).collect();
        let var = |xs: &[f64]| {
            let (m, _) = mean_se(xs);
            sample_variance(xs, m)
        };
        let (full, se) = batch_statistic(&values, 10, var).unwrap();
        assert!(full > 0.0 && se > 0.0);
        assert!((full - var(&values)).abs() < 1e-12);
    }

    #[test]
    fn weighted_fit_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let w = [1.0; 4];
        let fit = weighted_line_fit(&x, &y, &w).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-14);
        assert!((fit.intercept - 3.0).abs() < 1e-14);
    }

    #[test]
    fn self_normalized_mean_with_equal_weights_is_plain_mean() {
        let (m, se, ess) = self_normalized_mean::<f64>(&[1.0, 1.0, 1.0, 1.0], &[2.0, 4.0, 6.0, 8.0]).unwrap();
        assert_eq!(m, 5.0);
        assert!(se > 0.0);
        assert!((ess - 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_fits_are_rejected() {
        assert!(weighted_line_fit(&[1.0, 1.0], &[2.0, 3.0], &[1.0, 1.0]).is_err());
        assert!(weighted_line_fit(&[1.0], &[2.0], &[1.0]).is_err());
    }
}

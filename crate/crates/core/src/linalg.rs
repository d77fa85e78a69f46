//! Small dense matrices and L1 vector helpers.
//!
//! The processes here involve `p x p` mean matrices with `p` rarely above
//! three, acting on row vectors from the nonnegative cone. Norms are always
//! entrywise L1, which for nonnegative data reduces to plain sums; the
//! helpers below exploit that throughout.

use crate::scalar::Scalar;
use crate::{Error, Result};

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    /// Builds a matrix from rows; every row must have the same length as
    /// the number of rows.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Domain("matrix must have at least one row".into()));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Domain(format!(
                    "row {i} has length {}, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    /// Zero matrix of dimension `dim`.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    /// Identity matrix of dimension `dim`.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
    }

    pub fn entries(&self) -> &[T] {
        &self.data
    }

    /// Entrywise L1 norm; equals the sum of entries for nonnegative data.
    pub fn l1_norm(&self) -> T {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.data[i * self.dim..(i + 1) * self.dim]
            .iter()
            .copied()
            .sum()
    }

    pub fn min_row_sum(&self) -> T {
        (0..self.dim)
            .map(|i| self.row_sum(i))
            .fold(T::infinity(), |a, b| a.min(b))
    }

    pub fn max_entry(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min_entry(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|v| *v >= T::zero())
    }

    /// Smallest `b` with all entry ratios in `[1/b, b]`, i.e. the ratio of
    /// the largest to the smallest entry. `None` if some entry is zero or
    /// negative, in which case no such `b` exists.
    pub fn entry_ratio_bound(&self) -> Option<T> {
        let min = self.min_entry();
        if min <= T::zero() {
            None
        } else {
            Some(self.max_entry() / min)
        }
    }

    /// Row vector times matrix: `x A`, with `out` overwritten.
    pub fn left_mul_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        out.fill(T::zero());
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            for (o, &m) in out.iter_mut().zip(row) {
                *o += xi * m;
            }
        }
    }

    /// Row vector times matrix: `x A`.
    pub fn left_mul(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        self.left_mul_into(x, &mut out);
        out
    }

    /// Matrix times column vector: `A u`.
    pub fn right_mul(&self, u: &[T]) -> Vec<T> {
        debug_assert_eq!(u.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                let row = &self.data[i * self.dim..(i + 1) * self.dim];
                row.iter().zip(u).map(|(&m, &uj)| m * uj).sum()
            })
            .collect()
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for k in 0..self.dim {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..self.dim {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Quadratic form `u^T self u`.
    pub fn quadratic_form(&self, u: &[T]) -> T {
        debug_assert_eq!(u.len(), self.dim);
        let mut acc = T::zero();
        for (i, &ui) in u.iter().enumerate() {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            let mut inner = T::zero();
            for (&m, &uj) in row.iter().zip(u) {
                inner += m * uj;
            }
            acc += ui * inner;
        }
        acc
    }

    /// Column sums as a row vector; for `A = diag(x) R` these equal `x R`,
    /// which is all the cone functionals `|A|`, `|Au|` depend on.
    pub fn column_sums(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for i in 0..self.dim {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            for (o, &m) in out.iter_mut().zip(row) {
                *o += m;
            }
        }
        out
    }

    /// Diagonal matrix with `x` on the diagonal.
    pub fn diag(x: &[T]) -> Self {
        let mut m = Self::zeros(x.len());
        for (i, &v) in x.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }
}

/// L1 norm of a vector.
#[inline]
pub fn l1<T: Scalar>(xs: &[T]) -> T {
    xs.iter().map(|v| v.abs()).sum()
}

/// Dot product.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Componentwise `1 - s`.
#[inline]
pub fn one_minus<T: Scalar>(s: &[T]) -> Vec<T> {
    s.iter().map(|&v| T::one() - v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Matrix<f64> {
        Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap()
    }

    #[test]
    fn from_rows_rejects_ragged_input() {
        let err = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn norms_and_sums() {
        let m = sample();
        assert_eq!(m.l1_norm(), 10.0);
        assert_eq!(m.row_sum(0), 3.0);
        assert_eq!(m.min_row_sum(), 3.0);
        assert_eq!(m.column_sums(), vec![4.0, 6.0]);
        assert_eq!(m.entry_ratio_bound(), Some(4.0));
        assert_eq!(Matrix::<f64>::identity(2).entry_ratio_bound(), None);
    }

    #[test]
    fn products_match_hand_computation() {
        let m = sample();
        assert_eq!(m.left_mul(&[1.0, 1.0]), vec![4.0, 6.0]);
        assert_eq!(m.right_mul(&[1.0, 1.0]), vec![3.0, 7.0]);
        let sq = m.matmul(&m);
        assert_eq!(sq.get(0, 0), 7.0);
        assert_eq!(sq.get(0, 1), 10.0);
        assert_eq!(sq.get(1, 0), 15.0);
        assert_eq!(sq.get(1, 1), 22.0);
        // (1,1) B (1,1) = sum of entries
        assert_eq!(m.quadratic_form(&[1.0, 1.0]), 10.0);
    }

    #[test]
    fn diag_column_sums_recover_the_vector() {
        let d = Matrix::diag(&[0.25, 0.75]);
        assert_eq!(d.column_sums(), vec![0.25, 0.75]);
        assert_eq!(d.l1_norm(), 1.0);
    }
}

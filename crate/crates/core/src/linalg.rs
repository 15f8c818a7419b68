//! Small dense matrices and an LU solver with partial pivoting.
//!
//! Chain sizes top out at 65 states, so a dense row-major layout is simpler
//! and fast enough for every solve in the crate.

use crate::error::{ModelError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

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
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.dim + col] = value;
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.dim)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![T::zero(); self.dim];
        for (i, &vi) in v.iter().enumerate() {
            if vi == T::zero() {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += vi * p;
            }
        }
        out
    }

    /// Solves `self · x = b`.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        Lu::factor(self.clone())?.solve(b)
    }
}

/// LU factorisation with partial pivoting, stored in place.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(mut a: DenseMatrix<T>) -> Result<Self> {
        let n = a.dim();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a
            .data
            .iter()
            .fold(T::zero(), |m, &x| m.max(x.abs()))
            .max(T::min_positive_value());
        let tiny = scale * T::epsilon() * T::from_count(n.max(1));

        for k in 0..n {
            let (pivot_row, pivot_abs) = (k..n)
                .map(|r| (r, a.get(r, k).abs()))
                .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot_abs > tiny) {
                return Err(ModelError::Solver(format!(
                    "matrix is numerically singular: pivot {:.3e} in column {k} of {n} (scale {:.3e})",
                    pivot_abs.as_f64(),
                    scale.as_f64()
                )));
            }
            if pivot_row != k {
                for c in 0..n {
                    let tmp = a.get(k, c);
                    a.set(k, c, a.get(pivot_row, c));
                    a.set(pivot_row, c, tmp);
                }
                perm.swap(k, pivot_row);
            }
            let pivot = a.get(k, k);
            for r in (k + 1)..n {
                let factor = a.get(r, k) / pivot;
                if factor == T::zero() {
                    continue;
                }
                a.set(r, k, factor);
                for c in (k + 1)..n {
                    let v = a.get(r, c) - factor * a.get(k, c);
                    a.set(r, c, v);
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.lu.dim();
        if b.len() != n {
            return Err(ModelError::Solver(format!(
                "right-hand side has length {}, expected {n}",
                b.len()
            )));
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s / self.lu.get(i, i);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Solver("solution contains non-finite entries".into()));
        }
        Ok(x)
    }
}

//! Dense symmetric matrices and Cholesky solves.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn from_rows(n: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = i * self.n + j;
        self.data[k] = self.data[k] + v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Entrywise `self += other`.
    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.n, other.n);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
    }

    /// Fills the upper triangle from the lower one.
    pub fn symmetrize_from_lower(&mut self) {
        for i in 0..self.n {
            for j in 0..i {
                self.data[j * self.n + i] = self.data[i * self.n + j];
            }
        }
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        self.data
            .par_chunks(self.n.max(1))
            .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// xᵀ A y.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        dot(x, &self.matvec(y))
    }

    pub fn cholesky(&self) -> Result<Cholesky<T>> {
        Cholesky::factor(self)
    }
}

pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).map(|(&a, &b)| a * b).sum()
}

/// Lower-triangular factor L with A = L Lᵀ.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        let n = a.n;
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            // column j below the diagonal depends only on rows < j
            let rest = &mut l[j * n..];
            let row_j_prefix: Vec<T> = (0..j).map(|k| rest[k]).collect();
            let mut d = a.get(j, j) - row_j_prefix.iter().map(|&v| v * v).sum::<T>();
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { row: j, pivot: d.to_f64().unwrap_or(f64::NAN) });
            }
            d = d.sqrt();
            rest[j] = d;
            let rows_below = &mut rest[n..];
            rows_below.par_chunks_mut(n).enumerate().for_each(|(off, row)| {
                let i = j + 1 + off;
                let s = a.get(i, j) - dot(&row[..j], &row_j_prefix);
                row[j] = s / d;
            });
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            y[i] = (y[i] - dot(row, &y[..i])) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            y[i] = y[i] / self.l[i * n + i];
            let yi = y[i];
            for k in 0..i {
                y[k] = y[k] - self.l[i * n + k] * yi;
            }
        }
        y
    }

    /// Product of the pivots, as a log.
    pub fn log_det(&self) -> T {
        (0..self.n).map(|i| self.l[i * self.n + i].ln()).sum::<T>() * (T::one() + T::one())
    }
}

/// Smallest eigenvalue of an SPD matrix by inverse iteration.
pub fn min_eigenvalue<T: Scalar>(a: &DenseMatrix<T>, chol: &Cholesky<T>, tol: T, max_iter: usize) -> T {
    let n = a.dim();
    if n == 0 {
        return T::zero();
    }
    // deterministic start with components in every direction
    let mut x: Vec<T> = (0..n).map(|i| T::one() + T::from_usize(i % 7).unwrap() / T::from_usize(10).unwrap()).collect();
    let mut lambda = T::infinity();
    for _ in 0..max_iter {
        let nrm = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v = *v / nrm);
        let y = chol.solve(&x);
        let ray = dot(&x, &x) / dot(&x, &y);
        x = y;
        if (ray - lambda).abs() <= tol * ray.abs() {
            lambda = ray;
            break;
        }
        lambda = ray;
    }
    let nrm = dot(&x, &x).sqrt();
    x.iter_mut().for_each(|v| *v = *v / nrm);
    a.bilinear(&x, &x).min(lambda)
}

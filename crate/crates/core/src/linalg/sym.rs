use std::ops::Index;

use crate::error::{Error, Result};
use crate::linalg::Dense;
use crate::scalar::Scalar;

/// Dense symmetric `d × d` matrix.
///
/// Construction symmetrizes its input as `(M + Mᵀ)/2`, so `m[i][j] == m[j][i]`
/// holds bit-for-bit for every value of this type. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMat<T> {
    /// Builds from row-major values, symmetrizing.
    pub fn new(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::BadDim("matrix dimension must be at least 1".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::DimMismatch(format!(
                "{dim}x{dim} matrix needs {} values, got {}",
                dim * dim,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: k / dim, col: k % dim });
        }
        let mut m = SymMat { dim, data };
        m.symmetrize();
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(i) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::DimMismatch(format!(
                "row {i} has {} entries, expected {dim}",
                rows[i].len()
            )));
        }
        Self::new(dim, rows.concat())
    }

    /// Builds from a generator over the upper triangle; `f(i, j)` is only
    /// called with `i <= j`.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = vec![T::zero(); dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        SymMat { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        SymMat { dim, data: vec![T::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![T::one(); dim])
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * dim + i] = v;
        }
        m
    }

    pub(crate) fn from_symmetric_unchecked(dim: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        SymMat { dim, data }
    }

    pub(crate) fn from_dense_symmetrized(d: &Dense<T>) -> Self {
        assert_eq!(d.rows(), d.cols());
        let mut m = SymMat { dim: d.rows(), data: d.as_slice().to_vec() };
        m.symmetrize();
        m
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        let half = T::of(0.5);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = (self.data[i * n + j] + self.data[j * n + i]) * half;
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn diag(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Dense<T> {
        Dense::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Largest absolute off-diagonal entry (zero for `d = 1`).
    pub fn max_abs_offdiag(&self) -> T {
        let n = self.dim;
        let mut best = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.max(self.get(i, j).abs());
            }
        }
        best
    }

    /// Elementwise map applied identically to `(i, j)` and `(j, i)`.
    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self::from_upper(self.dim, |i, j| f(self.get(i, j)))
    }

    /// Elementwise combination of two same-size matrices.
    pub fn zip_map(&self, other: &Self, mut f: impl FnMut(T, T) -> T) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(Self::from_upper(self.dim, |i, j| f(self.get(i, j), other.get(i, j))))
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.zip_map(other, |x, y| a * x + b * y)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |x, y| x - y)
    }

    pub fn scale(&self, a: T) -> Self {
        self.map(|x| a * x)
    }

    /// `self + s·I`.
    pub fn shift_diag(&self, s: T) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.data[i * self.dim + i] += s;
        }
        out
    }

    /// Copy with the diagonal replaced by ones.
    pub fn with_unit_diagonal(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.data[i * self.dim + i] = T::one();
        }
        out
    }

    pub fn frob_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// `‖self − other‖²_F`.
    pub fn frob_dist_sq(&self, other: &Self) -> Result<T> {
        self.check_same_dim(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(&a, &b)| (a - b) * (a - b)).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(k) => Err(Error::NonFinite { row: k / self.dim, col: k % self.dim }),
            None => Ok(()),
        }
    }

    pub(crate) fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch(format!(
                "{}x{} vs {}x{}",
                self.dim, self.dim, other.dim, other.dim
            )));
        }
        Ok(())
    }
}

impl<T: Scalar> Index<(usize, usize)> for SymMat<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.dim + j]
    }
}

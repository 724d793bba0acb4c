//! Dense complex matrices.

use std::ops::Index;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Immutable dense complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMat(DMatrix<Complex64>);

impl ComplexMat {
    /// Builds a matrix from row-major data.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[Complex64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        Ok(ComplexMat(m))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let m = DMatrix::from_fn(rows, cols, f);
        debug_assert!(m.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        ComplexMat(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMat(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        ComplexMat(DMatrix::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        ComplexMat(self.0.adjoint())
    }

    pub fn mul(&self, rhs: &ComplexMat) -> Self {
        assert_eq!(self.cols(), rhs.rows(), "dimension mismatch");
        ComplexMat(&self.0 * &rhs.0)
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols(), x.len(), "dimension mismatch");
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)] * x[j]).sum())
            .collect()
    }

    /// Adjoint-vector product, `self^† x`.
    pub fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.rows(), x.len(), "dimension mismatch");
        (0..self.cols())
            .map(|j| (0..self.rows()).map(|i| self.0[(i, j)].conj() * x[i]).sum())
            .collect()
    }

    /// ‖·‖_F².
    pub fn frobenius_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest modulus among off-diagonal entries.
    pub fn max_offdiag_abs(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                if i != j {
                    worst = worst.max(self.0[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMat) -> f64 {
        assert_eq!((self.rows(), self.cols()), (other.rows(), other.cols()));
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMat {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

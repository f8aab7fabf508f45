//! Dense row-major matrices and Gaussian elimination for the small systems
//! used by the generator oracle and the CLT covariance.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `x^T A` for a row vector `x`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut lu = self.clone();
        let mut x = b.to_vec();
        lu.eliminate(core::slice::from_mut(&mut x))?;
        Ok(x)
    }

    /// Inverse by elimination against the identity.
    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.dim;
        let mut lu = self.clone();
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        lu.eliminate(&mut cols)?;
        Ok(Matrix::from_fn(n, |i, j| cols[j][i]))
    }

    /// Reduces `self` to upper-triangular form applying the same row
    /// operations to every right-hand side, then back-substitutes in place.
    fn eliminate(&mut self, rhs: &mut [Vec<f64>]) -> Result<()> {
        let n = self.dim;
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Err(Error::Singular);
        }
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&a, &b| self[(a, col)].abs().total_cmp(&self[(b, col)].abs()))
                .unwrap_or(col);
            if self[(pivot, col)].abs() <= 1e-14 * scale {
                return Err(Error::Singular);
            }
            if pivot != col {
                for j in 0..n {
                    self.data.swap(pivot * n + j, col * n + j);
                }
                for r in rhs.iter_mut() {
                    r.swap(pivot, col);
                }
            }
            let p = self[(col, col)];
            for row in col + 1..n {
                let factor = self[(row, col)] / p;
                if factor == 0.0 {
                    continue;
                }
                for j in col..n {
                    let v = self[(col, j)];
                    self[(row, j)] -= factor * v;
                }
                for r in rhs.iter_mut() {
                    r[row] -= factor * r[col];
                }
            }
        }
        for r in rhs.iter_mut() {
            for row in (0..n).rev() {
                let mut acc = r[row];
                for j in row + 1..n {
                    acc -= self[(row, j)] * r[j];
                }
                r[row] = acc / self[(row, row)];
            }
        }
        Ok(())
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_inverts() {
        let a = Matrix::from_fn(3, |i, j| [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 4.0]][i][j]);
        let x = a.solve(&[5.0, 3.0, 7.0]).unwrap();
        for (v, e) in x.iter().zip(&[1.0, 2.0, 1.0]) {
            assert!((v - e).abs() < 1e-14);
        }
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).max_abs_diff(&Matrix::identity(3)) < 1e-14);
    }

    #[test]
    fn detects_singular() {
        let a = Matrix::from_fn(2, |i, j| [[1.0, 2.0], [2.0, 4.0]][i][j]);
        assert_eq!(a.solve(&[1.0, 1.0]), Err(Error::Singular));
        assert_eq!(Matrix::zeros(2).inverse(), Err(Error::Singular));
    }
}

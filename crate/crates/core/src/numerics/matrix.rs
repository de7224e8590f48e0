use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InconsistentDimension { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    ///
    /// # Panics
    /// If the rows are ragged.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self { rows: rows.len(), cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * c).collect() }
    }

    /// `(A − Aᵀ)/2`.
    pub fn antisymmetric_part(&self) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = 0.5 * (self[(i, j)] - self[(j, i)]);
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| if libm::fabs(*x) > m { libm::fabs(*x) } else { m })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Frobenius norm.
pub fn frobenius(a: &Matrix) -> f64 {
    libm::sqrt(a.data.iter().map(|x| x * x).sum())
}

/// Solves `A·y = b` by LU factorisation with partial pivoting.
///
/// A pivot below `1e-14·‖A‖_F` is reported as [`Error::SingularMatrix`].
pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows, cols: a.cols });
    }
    let n = a.rows;
    if b.len() != n {
        return Err(Error::InconsistentDimension { expected: n, got: b.len() });
    }
    let tiny = 1e-14 * frobenius(a);
    let mut m = a.clone();
    let mut y = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if libm::fabs(m[(r, col)]) > libm::fabs(m[(piv, col)]) {
                piv = r;
            }
        }
        let p = m[(piv, col)];
        if !(libm::fabs(p) > tiny) {
            return Err(Error::SingularMatrix);
        }
        if piv != col {
            for j in 0..n {
                m.data.swap(piv * n + j, col * n + j);
            }
            y.swap(piv, col);
        }
        for r in col + 1..n {
            let f = m[(r, col)] / p;
            if f == 0.0 {
                continue;
            }
            m[(r, col)] = 0.0;
            for j in col + 1..n {
                m[(r, j)] -= f * m[(col, j)];
            }
            y[r] -= f * y[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..n {
            s -= m[(i, j)] * y[j];
        }
        y[i] = s / m[(i, i)];
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius(&Matrix::zeros(3, 3)), 0.0);
        let r = Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]);
        assert!((frobenius(&r) - libm::sqrt(2.0)).abs() < 1e-15);
        assert!((frobenius(&Matrix::identity(3)) - libm::sqrt(3.0)).abs() < 1e-15);
    }

    #[test]
    fn solve_identity_and_diagonal() {
        assert_eq!(solve(&Matrix::identity(3), &[1.0, -2.0, 3.0]).unwrap(), [1.0, -2.0, 3.0]);
        let d = Matrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]);
        assert_eq!(solve(&d, &[2.0, 8.0]).unwrap(), [1.0, 2.0]);
    }

    #[test]
    fn solve_needs_pivoting() {
        let a = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(solve(&a, &[3.0, 4.0]).unwrap(), [4.0, 3.0]);
    }

    #[test]
    fn singular_is_reported() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert_eq!(solve(&a, &[1.0, 1.0]), Err(Error::SingularMatrix));
        assert_eq!(solve(&Matrix::zeros(2, 2), &[0.0, 0.0]), Err(Error::SingularMatrix));
    }

    #[test]
    fn non_square_rejected() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(solve(&a, &[0.0, 0.0]), Err(Error::NotSquare { .. })));
    }
}

//! Small dense linear algebra, forward-mode differentiation and eigenvalues.

mod dual;
mod eigen;
mod jacobian;
mod matrix;

pub use dual::{Dual, Scalar};
pub use eigen::{eigen, EigenSet};
pub use jacobian::{fd_jacobian, jacobian};
pub use matrix::{frobenius, solve, Matrix};

pub use num_complex::Complex64;

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

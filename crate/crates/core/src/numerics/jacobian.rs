use alloc::vec;

use super::dual::Dual;
use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::vectorfield::VectorField;

/// Exact Jacobian `J[i][j] = ∂f_i/∂x_j` by forward-mode differentiation,
/// one seeded pass per column.
pub fn jacobian(field: &VectorField, x: &[f64]) -> Result<Matrix> {
    let n = field.dim();
    if x.len() != n {
        return Err(Error::InconsistentDimension { expected: n, got: x.len() });
    }
    let mut input: alloc::vec::Vec<Dual> = x.iter().map(|&v| Dual::constant(v)).collect();
    let mut out = vec![Dual::default(); n];
    let mut jac = Matrix::zeros(n, n);
    for col in 0..n {
        input[col].eps = 1.0;
        field.eval_dual_into(&input, &mut out)?;
        input[col].eps = 0.0;
        for (row, d) in out.iter().enumerate() {
            if !d.eps.is_finite() {
                return Err(Error::NonFiniteDerivative { row, col });
            }
            jac[(row, col)] = d.eps;
        }
    }
    Ok(jac)
}

/// Central-difference Jacobian with step `h`; kept as an independent oracle.
pub fn fd_jacobian(field: &VectorField, x: &[f64], h: f64) -> Result<Matrix> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive"));
    }
    let n = field.dim();
    let mut jac = Matrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for col in 0..n {
        xp[col] = x[col] + h;
        field.eval_into(&xp, &mut fp)?;
        xp[col] = x[col] - h;
        field.eval_into(&xp, &mut fm)?;
        xp[col] = x[col];
        for row in 0..n {
            jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Scalar;
    use alloc::vec::Vec;

    fn quad() -> VectorField {
        VectorField::from_fn(2, |x: &[Dual]| vec![x[0] * x[0], x[0] * x[1]]).unwrap()
    }

    #[test]
    fn worked_example() {
        let j = jacobian(&quad(), &[2.0, 3.0]).unwrap();
        assert_eq!(j.to_rows(), [[4.0, 0.0], [3.0, 2.0]]);
    }

    #[test]
    fn identity_field() {
        let f = VectorField::from_fn(3, |x: &[Dual]| x.to_vec()).unwrap();
        assert_eq!(jacobian(&f, &[0.3, -1.0, 7.0]).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn finite_difference_oracle() {
        let j = fd_jacobian(&quad(), &[2.0, 3.0], 1e-6).unwrap();
        let want = [[4.0, 0.0], [3.0, 2.0]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j[(i, k)] - want[i][k]).abs() < 1e-8);
            }
        }
        let c = VectorField::from_fn(2, |_x: &[Dual]| vec![Dual::constant(1.0), Dual::constant(2.0)]).unwrap();
        assert_eq!(fd_jacobian(&c, &[1.0, 1.0], 1e-3).unwrap(), Matrix::zeros(2, 2));
    }

    #[test]
    fn linear_field_fd_is_exact() {
        let f = VectorField::from_fn(2, |x: &[Dual]| vec![x[0] * 2.0 - x[1] * 0.5, x[0] * 0.25 + x[1]]).unwrap();
        let j = fd_jacobian(&f, &[0.4, -0.1], 1e-3).unwrap();
        let want: Vec<f64> = vec![2.0, -0.5, 0.25, 1.0];
        for (a, b) in j.as_slice().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_derivative_reports_index() {
        let f = VectorField::from_fn(2, |x: &[Dual]| vec![x[0], x[1].sqrt()]).unwrap();
        assert_eq!(jacobian(&f, &[1.0, 0.0]), Err(Error::NonFiniteDerivative { row: 1, col: 1 }));
    }
}

//! Gradient-structure tests: Jacobian symmetry and curl.

use crate::bounds::Bounds;
use crate::error::Result;
use crate::exec::map_indexed;
use crate::numerics::{frobenius, jacobian, norm, Matrix};
use crate::sampling::{seeded_point, Purpose};
use crate::vectorfield::VectorField;

pub const SYMMETRY_RTOL: f64 = 1e-8;
pub const SYMMETRY_ATOL: f64 = 1e-10;
pub const CURL_ATOL: f64 = 1e-10;

/// Seeded uniform sample of a box.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSample {
    pub bounds: Bounds,
    pub n_samples: usize,
    pub seed: u64,
}

impl RegionSample {
    pub fn new(bounds: Bounds, n_samples: usize, seed: u64) -> Self {
        Self { bounds, n_samples, seed }
    }

    /// The `i`-th sample point; independent of `n_samples`.
    pub fn point(&self, i: usize) -> alloc::vec::Vec<f64> {
        seeded_point(&self.bounds, self.seed, Purpose::Region, i)
    }
}

fn assert_square(j: &Matrix) {
    assert!(j.is_square(), "expected a square matrix, got {}x{}", j.rows(), j.cols());
}

/// `‖(J − Jᵀ)/2‖_F`.
pub fn symmetry_error(j: &Matrix) -> f64 {
    assert_square(j);
    frobenius(&j.antisymmetric_part())
}

/// Symmetry error relative to `‖J‖_F`; zero for (numerically) zero `J`.
pub fn relative_symmetry_error(j: &Matrix) -> f64 {
    let scale = frobenius(j);
    if scale < 1e-14 {
        return 0.0;
    }
    symmetry_error(j) / scale
}

/// Entrywise check `|J_ij − J_ji| ≤ atol + rtol·max(|J_ij|, |J_ji|)`.
pub fn is_symmetric(j: &Matrix, rtol: f64, atol: f64) -> bool {
    assert_square(j);
    let n = j.rows();
    (0..n).all(|r| {
        (r + 1..n).all(|c| {
            let (a, b) = (j[(r, c)], j[(c, r)]);
            libm::fabs(a - b) <= atol + rtol * libm::fabs(a).max(libm::fabs(b))
        })
    })
}

/// Curl magnitude read off a Jacobian: scalar curl in 2D, `‖∇×F‖` in 3D,
/// antisymmetric Frobenius norm otherwise (zero in 1D).
pub fn curl_from_jacobian(j: &Matrix) -> f64 {
    assert_square(j);
    match j.rows() {
        0 | 1 => 0.0,
        2 => libm::fabs(j[(1, 0)] - j[(0, 1)]),
        3 => {
            let cx = j[(2, 1)] - j[(1, 2)];
            let cy = j[(0, 2)] - j[(2, 0)];
            let cz = j[(1, 0)] - j[(0, 1)];
            norm(&[cx, cy, cz])
        }
        _ => symmetry_error(j),
    }
}

pub fn curl_magnitude(field: &VectorField, x: &[f64]) -> Result<f64> {
    Ok(curl_from_jacobian(&jacobian(field, x)?))
}

pub fn is_curl_free_at(field: &VectorField, x: &[f64], atol: f64) -> Result<bool> {
    Ok(curl_magnitude(field, x)? <= atol)
}

/// True when the curl stays within `atol` at every sampled point.
pub fn is_curl_free_region(field: &VectorField, region: &RegionSample, atol: f64) -> Result<bool> {
    let curls = map_indexed(region.n_samples, |i| curl_magnitude(field, &region.point(i)));
    for c in curls {
        if c? > atol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `curl / max(‖F(x)‖, 1e-12)`.
pub fn curl_to_gradient_ratio(field: &VectorField, x: &[f64]) -> Result<f64> {
    let curl = curl_magnitude(field, x)?;
    let f = norm(&field.eval(x)?);
    Ok(curl / f.max(1e-12))
}

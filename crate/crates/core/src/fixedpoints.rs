//! Multi-start fixed-point search and eigenvalue classification.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_complex::Complex64;

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::numerics::{eigen, jacobian, norm, solve};
use crate::sampling::{seeded_point, Purpose};
use crate::vectorfield::VectorField;

pub const DEFAULT_HYPER_TOL: f64 = 1e-8;

const MAX_NEWTON_ITERS: usize = 200;
const MAX_HALVINGS: usize = 40;
const POLISH_STEPS: usize = 3;
/// Roots may sit this fraction of a span outside the bounds.
const BOUNDS_SLACK: f64 = 0.01;
/// Roots closer than this fraction of each span are merged.
const MERGE_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FixedPointType {
    StableNode,
    UnstableNode,
    Saddle,
    StableFocus,
    UnstableFocus,
    Center,
    NonHyperbolic,
}

impl FixedPointType {
    pub const ALL: [FixedPointType; 7] = [
        FixedPointType::StableNode,
        FixedPointType::UnstableNode,
        FixedPointType::Saddle,
        FixedPointType::StableFocus,
        FixedPointType::UnstableFocus,
        FixedPointType::Center,
        FixedPointType::NonHyperbolic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FixedPointType::StableNode => "STABLE_NODE",
            FixedPointType::UnstableNode => "UNSTABLE_NODE",
            FixedPointType::Saddle => "SADDLE",
            FixedPointType::StableFocus => "STABLE_FOCUS",
            FixedPointType::UnstableFocus => "UNSTABLE_FOCUS",
            FixedPointType::Center => "CENTER",
            FixedPointType::NonHyperbolic => "NON_HYPERBOLIC",
        }
    }

    /// Human-readable label, e.g. "Stable node".
    pub fn description(self) -> &'static str {
        match self {
            FixedPointType::StableNode => "Stable node",
            FixedPointType::UnstableNode => "Unstable node",
            FixedPointType::Saddle => "Saddle",
            FixedPointType::StableFocus => "Stable focus",
            FixedPointType::UnstableFocus => "Unstable focus",
            FixedPointType::Center => "Center",
            FixedPointType::NonHyperbolic => "Non-hyperbolic point",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn is_stable(self) -> bool {
        matches!(self, FixedPointType::StableNode | FixedPointType::StableFocus)
    }
}

impl fmt::Display for FixedPointType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointRecord {
    pub location: Vec<f64>,
    /// Jacobian eigenvalues, ordered by real part then imaginary part, descending.
    pub eigenvalues: Vec<Complex64>,
    pub kind: FixedPointType,
    /// `‖F(location)‖`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub n_starts: usize,
    pub tol: f64,
    pub seed: u64,
    pub hyper_tol: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { n_starts: 100, tol: 1e-8, seed: 0, hyper_tol: DEFAULT_HYPER_TOL }
    }
}

fn spectral_scale(eigs: &[Complex64]) -> f64 {
    eigs.iter().map(|z| libm::hypot(z.re, z.im)).fold(1.0, f64::max)
}

/// Type of a fixed point from its Jacobian spectrum. Real parts within
/// `hyper_tol·max(1, max|λ|)` of zero count as zero.
pub fn classify_eigenvalues(eigs: &[Complex64], hyper_tol: f64) -> FixedPointType {
    let cut = hyper_tol * spectral_scale(eigs);
    let zero_re = |z: &Complex64| libm::fabs(z.re) <= cut;
    let real = |z: &Complex64| libm::fabs(z.im) <= cut;

    if eigs.iter().any(zero_re) {
        if eigs.iter().all(|z| zero_re(z) && !real(z)) {
            return FixedPointType::Center;
        }
        return FixedPointType::NonHyperbolic;
    }
    let oscillating = eigs.iter().any(|z| !real(z));
    if eigs.iter().all(|z| z.re < 0.0) {
        if oscillating {
            FixedPointType::StableFocus
        } else {
            FixedPointType::StableNode
        }
    } else if eigs.iter().all(|z| z.re > 0.0) {
        if oscillating {
            FixedPointType::UnstableFocus
        } else {
            FixedPointType::UnstableNode
        }
    } else {
        FixedPointType::Saddle
    }
}

/// No eigenvalue on the imaginary axis.
pub fn is_hyperbolic(eigs: &[Complex64], hyper_tol: f64) -> bool {
    let cut = hyper_tol * spectral_scale(eigs);
    eigs.iter().all(|z| libm::fabs(z.re) > cut)
}

impl FixedPointRecord {
    pub fn is_hyperbolic(&self, hyper_tol: f64) -> bool {
        is_hyperbolic(&self.eigenvalues, hyper_tol)
    }
}

/// Linearises at `x` and classifies; `residual` records `‖F(x)‖`.
pub fn classify_at(field: &VectorField, x: &[f64], hyper_tol: f64) -> Result<FixedPointRecord> {
    let residual = norm(&field.eval(x)?);
    let spectrum = eigen(&jacobian(field, x)?)?;
    let kind = classify_eigenvalues(&spectrum.values, hyper_tol);
    Ok(FixedPointRecord { location: x.to_vec(), eigenvalues: spectrum.values, kind, residual })
}

/// Damped Newton from one start; `None` when the start fails.
fn newton(field: &VectorField, x0: &[f64], tol: f64) -> Option<(Vec<f64>, f64)> {
    let mut x = x0.to_vec();
    let mut f = field.eval(&x).ok()?;
    let mut r = norm(&f);

    let step = |x: &[f64], f: &[f64], r: f64| -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let j = jacobian(field, x).ok()?;
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let dx = solve(&j, &neg).ok()?;
        let mut alpha = 1.0;
        for _ in 0..=MAX_HALVINGS {
            let xn: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + alpha * d).collect();
            if let Ok(fnew) = field.eval(&xn) {
                let rn = norm(&fnew);
                if rn < r {
                    return Some((xn, fnew, rn));
                }
            }
            alpha *= 0.5;
        }
        None
    };

    let mut iters = 0;
    while r > tol {
        if iters == MAX_NEWTON_ITERS {
            return None;
        }
        let (xn, fnew, rn) = step(&x, &f, r)?;
        x = xn;
        f = fnew;
        r = rn;
        iters += 1;
    }
    for _ in 0..POLISH_STEPS {
        if r == 0.0 {
            break;
        }
        match step(&x, &f, r) {
            Some((xn, fnew, rn)) => {
                x = xn;
                f = fnew;
                r = rn;
            }
            None => break,
        }
    }
    Some((x, r))
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// Locates equilibria inside `bounds` by damped Newton from seeded uniform
/// starts, merges duplicates and classifies each root.
///
/// Output is sorted lexicographically by location and does not depend on
/// thread scheduling.
pub fn find_fixed_points(
    field: &VectorField,
    bounds: &Bounds,
    options: &FixedPointOptions,
) -> Result<Vec<FixedPointRecord>> {
    if bounds.dim() != field.dim() {
        return Err(Error::InconsistentDimension { expected: field.dim(), got: bounds.dim() });
    }
    if options.n_starts == 0 {
        return Err(Error::InvalidArgument("n_starts must be at least 1"));
    }
    let roots = map_indexed(options.n_starts, |i| {
        let start = seeded_point(bounds, options.seed, Purpose::NewtonStart, i);
        newton(field, &start, options.tol)
    });

    let mut kept: Vec<(Vec<f64>, f64)> = Vec::new();
    for (x, r) in roots.into_iter().flatten() {
        if !bounds.contains_expanded(&x, BOUNDS_SLACK) {
            continue;
        }
        let close = |y: &[f64]| {
            (0..bounds.dim()).all(|i| libm::fabs(x[i] - y[i]) <= MERGE_FRACTION * bounds.span(i))
        };
        match kept.iter_mut().find(|(y, _)| close(y)) {
            Some(entry) => {
                if r < entry.1 {
                    *entry = (x, r);
                }
            }
            None => kept.push((x, r)),
        }
    }
    kept.sort_by(|a, b| lexicographic(&a.0, &b.0));
    kept.iter().map(|(x, _)| classify_at(field, x, options.hyper_tol)).collect()
}

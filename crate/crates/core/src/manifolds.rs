//! One-dimensional stable and unstable manifold branches of saddles,
//! homoclinic detection and a polyline transversality test.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::fixedpoints::{FixedPointRecord, FixedPointType, DEFAULT_HYPER_TOL};
use crate::numerics::{distance, dot, eigen, jacobian, norm};
use crate::odeint::{drive, Control, IntegrationSettings, TerminalReason, BOUNDS_MARGIN};
use crate::vectorfield::VectorField;

/// Tangent angles below this (radians, 5°) count as tangency.
pub const ANGLE_THRESHOLD: f64 = 0.0873;
/// Longest time a branch or homoclinic probe is followed.
pub const TRACE_HORIZON: f64 = 200.0;
/// Points each integration step is split into for arc-length bookkeeping.
const SUBDIVISIONS: usize = 8;
/// Branches slower than this have settled on an equilibrium.
const STALL_SPEED: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchKind {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldBranch {
    pub saddle: FixedPointRecord,
    pub kind: BranchKind,
    /// Unit direction of the seeding perturbation.
    pub eigvec: Vec<f64>,
    /// `+1` or `−1`.
    pub sign: i8,
    /// Starts at `location + sign·δ·eigvec`; consecutive points are
    /// `extent / n_points` apart in arc length.
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldOptions {
    pub n_points: usize,
    /// Arc length traced along each branch.
    pub extent: f64,
    /// Tracing stops once a branch leaves these bounds grown by [`BOUNDS_MARGIN`].
    pub bounds: Option<Bounds>,
    pub integration: IntegrationSettings,
    pub hyper_tol: f64,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        Self {
            n_points: 100,
            extent: 1.0,
            bounds: None,
            integration: IntegrationSettings::default(),
            hyper_tol: DEFAULT_HYPER_TOL,
        }
    }
}

/// Seeding offset `δ = 1e-5·max(1, ‖location‖)`.
pub fn seed_offset(location: &[f64]) -> f64 {
    1e-5 * norm(location).max(1.0)
}

/// Unit real directions for eigenvalues on one side of the imaginary axis,
/// strongest first. A complex pair contributes the real part of one eigenvector.
fn directions(field: &VectorField, saddle: &FixedPointRecord, kind: BranchKind, hyper_tol: f64) -> Result<Vec<Vec<f64>>> {
    if saddle.kind != FixedPointType::Saddle {
        return Err(Error::NotASaddle("fixed point is not a saddle"));
    }
    let spectrum = eigen(&jacobian(field, &saddle.location)?)?;
    let scale = spectrum.values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let cut = hyper_tol * scale;
    let mut picked: Vec<(f64, &Vec<Complex64>)> = spectrum
        .values
        .iter()
        .zip(&spectrum.vectors)
        .filter(|(z, _)| match kind {
            BranchKind::Unstable => z.re > cut,
            BranchKind::Stable => z.re < -cut,
        })
        .filter(|(z, _)| z.im >= -cut)
        .map(|(z, v)| (libm::fabs(z.re), v))
        .collect();
    if picked.is_empty() {
        return Err(Error::NotASaddle(match kind {
            BranchKind::Unstable => "no unstable direction",
            BranchKind::Stable => "no stable direction",
        }));
    }
    picked.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(picked
        .into_iter()
        .map(|(_, v)| {
            let re: Vec<f64> = v.iter().map(|c| c.re).collect();
            let n = norm(&re);
            re.into_iter().map(|c| c / n).collect()
        })
        .collect())
}

/// Follows `field` from `start`, emitting points every `extent/n_points` of arc length.
fn trace(field: &VectorField, start: &[f64], options: &ManifoldOptions) -> Result<Vec<Vec<f64>>> {
    let ds = options.extent / options.n_points as f64;
    let mut points = Vec::with_capacity(options.n_points + 1);
    points.push(start.to_vec());
    let mut last = start.to_vec();
    let mut arc = 0.0;
    let settings = options.integration.with_t_end(TRACE_HORIZON);
    let rhs = |x: &[f64], out: &mut [f64]| field.eval_into(x, out);
    let outcome = drive(rhs, start, &settings, |step| {
        for j in 1..=SUBDIVISIONS {
            let q = if j == SUBDIVISIONS {
                step.y1.to_vec()
            } else {
                step.interpolate(step.t0 + step.h() * j as f64 / SUBDIVISIONS as f64)
            };
            let seg = distance(&last, &q);
            while points.len() <= options.n_points && arc + seg >= points.len() as f64 * ds {
                let frac = if seg > 0.0 { (points.len() as f64 * ds - arc) / seg } else { 0.0 };
                points.push(last.iter().zip(&q).map(|(a, b)| a + frac * (b - a)).collect());
            }
            arc += seg;
            last = q;
            if points.len() > options.n_points {
                return Ok(Control::Stop(TerminalReason::Event));
            }
        }
        if let Some(b) = &options.bounds {
            if !b.contains_expanded(step.y1, BOUNDS_MARGIN) {
                return Ok(Control::Stop(TerminalReason::LeftBounds));
            }
        }
        let mut f = alloc::vec![0.0; step.y1.len()];
        field.eval_into(step.y1, &mut f)?;
        if norm(&f) < STALL_SPEED {
            return Ok(Control::Stop(TerminalReason::Event));
        }
        Ok(Control::Continue)
    });
    match outcome {
        Ok((_, y, _)) => {
            if points.len() <= options.n_points && points.last().is_some_and(|p| *p != y) {
                points.push(y);
            }
        }
        // A branch that blows up keeps the part traced so far.
        Err(Error::NonFinite { .. }) | Err(Error::StepSizeUnderflow { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(points)
}

fn branches(
    field: &VectorField,
    saddle: &FixedPointRecord,
    options: &ManifoldOptions,
    kind: BranchKind,
) -> Result<Vec<ManifoldBranch>> {
    if saddle.location.len() != field.dim() {
        return Err(Error::InconsistentDimension { expected: field.dim(), got: saddle.location.len() });
    }
    if options.n_points == 0 || !(options.extent > 0.0) {
        return Err(Error::InvalidArgument("n_points and extent must be positive"));
    }
    let dirs = directions(field, saddle, kind, options.hyper_tol)?;
    let flow = match kind {
        BranchKind::Unstable => field.clone(),
        BranchKind::Stable => field.negated(),
    };
    let delta = seed_offset(&saddle.location);
    let traced = map_indexed(2 * dirs.len(), |k| {
        let v = &dirs[k / 2];
        let sign: i8 = if k % 2 == 0 { 1 } else { -1 };
        let start: Vec<f64> =
            saddle.location.iter().zip(v).map(|(x, e)| x + f64::from(sign) * delta * e).collect();
        trace(&flow, &start, options).map(|points| ManifoldBranch {
            saddle: saddle.clone(),
            kind,
            eigvec: v.clone(),
            sign,
            points,
        })
    });
    traced.into_iter().collect()
}

/// Two branches (signs `+`, `−`) per unstable eigendirection, traced forward.
pub fn unstable_manifold(
    field: &VectorField,
    saddle: &FixedPointRecord,
    options: &ManifoldOptions,
) -> Result<Vec<ManifoldBranch>> {
    branches(field, saddle, options, BranchKind::Unstable)
}

/// Two branches per stable eigendirection, traced along `−F`.
pub fn stable_manifold(
    field: &VectorField,
    saddle: &FixedPointRecord,
    options: &ManifoldOptions,
) -> Result<Vec<ManifoldBranch>> {
    branches(field, saddle, options, BranchKind::Stable)
}

/// Whether an unstable branch leaves the `2·tol` ball around the saddle and
/// later re-enters the `tol` ball, within [`TRACE_HORIZON`].
pub fn detect_homoclinic(field: &VectorField, saddle: &FixedPointRecord, tol: f64, bounds: Option<&Bounds>) -> bool {
    let Ok(dirs) = directions(field, saddle, BranchKind::Unstable, DEFAULT_HYPER_TOL) else {
        return false;
    };
    let loc = &saddle.location;
    let delta = seed_offset(loc);
    let settings = IntegrationSettings::default().with_t_end(TRACE_HORIZON);
    let probes = map_indexed(2 * dirs.len(), |k| {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let start: Vec<f64> = loc.iter().zip(&dirs[k / 2]).map(|(x, e)| x + sign * delta * e).collect();
        let mut left = false;
        let mut hit = false;
        let rhs = |x: &[f64], out: &mut [f64]| field.eval_into(x, out);
        let _ = drive(rhs, &start, &settings, |step| {
            for j in 1..=SUBDIVISIONS {
                let q = step.interpolate(step.t0 + step.h() * j as f64 / SUBDIVISIONS as f64);
                let d = distance(&q, loc);
                if !left && d > 2.0 * tol {
                    left = true;
                } else if left && d < tol {
                    hit = true;
                    return Ok(Control::Stop(TerminalReason::Event));
                }
            }
            if bounds.is_some_and(|b| !b.contains_expanded(step.y1, BOUNDS_MARGIN)) {
                return Ok(Control::Stop(TerminalReason::LeftBounds));
            }
            Ok(Control::Continue)
        });
        hit
    });
    probes.into_iter().any(|h| h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transversality {
    Transverse,
    Tangency,
    NoIntersections,
    NotChecked,
}

impl Transversality {
    pub fn as_str(self) -> &'static str {
        match self {
            Transversality::Transverse => "transverse",
            Transversality::Tangency => "tangency",
            Transversality::NoIntersections => "no_intersections",
            Transversality::NotChecked => "not_checked",
        }
    }
}

impl fmt::Display for Transversality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransversalityVerdict {
    /// (unstable branch, stable branch) pairs compared.
    pub checked_pairs: usize,
    /// Smallest tangent angle over intersecting pairs.
    pub min_angle: Option<f64>,
    pub verdict: Transversality,
    pub angle_threshold: f64,
}

fn tangent(points: &[Vec<f64>], i: usize) -> Vec<f64> {
    let a = &points[i.saturating_sub(1)];
    let b = &points[(i + 1).min(points.len() - 1)];
    a.iter().zip(b).map(|(x, y)| y - x).collect()
}

/// Angle in `[0, π/2]` between two lines.
fn line_angle(u: &[f64], v: &[f64]) -> f64 {
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return core::f64::consts::FRAC_PI_2;
    }
    libm::acos((libm::fabs(dot(u, v)) / (nu * nv)).min(1.0))
}

/// Closest pair of kept points, as (distance, index in a, index in b).
fn closest_pair(a: &[Vec<f64>], keep_a: &[bool], b: &[Vec<f64>], keep_b: &[bool]) -> Option<(f64, usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for (i, p) in a.iter().enumerate().filter(|(i, _)| keep_a[*i]) {
        for (j, q) in b.iter().enumerate().filter(|(j, _)| keep_b[*j]) {
            let d = distance(p, q);
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, i, j));
            }
        }
    }
    best
}

/// Compares every unstable branch with every stable branch (same saddle
/// included). Branches are traced over the bounds diameter with 200 points;
/// points within `2·tol·diameter` of any listed saddle are ignored. Pairs
/// closer than `tol·diameter` intersect, and intersect tangentially when their
/// local tangents differ by less than [`ANGLE_THRESHOLD`].
///
/// Only planar systems are checked; higher dimensions with saddles give
/// [`Transversality::NotChecked`].
pub fn check_transversality(
    field: &VectorField,
    saddles: &[FixedPointRecord],
    bounds: &Bounds,
    tol: f64,
) -> TransversalityVerdict {
    let mut verdict = TransversalityVerdict {
        checked_pairs: 0,
        min_angle: None,
        verdict: Transversality::NoIntersections,
        angle_threshold: ANGLE_THRESHOLD,
    };
    if saddles.is_empty() {
        return verdict;
    }
    if field.dim() > 2 {
        verdict.verdict = Transversality::NotChecked;
        return verdict;
    }
    let diameter = bounds.diameter();
    let options = ManifoldOptions { n_points: 200, extent: diameter, bounds: Some(bounds.clone()), ..Default::default() };
    let mut unstable = Vec::new();
    let mut stable = Vec::new();
    for s in saddles {
        match (unstable_manifold(field, s, &options), stable_manifold(field, s, &options)) {
            (Ok(u), Ok(st)) => {
                unstable.extend(u);
                stable.extend(st);
            }
            _ => {
                verdict.verdict = Transversality::NotChecked;
                return verdict;
            }
        }
    }
    let exclusion = 2.0 * tol * diameter;
    let keep = |b: &ManifoldBranch| -> Vec<bool> {
        b.points.iter().map(|p| saddles.iter().all(|s| distance(p, &s.location) > exclusion)).collect()
    };
    let keep_u: Vec<Vec<bool>> = unstable.iter().map(keep).collect();
    let keep_s: Vec<Vec<bool>> = stable.iter().map(keep).collect();

    let mut intersections = 0usize;
    for (u, ku) in unstable.iter().zip(&keep_u) {
        for (s, ks) in stable.iter().zip(&keep_s) {
            verdict.checked_pairs += 1;
            let Some((d, i, j)) = closest_pair(&u.points, ku, &s.points, ks) else { continue };
            if d > tol * diameter {
                continue;
            }
            intersections += 1;
            let angle = line_angle(&tangent(&u.points, i), &tangent(&s.points, j));
            verdict.min_angle = Some(verdict.min_angle.map_or(angle, |m: f64| m.min(angle)));
        }
    }
    verdict.verdict = match verdict.min_angle {
        Some(a) if a < ANGLE_THRESHOLD => Transversality::Tangency,
        Some(_) => Transversality::Transverse,
        None => Transversality::NoIntersections,
    };
    debug_assert!(intersections > 0 || verdict.min_angle.is_none());
    verdict
}

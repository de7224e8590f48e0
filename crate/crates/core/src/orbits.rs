//! Periodic orbit search by recurrence on a flow-normal section, with
//! Floquet stability from the monodromy matrix.

use alloc::vec::Vec;
use core::fmt;
use core::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Deadline};
use crate::numerics::{distance, eigen, norm};
use crate::odeint::{
    detect_crossings, integrate, monodromy, sample_uniform, IntegrationSettings, Section, TerminalReason,
};
use crate::sampling::{seeded_point, Purpose};
use crate::vectorfield::VectorField;

/// Samples stored per orbit.
pub const ORBIT_SAMPLES: usize = 256;
/// A crossing this close (times the bounds diameter) to its section point is a recurrence.
pub const RECURRENCE_FRACTION: f64 = 1e-4;
/// Closure required of a validated orbit, relative to the bounds diameter.
pub const CLOSURE_FRACTION: f64 = 1e-5;
/// Orbits whose polylines are mutually this close (relative) are duplicates.
pub const DEDUP_FRACTION: f64 = 1e-3;
/// Transients ending this close (relative) to a known equilibrium are skipped,
/// and orbits smaller than this are rejected as equilibria in disguise.
pub const EQUILIBRIUM_FRACTION: f64 = 1e-3;
/// Largest admissible distance from the trivial multiplier to 1.
pub const TRIVIAL_MULTIPLIER_TOL: f64 = 1e-2;
/// Moduli within this of 1 are neither contracting nor expanding.
pub const FLOQUET_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FloquetStability {
    Stable,
    Unstable,
    NonHyperbolic,
}

impl FloquetStability {
    pub fn as_str(self) -> &'static str {
        match self {
            FloquetStability::Stable => "stable",
            FloquetStability::Unstable => "unstable",
            FloquetStability::NonHyperbolic => "non_hyperbolic",
        }
    }
}

impl fmt::Display for FloquetStability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn trivial_index(multipliers: &[Complex64]) -> Option<usize> {
    let one = Complex64::new(1.0, 0.0);
    let (i, d) = multipliers
        .iter()
        .enumerate()
        .map(|(i, m)| (i, (m - one).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    (d <= TRIVIAL_MULTIPLIER_TOL).then_some(i)
}

/// Stability from Floquet multipliers after removing the one closest to 1.
pub fn floquet_stability(multipliers: &[Complex64]) -> Result<FloquetStability> {
    let skip = trivial_index(multipliers).ok_or(Error::InvalidOrbit)?;
    let moduli = multipliers.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, m)| m.norm());
    let mut all_inside = true;
    for m in moduli {
        if m > 1.0 + FLOQUET_TOL {
            return Ok(FloquetStability::Unstable);
        }
        all_inside &= m < 1.0 - FLOQUET_TOL;
    }
    Ok(if all_inside { FloquetStability::Stable } else { FloquetStability::NonHyperbolic })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    /// `ORBIT_SAMPLES` states at equal time steps over one period, starting on the section.
    pub points: Vec<Vec<f64>>,
    pub period: f64,
    /// Eigenvalues of the monodromy matrix.
    pub multipliers: Vec<Complex64>,
    pub is_stable: bool,
    /// `‖x(0) − x(period)‖` from the validation run.
    pub closure: f64,
}

impl OrbitRecord {
    pub fn stability(&self) -> Result<FloquetStability> {
        floquet_stability(&self.multipliers)
    }

    /// Distance from `x` to the closed polyline through `points`.
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        polyline_distance(&self.points, x)
    }
}

fn segment_distance(a: &[f64], b: &[f64], x: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut t = 0.0;
    for i in 0..a.len() {
        let d = b[i] - a[i];
        ab2 += d * d;
        t += (x[i] - a[i]) * d;
    }
    let t = if ab2 > 0.0 { (t / ab2).clamp(0.0, 1.0) } else { 0.0 };
    let mut acc = 0.0;
    for i in 0..a.len() {
        let p = a[i] + t * (b[i] - a[i]) - x[i];
        acc += p * p;
    }
    libm::sqrt(acc)
}

pub(crate) fn polyline_distance(points: &[Vec<f64>], x: &[f64]) -> f64 {
    match points.len() {
        0 => f64::INFINITY,
        1 => distance(&points[0], x),
        n => (0..n)
            .map(|i| segment_distance(&points[i], &points[(i + 1) % n], x))
            .fold(f64::INFINITY, f64::min),
    }
}

fn same_orbit(a: &OrbitRecord, b: &OrbitRecord, radius: f64) -> bool {
    a.points.iter().all(|p| polyline_distance(&b.points, p) <= radius)
        && b.points.iter().all(|p| polyline_distance(&a.points, p) <= radius)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitOptions {
    pub n_trajectories: usize,
    pub max_period: f64,
    pub seed: u64,
    /// Wall-clock budget in seconds; `None` for unlimited.
    pub timeout: Option<f64>,
    /// Equilibria already located; transients that settle on them are skipped.
    pub known_fixed_points: Vec<Vec<f64>>,
    pub integration: IntegrationSettings,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self {
            n_trajectories: 50,
            max_period: 100.0,
            seed: 0,
            timeout: None,
            known_fixed_points: Vec::new(),
            integration: IntegrationSettings::default(),
        }
    }
}

/// First same-direction return to the section through `x` within `radius`.
fn first_return(
    field: &VectorField,
    x: &[f64],
    horizon: f64,
    radius: f64,
    bounds: &Bounds,
    settings: &IntegrationSettings,
    near_time: Option<f64>,
) -> Result<Option<(f64, Vec<f64>)>> {
    let normal = field.eval(x)?;
    if !(norm(&normal) > 0.0) {
        return Ok(None);
    }
    let section = Section { point: x.to_vec(), normal };
    let events =
        detect_crossings(field, x, &section, &settings.with_t_end(horizon), usize::MAX, Some(bounds))?;
    let mut hits = events.into_iter().filter(|e| e.direction > 0 && distance(&e.state, x) <= radius);
    Ok(match near_time {
        None => hits.next().map(|e| (e.t, e.state)),
        Some(t0) => hits
            .min_by(|a, b| libm::fabs(a.t - t0).total_cmp(&libm::fabs(b.t - t0)))
            .map(|e| (e.t, e.state)),
    })
}

fn search_one(
    field: &VectorField,
    bounds: &Bounds,
    options: &OrbitOptions,
    index: usize,
) -> Result<Option<OrbitRecord>> {
    let diameter = bounds.diameter();
    let settings = &options.integration;
    let start = seeded_point(bounds, options.seed, Purpose::OrbitSeed, index);

    let transient = integrate(field, &start, &settings.with_t_end(options.max_period / 2.0), Some(bounds))?;
    if transient.terminal_reason != TerminalReason::ReachedTEnd {
        return Ok(None);
    }
    let x_end = transient.last_state().to_vec();
    let settled = options
        .known_fixed_points
        .iter()
        .any(|p| distance(p, &x_end) <= EQUILIBRIUM_FRACTION * diameter);
    if settled {
        return Ok(None);
    }

    let radius = RECURRENCE_FRACTION * diameter;
    let Some((t_candidate, x1)) =
        first_return(field, &x_end, options.max_period, radius, bounds, settings, None)?
    else {
        return Ok(None);
    };
    let horizon = (1.5 * t_candidate).min(options.max_period);
    let Some((period, _)) = first_return(field, &x1, horizon, radius, bounds, settings, Some(t_candidate))?
    else {
        return Ok(None);
    };
    if !(period > 0.0 && period <= options.max_period) {
        return Ok(None);
    }

    let tight = settings.tightened(0.1).with_t_end(period);
    let closing = integrate(field, &x1, &tight, None)?;
    if closing.terminal_reason != TerminalReason::ReachedTEnd {
        return Ok(None);
    }
    let closure = distance(closing.last_state(), &x1);
    if closure > CLOSURE_FRACTION * diameter {
        return Ok(None);
    }
    let points = sample_uniform(field, &x1, &tight, ORBIT_SAMPLES)?;
    let extent = points.iter().map(|p| distance(p, &x1)).fold(0.0, f64::max);
    if extent < EQUILIBRIUM_FRACTION * diameter {
        return Ok(None);
    }

    let multipliers = eigen(&monodromy(field, &x1, period, &tight)?)?.values;
    let stability = match floquet_stability(&multipliers) {
        Ok(s) => s,
        Err(_) => return Ok(None),
    };
    Ok(Some(OrbitRecord {
        points,
        period,
        multipliers,
        is_stable: stability == FloquetStability::Stable,
        closure,
    }))
}

fn candidates(
    field: &VectorField,
    bounds: &Bounds,
    options: &OrbitOptions,
    stop_on_first: bool,
) -> Result<Vec<Option<OrbitRecord>>> {
    if bounds.dim() != field.dim() {
        return Err(Error::InconsistentDimension { expected: field.dim(), got: bounds.dim() });
    }
    if !(options.max_period > 0.0 && options.max_period.is_finite()) {
        return Err(Error::InvalidArgument("max_period must be positive and finite"));
    }
    let deadline = Deadline::after(options.timeout);
    let found = AtomicBool::new(false);
    Ok(map_indexed(options.n_trajectories, |i| {
        if deadline.expired() || (stop_on_first && found.load(Ordering::Relaxed)) {
            return None;
        }
        let orbit = search_one(field, bounds, options, i).ok().flatten();
        if orbit.is_some() {
            found.store(true, Ordering::Relaxed);
        }
        orbit
    }))
}

/// Searches for closed orbits from `n_trajectories` seeded starts.
///
/// Candidates are merged in trajectory order; duplicates keep the record
/// with the smaller closure. A failed trajectory is skipped and an expired
/// timeout returns the orbits found so far.
pub fn find_periodic_orbits(
    field: &VectorField,
    bounds: &Bounds,
    options: &OrbitOptions,
) -> Result<Vec<OrbitRecord>> {
    let radius = DEDUP_FRACTION * bounds.diameter();
    let mut orbits: Vec<OrbitRecord> = Vec::new();
    for orbit in candidates(field, bounds, options, false)?.into_iter().flatten() {
        match orbits.iter_mut().find(|o| same_orbit(o, &orbit, radius)) {
            Some(existing) => {
                if orbit.closure < existing.closure {
                    *existing = orbit;
                }
            }
            None => orbits.push(orbit),
        }
    }
    Ok(orbits)
}

/// Whether the search finds any orbit; stops launching trajectories after the first.
pub fn has_periodic_orbits(field: &VectorField, bounds: &Bounds, options: &OrbitOptions) -> Result<bool> {
    Ok(candidates(field, bounds, options, true)?.iter().any(Option::is_some))
}

//! The classification pipeline: sampled Jacobian statistics, invariant sets,
//! trajectory fates and manifold transversality, reduced to a [`SystemClass`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::fixedpoints::{find_fixed_points, FixedPointOptions, FixedPointRecord, FixedPointType};
use crate::manifolds::{check_transversality, Transversality, TransversalityVerdict};
use crate::numerics::{distance, jacobian, norm};
use crate::odeint::{integrate, IntegrationSettings, TerminalReason, BOUNDS_MARGIN};
use crate::orbits::{find_periodic_orbits, FloquetStability, OrbitOptions, OrbitRecord};
use crate::sampling::{seeded_point, Purpose};
use crate::structure::{curl_from_jacobian, relative_symmetry_error};
use crate::vectorfield::VectorField;

/// Trajectories followed by the fate analysis.
pub const FATE_TRAJECTORIES: usize = 20;
/// Minimum fate integration time.
pub const FATE_MIN_TIME: f64 = 50.0;
/// Unsettled fate trajectories are continued for at most this many equal chunks.
pub const FATE_CHUNKS: usize = 4;
/// Fate trajectories may wander this many spans outside the bounds before
/// being stopped; only the endpoint decides escape.
pub const FATE_ESCAPE_SPANS: f64 = 10.0;
/// Relative distance at which a fate endpoint has reached a fixed point.
pub const FATE_FIXED_POINT_FRACTION: f64 = 1e-4;
/// Relative distance at which a fate endpoint has reached an orbit.
pub const FATE_ORBIT_FRACTION: f64 = 1e-2;
/// Speed below which an endpoint away from every listed fixed point is still
/// treated as an equilibrium.
pub const FATE_REST_SPEED: f64 = 1e-8;
/// Relative tolerance passed to the transversality test.
pub const TRANSVERSALITY_TOL: f64 = 0.01;
/// Points where `‖F‖` falls below this are left out of the curl ratio mean.
const RATIO_MIN_SPEED: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SystemClass {
    Gradient,
    GradientLike,
    MorseSmale,
    StructurallyStable,
    General,
}

impl SystemClass {
    pub const ALL: [SystemClass; 5] = [
        SystemClass::Gradient,
        SystemClass::GradientLike,
        SystemClass::MorseSmale,
        SystemClass::StructurallyStable,
        SystemClass::General,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemClass::Gradient => "GRADIENT",
            SystemClass::GradientLike => "GRADIENT_LIKE",
            SystemClass::MorseSmale => "MORSE_SMALE",
            SystemClass::StructurallyStable => "STRUCTURALLY_STABLE",
            SystemClass::General => "GENERAL",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn is_gradient(self) -> bool {
        self == SystemClass::Gradient
    }

    pub fn is_gradient_like(self) -> bool {
        self <= SystemClass::GradientLike
    }

    pub fn is_morse_smale(self) -> bool {
        self <= SystemClass::MorseSmale
    }

    pub fn allows_periodic_orbits(self) -> bool {
        !self.is_gradient_like()
    }
}

impl fmt::Display for SystemClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub gradient_sym: f64,
    pub gradient_curl: f64,
    pub gradient_like_sym: f64,
    pub hyper_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { gradient_sym: 1e-8, gradient_curl: 1e-8, gradient_like_sym: 0.1, hyper_tol: 1e-8 }
    }
}

impl Thresholds {
    fn validate(&self) -> Result<()> {
        let all = [self.gradient_sym, self.gradient_curl, self.gradient_like_sym, self.hyper_tol];
        if !all.iter().all(|t| *t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument("thresholds must be positive and finite"));
        }
        if self.gradient_sym >= self.gradient_like_sym {
            return Err(Error::InvalidArgument("gradient_sym must be below gradient_like_sym"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifySettings {
    pub n_samples: usize,
    pub n_starts: usize,
    pub check_manifolds: bool,
    /// Seconds allowed for the orbit search; `None` for unlimited.
    pub orbit_timeout: Option<f64>,
    pub seed: u64,
    pub thresholds: Thresholds,
    pub n_trajectories: usize,
    pub max_period: f64,
    pub integration: IntegrationSettings,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        Self {
            n_samples: 100,
            n_starts: 100,
            check_manifolds: true,
            orbit_timeout: Some(10.0),
            seed: 0,
            thresholds: Thresholds::default(),
            n_trajectories: 50,
            max_period: 100.0,
            integration: IntegrationSettings::default(),
        }
    }
}

impl ClassifySettings {
    /// Reduced budget used by [`quick_classify`].
    pub fn quick() -> Self {
        Self { n_samples: 20, n_starts: 25, check_manifolds: false, orbit_timeout: Some(2.0), ..Self::default() }
    }
}

/// A value in the report's free-form details map.
#[derive(Debug, Clone, PartialEq)]
pub enum Detail {
    Count(u64),
    Real(f64),
    Flag(bool),
    Text(String),
    List(Vec<String>),
}

impl fmt::Display for Detail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Detail::Count(n) => write!(f, "{n}"),
            Detail::Real(x) => write!(f, "{x:e}"),
            Detail::Flag(b) => write!(f, "{b}"),
            Detail::Text(s) => f.write_str(s),
            Detail::List(items) => f.write_str(&items.join("; ")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FateCounts {
    pub to_fixed_point: usize,
    pub to_orbit: usize,
    pub escaped: usize,
    pub wandering: usize,
}

impl FateCounts {
    pub fn total(&self) -> usize {
        self.to_fixed_point + self.to_orbit + self.escaped + self.wandering
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub system_class: SystemClass,
    pub fixed_points: Vec<FixedPointRecord>,
    pub periodic_orbits: Vec<OrbitRecord>,
    /// Mean relative Jacobian symmetry error over the sample.
    pub jacobian_symmetry: f64,
    /// Mean curl-to-gradient ratio over sample points with non-negligible `‖F‖`.
    pub curl_gradient_ratio: f64,
    /// `None` when transversality could not be assessed.
    pub has_transverse_manifolds: Option<bool>,
    pub confidence: f64,
    pub fates: FateCounts,
    pub details: BTreeMap<String, Detail>,
}

impl ClassificationReport {
    pub fn is_gradient(&self) -> bool {
        self.system_class.is_gradient()
    }

    pub fn is_gradient_like(&self) -> bool {
        self.system_class.is_gradient_like()
    }

    pub fn is_morse_smale(&self) -> bool {
        self.system_class.is_morse_smale()
    }

    pub fn allows_periodic_orbits(&self) -> bool {
        self.system_class.allows_periodic_orbits()
    }

    pub fn saddle_count(&self) -> usize {
        self.fixed_points.iter().filter(|p| p.kind == FixedPointType::Saddle).count()
    }

    pub fn warnings(&self) -> &[String] {
        match self.details.get("warnings") {
            Some(Detail::List(w)) => w,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Landscape {
    pub can_represent: bool,
    pub landscape_type: &'static str,
    pub description: &'static str,
}

/// How far a potential-landscape picture applies to a class.
pub fn landscape_interpretation(class: SystemClass) -> Landscape {
    const LOCAL: &str = "Local potentials around attractors; limit cycles as valleys";
    let (can_represent, landscape_type, description) = match class {
        SystemClass::Gradient => (true, "potential", "True potential landscape; elevation = −log(probability)"),
        SystemClass::GradientLike => (true, "quasi-potential", "Quasi-potential exists; landscape approximation valid"),
        SystemClass::MorseSmale | SystemClass::StructurallyStable => (true, "local", LOCAL),
        SystemClass::General => (false, "none", "Landscape metaphor breaks down; curl dynamics dominate"),
    };
    Landscape { can_represent, landscape_type, description }
}

struct SampleStats {
    mean_symmetry: f64,
    mean_ratio: f64,
    max_curl: f64,
    used: usize,
    ratio_used: usize,
    failed: usize,
}

fn sample_statistics(field: &VectorField, bounds: &Bounds, n: usize, seed: u64) -> SampleStats {
    let samples = map_indexed(n, |i| -> Result<(f64, f64, Option<f64>)> {
        let x = seeded_point(bounds, seed, Purpose::Region, i);
        let j = jacobian(field, &x)?;
        let speed = norm(&field.eval(&x)?);
        let curl = curl_from_jacobian(&j);
        let ratio = (speed >= RATIO_MIN_SPEED).then(|| curl / speed);
        Ok((relative_symmetry_error(&j), curl, ratio))
    });
    let mut stats =
        SampleStats { mean_symmetry: 0.0, mean_ratio: 0.0, max_curl: 0.0, used: 0, ratio_used: 0, failed: 0 };
    for s in samples {
        match s {
            Ok((sym, curl, ratio)) => {
                stats.used += 1;
                stats.mean_symmetry += sym;
                stats.max_curl = stats.max_curl.max(curl);
                if let Some(r) = ratio {
                    stats.ratio_used += 1;
                    stats.mean_ratio += r;
                }
            }
            Err(_) => stats.failed += 1,
        }
    }
    stats.mean_symmetry /= stats.used.max(1) as f64;
    stats.mean_ratio /= stats.ratio_used.max(1) as f64;
    stats
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Fate {
    FixedPoint,
    UnlistedRest,
    Orbit,
    Escaped,
    Wandering,
}

fn one_fate(
    field: &VectorField,
    bounds: &Bounds,
    fixed_points: &[FixedPointRecord],
    orbits: &[OrbitRecord],
    start: Vec<f64>,
    chunk: f64,
    settings: &IntegrationSettings,
) -> Result<Fate> {
    let diameter = bounds.diameter();
    let far = bounds.expanded(FATE_ESCAPE_SPANS);
    let mut x = start;
    for _ in 0..FATE_CHUNKS {
        let traj = integrate(field, &x, &settings.with_t_end(chunk), Some(&far))?;
        x = traj.last_state().to_vec();
        match traj.terminal_reason {
            TerminalReason::LeftBounds => return Ok(Fate::Escaped),
            TerminalReason::ReachedTEnd => {}
            _ => return Err(Error::InvalidArgument("fate integration hit the step limit")),
        }
        if !bounds.contains_expanded(&x, BOUNDS_MARGIN) {
            return Ok(Fate::Escaped);
        }
        if fixed_points.iter().any(|p| distance(&p.location, &x) <= FATE_FIXED_POINT_FRACTION * diameter) {
            return Ok(Fate::FixedPoint);
        }
        if orbits.iter().any(|o| o.distance_to(&x) <= FATE_ORBIT_FRACTION * diameter) {
            return Ok(Fate::Orbit);
        }
    }
    if norm(&field.eval(&x)?) < FATE_REST_SPEED {
        return Ok(Fate::UnlistedRest);
    }
    Ok(Fate::Wandering)
}

/// Where seeded trajectories end up after `max(50, 10·longest period)` time
/// units, continued in equal chunks while unsettled. Failed integrations are
/// returned as the second element.
pub fn trajectory_fates(
    field: &VectorField,
    bounds: &Bounds,
    fixed_points: &[FixedPointRecord],
    orbits: &[OrbitRecord],
    seed: u64,
    settings: &IntegrationSettings,
) -> (FateCounts, Vec<String>) {
    let longest = orbits.iter().map(|o| o.period).fold(0.0, f64::max);
    let time = FATE_MIN_TIME.max(10.0 * longest);
    let fates = map_indexed(FATE_TRAJECTORIES, |i| {
        let start = seeded_point(bounds, seed, Purpose::FateSeed, i);
        one_fate(field, bounds, fixed_points, orbits, start, time, settings)
    });
    let mut counts = FateCounts::default();
    let mut notes = Vec::new();
    for (i, fate) in fates.into_iter().enumerate() {
        match fate {
            Ok(Fate::FixedPoint) => counts.to_fixed_point += 1,
            Ok(Fate::UnlistedRest) => {
                counts.to_fixed_point += 1;
                notes.push(format!("fate trajectory {i} came to rest away from every located fixed point"));
            }
            Ok(Fate::Orbit) => counts.to_orbit += 1,
            Ok(Fate::Escaped) => counts.escaped += 1,
            Ok(Fate::Wandering) => counts.wandering += 1,
            Err(e) => notes.push(format!("fate trajectory {i} failed: {e}")),
        }
    }
    (counts, notes)
}

/// `clamp(|log10(s/τ)|, 0.5, 1)`: how decisively a statistic clears its threshold.
fn margin(statistic: f64, threshold: f64) -> f64 {
    let s = statistic.max(f64::MIN_POSITIVE);
    libm::fabs(libm::log10(s / threshold)).clamp(0.5, 1.0)
}

/// Runs the full pipeline on `bounds`.
pub fn classify_system(
    field: &VectorField,
    bounds: &Bounds,
    settings: &ClassifySettings,
) -> Result<ClassificationReport> {
    if bounds.dim() != field.dim() {
        return Err(Error::InconsistentDimension { expected: field.dim(), got: bounds.dim() });
    }
    settings.thresholds.validate()?;
    if settings.n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1"));
    }
    let th = &settings.thresholds;
    let mut warnings: Vec<String> = Vec::new();
    let mut stage_failed = false;

    let stats = sample_statistics(field, bounds, settings.n_samples, settings.seed);
    if stats.failed > 0 {
        warnings.push(format!("{} of {} sample points could not be evaluated", stats.failed, settings.n_samples));
    }
    if stats.used == 0 {
        stage_failed = true;
    }

    let fp_options = FixedPointOptions {
        n_starts: settings.n_starts,
        tol: 1e-8,
        seed: settings.seed,
        hyper_tol: th.hyper_tol,
    };
    let fixed_points = find_fixed_points(field, bounds, &fp_options).unwrap_or_else(|e| {
        warnings.push(format!("fixed-point search failed: {e}"));
        stage_failed = true;
        Vec::new()
    });

    let orbit_options = OrbitOptions {
        n_trajectories: settings.n_trajectories,
        max_period: settings.max_period,
        seed: settings.seed,
        timeout: settings.orbit_timeout,
        known_fixed_points: fixed_points.iter().map(|p| p.location.clone()).collect(),
        integration: settings.integration,
    };
    let periodic_orbits = find_periodic_orbits(field, bounds, &orbit_options).unwrap_or_else(|e| {
        warnings.push(format!("orbit search failed: {e}"));
        stage_failed = true;
        Vec::new()
    });

    let (fates, fate_notes) =
        trajectory_fates(field, bounds, &fixed_points, &periodic_orbits, settings.seed, &settings.integration);
    warnings.extend(fate_notes);

    let saddles: Vec<FixedPointRecord> =
        fixed_points.iter().filter(|p| p.kind == FixedPointType::Saddle).cloned().collect();
    let transversality: Option<TransversalityVerdict> = if saddles.is_empty() {
        None
    } else if settings.check_manifolds {
        Some(check_transversality(field, &saddles, bounds, TRANSVERSALITY_TOL))
    } else {
        None
    };
    let has_transverse_manifolds = if saddles.is_empty() {
        Some(true)
    } else {
        match transversality.as_ref().map(|v| v.verdict) {
            Some(Transversality::Transverse | Transversality::NoIntersections) => Some(true),
            Some(Transversality::Tangency) => Some(false),
            Some(Transversality::NotChecked) | None => None,
        }
    };

    let degenerate_point = fixed_points
        .iter()
        .any(|p| matches!(p.kind, FixedPointType::NonHyperbolic | FixedPointType::Center));
    let degenerate_orbit = periodic_orbits
        .iter()
        .any(|o| !matches!(o.stability(), Ok(FloquetStability::Stable | FloquetStability::Unstable)));
    let no_orbits = periodic_orbits.is_empty();

    let (system_class, rule) = if degenerate_point || degenerate_orbit || fates.wandering > 0 {
        (SystemClass::General, "a")
    } else if no_orbits && stats.mean_symmetry < th.gradient_sym && stats.max_curl <= th.gradient_curl {
        (SystemClass::Gradient, "b")
    } else if no_orbits && stats.mean_symmetry < th.gradient_like_sym {
        (SystemClass::GradientLike, "c")
    } else {
        match has_transverse_manifolds {
            Some(true) => (SystemClass::MorseSmale, "d"),
            None => (SystemClass::StructurallyStable, "e"),
            Some(false) => (SystemClass::General, "f"),
        }
    };

    let mut confidence = 1.0;
    if rule != "a" {
        confidence *= margin(stats.mean_symmetry, th.gradient_sym);
        confidence *= margin(stats.mean_symmetry, th.gradient_like_sym);
        confidence *= margin(stats.max_curl, th.gradient_curl);
    }
    if has_transverse_manifolds.is_none() {
        confidence *= 0.9;
    }
    for _ in &warnings {
        confidence *= 0.8;
    }
    confidence = confidence.max(0.05);
    if stage_failed {
        confidence = confidence.min(0.5);
    }

    let mut details = BTreeMap::new();
    let mut put = |k: &str, v: Detail| {
        details.insert(k.to_string(), v);
    };
    put("rule", Detail::Text(rule.to_string()));
    put("seed", Detail::Count(settings.seed));
    put("n_samples", Detail::Count(settings.n_samples as u64));
    put("samples_used", Detail::Count(stats.used as u64));
    put("ratio_samples_used", Detail::Count(stats.ratio_used as u64));
    put("n_starts", Detail::Count(settings.n_starts as u64));
    put("n_trajectories", Detail::Count(settings.n_trajectories as u64));
    put("max_period", Detail::Real(settings.max_period));
    if let Some(t) = settings.orbit_timeout {
        put("orbit_timeout", Detail::Real(t));
    }
    put("check_manifolds", Detail::Flag(settings.check_manifolds));
    put("max_curl", Detail::Real(stats.max_curl));
    put("threshold.gradient_sym", Detail::Real(th.gradient_sym));
    put("threshold.gradient_curl", Detail::Real(th.gradient_curl));
    put("threshold.gradient_like_sym", Detail::Real(th.gradient_like_sym));
    put("threshold.hyper_tol", Detail::Real(th.hyper_tol));
    put("fates.to_fixed_point", Detail::Count(fates.to_fixed_point as u64));
    put("fates.to_orbit", Detail::Count(fates.to_orbit as u64));
    put("fates.escaped", Detail::Count(fates.escaped as u64));
    put("fates.wandering", Detail::Count(fates.wandering as u64));
    put("saddles", Detail::Count(saddles.len() as u64));
    let verdict_name = match (&transversality, saddles.is_empty()) {
        (Some(v), _) => v.verdict.as_str(),
        (None, true) => "no_saddles",
        (None, false) => "not_checked",
    };
    put("transversality", Detail::Text(verdict_name.to_string()));
    if let Some(v) = &transversality {
        put("transversality.checked_pairs", Detail::Count(v.checked_pairs as u64));
        put("transversality.angle_threshold", Detail::Real(v.angle_threshold));
        if let Some(a) = v.min_angle {
            put("transversality.min_angle", Detail::Real(a));
        }
    }
    put("warnings", Detail::List(warnings));

    Ok(ClassificationReport {
        system_class,
        fixed_points,
        periodic_orbits,
        jacobian_symmetry: stats.mean_symmetry,
        curl_gradient_ratio: stats.mean_ratio,
        has_transverse_manifolds,
        confidence,
        fates,
        details,
    })
}

/// [`classify_system`] at the reduced [`ClassifySettings::quick`] budget; confidence is capped at 0.8.
pub fn quick_classify(field: &VectorField, bounds: &Bounds, seed: u64) -> Result<ClassificationReport> {
    let settings = ClassifySettings { seed, ..ClassifySettings::quick() };
    let mut report = classify_system(field, bounds, &settings)?;
    report.confidence = report.confidence.min(0.8);
    Ok(report)
}

pub fn get_system_class(field: &VectorField, bounds: &Bounds, settings: &ClassifySettings) -> Result<SystemClass> {
    Ok(classify_system(field, bounds, settings)?.system_class)
}

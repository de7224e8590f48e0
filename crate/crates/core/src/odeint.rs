//! Adaptive Dormand–Prince 5(4) integration with dense output, hyperplane
//! crossing detection and variational (monodromy) integration.

use alloc::vec;
use alloc::vec::Vec;

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::numerics::{jacobian, norm, Matrix};
use crate::vectorfield::VectorField;

/// Fraction of each axis span added around the bounds before a trajectory
/// counts as having left them.
pub const BOUNDS_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    pub t_end: f64,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-10, max_step: f64::INFINITY, max_steps: 1_000_000, t_end: 1.0 }
    }
}

impl IntegrationSettings {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    /// Tolerances scaled by `factor` (e.g. `0.1` for a 10× tighter run).
    pub fn tightened(mut self, factor: f64) -> Self {
        self.rel_tol *= factor;
        self.abs_tol *= factor;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be at least 1"));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidArgument("t_end must be positive and finite"));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidArgument("max_step must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalReason {
    ReachedTEnd,
    LeftBounds,
    StepLimit,
    Event,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub terminal_reason: TerminalReason,
}

impl Trajectory {
    pub fn last_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn last_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

/// Hyperplane `{x : ⟨x − point, normal⟩ = 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
}

impl Section {
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.point).zip(&self.normal).map(|((a, p), n)| (a - p) * n).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingEvent {
    pub t: f64,
    pub state: Vec<f64>,
    /// `+1` when crossing along the normal, `−1` against it.
    pub direction: i8,
}

// Dormand–Prince 5(4) tableau (autonomous form, so the nodes are not needed).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its continuous extension.
pub(crate) struct StepView<'a> {
    pub t0: f64,
    pub t1: f64,
    pub y0: &'a [f64],
    pub y1: &'a [f64],
    cont: &'a [Vec<f64>; 5],
}

impl StepView<'_> {
    pub fn h(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Fourth-order dense output inside the step.
    pub fn interpolate(&self, t: f64) -> Vec<f64> {
        let h = self.t1 - self.t0;
        let s = if h == 0.0 { 1.0 } else { (t - self.t0) / h };
        let s1 = 1.0 - s;
        let c = self.cont;
        (0..self.y0.len())
            .map(|i| c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i]))))
            .collect()
    }
}

pub(crate) enum Control {
    Continue,
    Stop(TerminalReason),
}

fn is_retryable(e: &Error) -> bool {
    matches!(e, Error::NonFinite { .. } | Error::NonFiniteDerivative { .. })
}

fn rms_scaled(v: &[f64], y: &[f64], settings: &IntegrationSettings) -> f64 {
    let n = v.len().max(1) as f64;
    libm::sqrt(
        v.iter()
            .zip(y)
            .map(|(a, b)| {
                let sc = settings.abs_tol + settings.rel_tol * libm::fabs(*b);
                (a / sc) * (a / sc)
            })
            .sum::<f64>()
            / n,
    )
}

/// Drives the adaptive scheme from `t = 0` to `settings.t_end`, handing every
/// accepted step to `on_step`. Returns the final time, state and reason.
pub(crate) fn drive<R, S>(
    rhs: R,
    y0: &[f64],
    settings: &IntegrationSettings,
    mut on_step: S,
) -> Result<(f64, Vec<f64>, TerminalReason)>
where
    R: Fn(&[f64], &mut [f64]) -> Result<()>,
    S: FnMut(&StepView<'_>) -> Result<Control>,
{
    settings.validate()?;
    if let Some(index) = y0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let n = y0.len();
    let t_end = settings.t_end;
    let h_min = 1e-14 * t_end;

    let mut t = 0.0;
    let mut y = y0.to_vec();
    let mut k: [Vec<f64>; 7] = core::array::from_fn(|_| vec![0.0; n]);
    rhs(&y, &mut k[0])?;

    // initial step guess
    let mut h = {
        let d0 = rms_scaled(&y, &y, settings);
        let d1 = rms_scaled(&k[0], &y, settings);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(t_end);
        let y1: Vec<f64> = y.iter().zip(&k[0]).map(|(a, b)| a + h0 * b).collect();
        let mut f1 = vec![0.0; n];
        let h1 = match rhs(&y1, &mut f1) {
            Ok(()) => {
                let diff: Vec<f64> = f1.iter().zip(&k[0]).map(|(a, b)| a - b).collect();
                let d2 = rms_scaled(&diff, &y, settings) / h0;
                let dm = d1.max(d2);
                if dm <= 1e-15 {
                    (h0 * 1e-3).max(1e-6)
                } else {
                    libm::pow(0.01 / dm, 0.2)
                }
            }
            Err(_) => h0 * 1e-3,
        };
        (100.0 * h0).min(h1).min(settings.max_step).min(t_end)
    };

    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err_vec = vec![0.0; n];
    let mut cont: [Vec<f64>; 5] = core::array::from_fn(|_| vec![0.0; n]);
    let mut steps = 0usize;
    let mut rejected_last = false;

    while t < t_end {
        if steps >= settings.max_steps {
            return Ok((t, y, TerminalReason::StepLimit));
        }
        let last = t + h >= t_end * (1.0 - 1e-14);
        if last {
            h = t_end - t;
        }
        if h < h_min {
            return Err(Error::StepSizeUnderflow { t });
        }

        // stages 2..7
        let mut stage_err = None;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][i];
                }
                stage[i] = y[i] + h * acc;
            }
            if let Err(e) = rhs(&stage, &mut k[s]) {
                stage_err = Some(e);
                break;
            }
            if s == 6 {
                y_new.copy_from_slice(&stage);
            }
        }

        let err = match stage_err {
            Some(e) if is_retryable(&e) => f64::INFINITY,
            Some(e) => return Err(e),
            None => {
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..7 {
                        acc += E[j] * k[j][i];
                    }
                    err_vec[i] = h * acc;
                }
                let nn = n.max(1) as f64;
                let mut sum = 0.0;
                for i in 0..n {
                    let sc = settings.abs_tol
                        + settings.rel_tol * libm::fabs(y[i]).max(libm::fabs(y_new[i]));
                    sum += (err_vec[i] / sc) * (err_vec[i] / sc);
                }
                let e = libm::sqrt(sum / nn);
                if e.is_finite() {
                    e
                } else {
                    f64::INFINITY
                }
            }
        };

        if err <= 1.0 {
            steps += 1;
            for i in 0..n {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k[6][i] - bspl;
                let mut acc = 0.0;
                for j in 0..7 {
                    acc += D[j] * k[j][i];
                }
                cont[4][i] = h * acc;
            }
            let t_new = if last { t_end } else { t + h };
            let control = on_step(&StepView { t0: t, t1: t_new, y0: &y, y1: &y_new, cont: &cont })?;
            t = t_new;
            y.copy_from_slice(&y_new);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            if let Control::Stop(reason) = control {
                return Ok((t, y, reason));
            }
            let mut fac = if err == 0.0 { 5.0 } else { 0.9 * libm::pow(err, -0.2) };
            fac = fac.clamp(0.2, 5.0);
            if rejected_last {
                fac = fac.min(1.0);
            }
            rejected_last = false;
            h = (h * fac).min(settings.max_step);
        } else {
            let fac = if err.is_finite() { (0.9 * libm::pow(err, -0.2)).max(0.2) } else { 0.2 };
            h *= fac.min(1.0);
            rejected_last = true;
        }
    }
    Ok((t, y, TerminalReason::ReachedTEnd))
}

fn field_rhs(field: &VectorField) -> impl Fn(&[f64], &mut [f64]) -> Result<()> + '_ {
    move |x, out| field.eval_into(x, out)
}

/// Integrates `x' = F(x)` from `x0` over `[0, t_end]`, recording every
/// accepted step. With `bounds`, stops once the state leaves the box grown by
/// [`BOUNDS_MARGIN`] of each span.
pub fn integrate(
    field: &VectorField,
    x0: &[f64],
    settings: &IntegrationSettings,
    bounds: Option<&Bounds>,
) -> Result<Trajectory> {
    if x0.len() != field.dim() {
        return Err(Error::InconsistentDimension { expected: field.dim(), got: x0.len() });
    }
    let mut times = vec![0.0];
    let mut states = vec![x0.to_vec()];
    let (_, _, terminal_reason) = drive(field_rhs(field), x0, settings, |step| {
        times.push(step.t1);
        states.push(step.y1.to_vec());
        if let Some(b) = bounds {
            if !b.contains_expanded(step.y1, BOUNDS_MARGIN) {
                return Ok(Control::Stop(TerminalReason::LeftBounds));
            }
        }
        Ok(Control::Continue)
    })?;
    Ok(Trajectory { times, states, terminal_reason })
}

/// States at `count` equally spaced times `k·t_end/count`, `k = 0..count`,
/// taken from the dense output.
pub fn sample_uniform(
    field: &VectorField,
    x0: &[f64],
    settings: &IntegrationSettings,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    let dt = settings.t_end / count as f64;
    let mut out = Vec::with_capacity(count);
    out.push(x0.to_vec());
    let mut next = 1usize;
    drive(field_rhs(field), x0, settings, |step| {
        while next < count && next as f64 * dt <= step.t1 {
            out.push(step.interpolate(next as f64 * dt));
            next += 1;
        }
        Ok(Control::Continue)
    })?;
    Ok(out)
}

/// Finds where the trajectory crosses `section`, refined on the dense output
/// until `|⟨x − point, normal⟩| ≤ 1e-10·‖normal‖`.
///
/// Stops after `max_crossings` events, at `t_end`, or on leaving `bounds`.
/// An event closer than ten local steps to the previous one is dropped.
pub fn detect_crossings(
    field: &VectorField,
    x0: &[f64],
    section: &Section,
    settings: &IntegrationSettings,
    max_crossings: usize,
    bounds: Option<&Bounds>,
) -> Result<Vec<CrossingEvent>> {
    let nrm = norm(&section.normal);
    if !(nrm > 0.0) {
        return Err(Error::InvalidArgument("section normal must be nonzero"));
    }
    if section.point.len() != field.dim() || section.normal.len() != field.dim() {
        return Err(Error::InconsistentDimension { expected: field.dim(), got: section.point.len() });
    }
    let tol = 1e-10 * nrm;
    let mut events: Vec<CrossingEvent> = Vec::new();
    if max_crossings == 0 {
        return Ok(events);
    }
    drive(field_rhs(field), x0, settings, |step| {
        let g0 = section.signed_distance(step.y0);
        let g1 = section.signed_distance(step.y1);
        let direction = if g0 < 0.0 && g1 >= 0.0 {
            1
        } else if g0 > 0.0 && g1 <= 0.0 {
            -1
        } else {
            0
        };
        if direction != 0 {
            let (t, state) = refine_crossing(step, section, g0, tol);
            let chatter = events.last().is_some_and(|e| t - e.t < 10.0 * step.h());
            if !chatter {
                events.push(CrossingEvent { t, state, direction });
                if events.len() >= max_crossings {
                    return Ok(Control::Stop(TerminalReason::Event));
                }
            }
        }
        if let Some(b) = bounds {
            if !b.contains_expanded(step.y1, BOUNDS_MARGIN) {
                return Ok(Control::Stop(TerminalReason::LeftBounds));
            }
        }
        Ok(Control::Continue)
    })?;
    Ok(events)
}

fn refine_crossing(step: &StepView<'_>, section: &Section, g0: f64, tol: f64) -> (f64, Vec<f64>) {
    let (mut lo, mut hi) = (step.t0, step.t1);
    let lo_sign = g0 < 0.0;
    let mut best = (step.t1, step.y1.to_vec());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let x = step.interpolate(mid);
        let g = section.signed_distance(&x);
        best = (mid, x);
        if libm::fabs(g) <= tol || hi - lo <= 4.0 * f64::EPSILON * libm::fabs(mid).max(1.0) {
            break;
        }
        if (g < 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best
}

/// Monodromy matrix `Φ(T)` of `Φ' = J(x(t))·Φ`, `Φ(0) = I`, integrated
/// jointly with the state from `orbit_start` over one `period`.
pub fn monodromy(
    field: &VectorField,
    orbit_start: &[f64],
    period: f64,
    settings: &IntegrationSettings,
) -> Result<Matrix> {
    if !(period > 0.0) {
        return Err(Error::InvalidArgument("period must be positive"));
    }
    let n = field.dim();
    if orbit_start.len() != n {
        return Err(Error::InconsistentDimension { expected: n, got: orbit_start.len() });
    }
    let mut y0 = orbit_start.to_vec();
    y0.extend_from_slice(Matrix::identity(n).as_slice());
    let rhs = |y: &[f64], out: &mut [f64]| -> Result<()> {
        let (x, phi) = y.split_at(n);
        let (dx, dphi) = out.split_at_mut(n);
        field.eval_into(x, dx)?;
        let j = jacobian(field, x)?;
        for r in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for m in 0..n {
                    acc += j[(r, m)] * phi[m * n + c];
                }
                dphi[r * n + c] = acc;
            }
        }
        Ok(())
    };
    let s = settings.with_t_end(period);
    let (_, y, reason) = drive(rhs, &y0, &s, |_| Ok(Control::Continue))?;
    if reason == TerminalReason::StepLimit {
        return Err(Error::InvalidArgument("monodromy integration hit the step limit"));
    }
    Matrix::from_row_major(n, n, y[n..].to_vec())
}

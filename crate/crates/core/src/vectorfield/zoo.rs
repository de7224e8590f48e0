//! Built-in models.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{ParamMap, System, VectorField};
use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::numerics::Scalar;

pub const MODEL_NAMES: [&str; 6] = ["gradient2d", "rotation", "toggle", "vanderpol", "lorenz", "stemcell"];

struct Gradient2d;

impl System for Gradient2d {
    fn eval<S: Scalar>(&self, x: &[S], out: &mut [S]) {
        out[0] = x[0] * -2.0;
        out[1] = x[1] * -2.0;
    }
}

/// Damped rotation `[−x₁ + ωx₂, −ωx₁ − x₂]`.
struct Rotation {
    omega: f64,
}

impl System for Rotation {
    fn eval<S: Scalar>(&self, x: &[S], out: &mut [S]) {
        out[0] = -x[0] + x[1] * self.omega;
        out[1] = x[0] * -self.omega - x[1];
    }
}

/// Mutual repression `[a/(1 + x₂ⁿ) − x₁, a/(1 + x₁ⁿ) − x₂]`.
struct Toggle {
    a: f64,
    n: f64,
}

fn hill_pow<S: Scalar>(x: S, n: f64) -> S {
    if libm::trunc(n) == n && libm::fabs(n) <= 64.0 {
        x.powi(n as i32)
    } else {
        x.powf(S::from(n))
    }
}

impl System for Toggle {
    fn eval<S: Scalar>(&self, x: &[S], out: &mut [S]) {
        let one = S::from(1.0);
        out[0] = S::from(self.a) / (one + hill_pow(x[1], self.n)) - x[0];
        out[1] = S::from(self.a) / (one + hill_pow(x[0], self.n)) - x[1];
    }
}

struct VanDerPol {
    mu: f64,
}

impl System for VanDerPol {
    fn eval<S: Scalar>(&self, x: &[S], out: &mut [S]) {
        out[0] = x[1];
        out[1] = (S::from(1.0) - x[0] * x[0]) * x[1] * self.mu - x[0];
    }
}

struct Lorenz {
    sigma: f64,
    rho: f64,
    beta: f64,
}

impl System for Lorenz {
    fn eval<S: Scalar>(&self, x: &[S], out: &mut [S]) {
        out[0] = (x[1] - x[0]) * self.sigma;
        out[1] = x[0] * (S::from(self.rho) - x[2]) - x[1];
        out[2] = x[0] * x[1] - x[2] * self.beta;
    }
}

/// Rate constants and LIF level of the four-species pluripotency network
/// (Nanog, Oct4–Sox2, Fgf4, Gata6).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StemCellParams {
    /// `k[i]` is the rate constant `k_i`, `i = 0..=14`.
    pub k: [f64; 15],
    /// First-order degradation rate.
    pub kd: f64,
    /// LIF concentration.
    pub lif: f64,
}

impl Default for StemCellParams {
    fn default() -> Self {
        Self {
            k: [
                0.005, 0.01, 0.4, 1.0, 0.1, 0.00135, 0.01, 0.01, 1.0, 1.0, 0.01, 5.0, 1.0, 0.005, 1.0,
            ],
            kd: 1.0,
            lif: 50.0,
        }
    }
}

impl StemCellParams {
    fn set(&mut self, name: &str, value: f64) -> bool {
        match name {
            "kd" => self.kd = value,
            "L" => self.lif = value,
            _ => match name.strip_prefix('k').and_then(|s| s.parse::<usize>().ok()) {
                Some(i) if i < 15 && name == format!("k{i}") => self.k[i] = value,
                _ => return false,
            },
        }
        true
    }
}

/// Production minus first-order degradation for state `[N, O, F, G]`.
pub fn stem_cell_rhs<S: Scalar>(x: &[S], p: &StemCellParams) -> [S; 4] {
    let k = |i: usize| S::from(p.k[i]);
    let one = S::from(1.0);
    let lif = S::from(p.lif);
    let (n, o, f, g) = (x[0], x[1], x[2], x[3]);
    let n2 = n.powi(2);
    let f2 = f.powi(2);
    let g2 = g.powi(2);

    let a1 = k(0) * o * (k(1) + k(2) * n2 + k(0) * o + k(3) * lif)
        / (one + k(0) * o * (k(2) * n2 + k(0) * o + k(3) * lif + k(4) * f2) + k(5) * o * g2);
    let a2 = (k(6) + k(7) * o) / (one + k(7) * o + k(8) * g2);
    let a3 = (k(9) + k(10) * o) / (one + k(10) * o);
    let a4 = (k(11) + k(12) * g2 + k(14) * o) / (one + k(12) * g2 + k(13) * n2 + k(14) * o);

    // each species has one production and one degradation channel
    [a1 - n * p.kd, a2 - o * p.kd, a3 - f * p.kd, a4 - g * p.kd]
}

struct StemCell(StemCellParams);

impl System for StemCell {
    fn eval<S: Scalar>(&self, x: &[S], out: &mut [S]) {
        out.copy_from_slice(&stem_cell_rhs(x, &self.0));
    }
}

fn take(model: &str, params: &ParamMap, allowed: &[(&str, f64)]) -> Result<Vec<f64>> {
    if let Some(bad) = params.keys().find(|k| !allowed.iter().any(|(a, _)| a == k)) {
        return Err(Error::UnknownParameter { model: model.to_string(), name: bad.clone() });
    }
    Ok(allowed.iter().map(|(name, default)| params.get(*name).copied().unwrap_or(*default)).collect())
}

/// Instantiates a zoo model by name with optional parameter overrides.
///
/// | name | parameters (defaults) |
/// |------|-----------------------|
/// | `gradient2d` | none |
/// | `rotation` | `omega` (1) |
/// | `toggle` | `a` (1), `n` (2) |
/// | `vanderpol` | `mu` (1) |
/// | `lorenz` | `sigma` (10), `rho` (28), `beta` (8/3) |
/// | `stemcell` | `k0`…`k14`, `kd`, `L` (50) |
pub fn builtin(name: &str, params: &ParamMap) -> Result<VectorField> {
    let field = match name {
        "gradient2d" => {
            take(name, params, &[])?;
            VectorField::new(2, Gradient2d)?
        }
        "rotation" => {
            let p = take(name, params, &[("omega", 1.0)])?;
            VectorField::new(2, Rotation { omega: p[0] })?
        }
        "toggle" => {
            let p = take(name, params, &[("a", 1.0), ("n", 2.0)])?;
            VectorField::new(2, Toggle { a: p[0], n: p[1] })?
        }
        "vanderpol" => {
            let p = take(name, params, &[("mu", 1.0)])?;
            VectorField::new(2, VanDerPol { mu: p[0] })?
        }
        "lorenz" => {
            let p = take(name, params, &[("sigma", 10.0), ("rho", 28.0), ("beta", 8.0 / 3.0)])?;
            VectorField::new(3, Lorenz { sigma: p[0], rho: p[1], beta: p[2] })?
        }
        "stemcell" => {
            let mut sp = StemCellParams::default();
            for (k, &v) in params {
                if !sp.set(k, v) {
                    return Err(Error::UnknownParameter { model: name.to_string(), name: k.clone() });
                }
            }
            VectorField::new(4, StemCell(sp))?
        }
        _ => return Err(Error::UnknownModel(name.to_string())),
    };
    Ok(field.with_name(name))
}

/// Parameter names and defaults accepted by [`builtin`].
pub fn parameters(name: &str) -> Result<Vec<(String, f64)>> {
    let named = |list: &[(&str, f64)]| list.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    Ok(match name {
        "gradient2d" => Vec::new(),
        "rotation" => named(&[("omega", 1.0)]),
        "toggle" => named(&[("a", 1.0), ("n", 2.0)]),
        "vanderpol" => named(&[("mu", 1.0)]),
        "lorenz" => named(&[("sigma", 10.0), ("rho", 28.0), ("beta", 8.0 / 3.0)]),
        "stemcell" => {
            let d = StemCellParams::default();
            let mut out: Vec<(String, f64)> = d.k.iter().enumerate().map(|(i, v)| (format!("k{i}"), *v)).collect();
            out.push(("kd".to_string(), d.kd));
            out.push(("L".to_string(), d.lif));
            out
        }
        _ => return Err(Error::UnknownModel(name.to_string())),
    })
}

/// The region each zoo model is usually studied on.
pub fn default_bounds(name: &str) -> Result<Bounds> {
    let axes = match name {
        "gradient2d" | "rotation" => vec![(-2.0, 2.0); 2],
        "toggle" => vec![(0.0, 2.0); 2],
        "vanderpol" => vec![(-3.0, 3.0); 2],
        "lorenz" => vec![(-20.0, 20.0), (-30.0, 30.0), (0.0, 50.0)],
        "stemcell" => vec![(0.0, 100.0), (0.0, 100.0), (0.0, 100.0), (0.0, 120.0)],
        _ => return Err(Error::UnknownModel(name.to_string())),
    };
    Bounds::new(axes)
}

//! JSON form of a classification report. Floats are written in shortest
//! round-trip form, so decoding reproduces the report exactly.

use std::collections::BTreeMap;

use dynclass_core::classify::FateCounts;
use dynclass_core::numerics::Complex64;
use dynclass_core::{ClassificationReport, Detail, FixedPointRecord, FixedPointType, OrbitRecord, SystemClass};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<&Complex64> for ComplexJson {
    fn from(z: &Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<&ComplexJson> for Complex64 {
    fn from(z: &ComplexJson) -> Self {
        Complex64::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointJson {
    pub location: Vec<f64>,
    pub eigenvalues: Vec<ComplexJson>,
    #[serde(rename = "type")]
    pub kind: String,
    pub residual: f64,
}

impl From<&FixedPointRecord> for FixedPointJson {
    fn from(p: &FixedPointRecord) -> Self {
        Self {
            location: p.location.clone(),
            eigenvalues: p.eigenvalues.iter().map(Into::into).collect(),
            kind: p.kind.as_str().to_string(),
            residual: p.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitJson {
    pub period: f64,
    pub is_stable: bool,
    pub multipliers: Vec<ComplexJson>,
    pub closure: f64,
    pub points: Vec<Vec<f64>>,
}

impl From<&OrbitRecord> for OrbitJson {
    fn from(o: &OrbitRecord) -> Self {
        Self {
            period: o.period,
            is_stable: o.is_stable,
            multipliers: o.multipliers.iter().map(Into::into).collect(),
            closure: o.closure,
            points: o.points.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatesJson {
    pub to_fixed_point: usize,
    pub to_orbit: usize,
    pub escaped: usize,
    pub wandering: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub system_class: String,
    pub confidence: f64,
    pub fixed_points: Vec<FixedPointJson>,
    pub periodic_orbits: Vec<OrbitJson>,
    pub jacobian_symmetry: f64,
    pub curl_gradient_ratio: f64,
    pub has_transverse_manifolds: Option<bool>,
    pub fates: FatesJson,
    pub details: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeError(pub String);

impl std::fmt::Display for DecodeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid report JSON: {}", self.0)
    }
}

impl std::error::Error for DecodeError {}

/// Non-finite reals have no JSON number form; they are written as strings.
fn detail_to_value(d: &Detail) -> Value {
    match d {
        Detail::Count(n) => Value::from(*n),
        Detail::Real(x) if x.is_finite() => Value::from(*x),
        Detail::Real(x) => Value::from(x.to_string()),
        Detail::Flag(b) => Value::from(*b),
        Detail::Text(s) => Value::from(s.as_str()),
        Detail::List(items) => Value::from(items.clone()),
    }
}

fn value_to_detail(key: &str, v: &Value) -> Result<Detail, DecodeError> {
    match v {
        Value::Bool(b) => Ok(Detail::Flag(*b)),
        Value::Number(n) => match (n.as_u64(), n.is_f64()) {
            (Some(c), false) => Ok(Detail::Count(c)),
            _ => n.as_f64().map(Detail::Real).ok_or_else(|| DecodeError(format!("detail '{key}' out of range"))),
        },
        Value::String(s) => Ok(Detail::Text(s.clone())),
        Value::Array(items) => items
            .iter()
            .map(|i| i.as_str().map(str::to_string))
            .collect::<Option<Vec<_>>>()
            .map(Detail::List)
            .ok_or_else(|| DecodeError(format!("detail '{key}' must be a list of strings"))),
        Value::Null | Value::Object(_) => Err(DecodeError(format!("detail '{key}' has an unsupported shape"))),
    }
}

impl From<&ClassificationReport> for ReportJson {
    fn from(r: &ClassificationReport) -> Self {
        Self {
            system_class: r.system_class.as_str().to_string(),
            confidence: r.confidence,
            fixed_points: r.fixed_points.iter().map(Into::into).collect(),
            periodic_orbits: r.periodic_orbits.iter().map(Into::into).collect(),
            jacobian_symmetry: r.jacobian_symmetry,
            curl_gradient_ratio: r.curl_gradient_ratio,
            has_transverse_manifolds: r.has_transverse_manifolds,
            fates: FatesJson {
                to_fixed_point: r.fates.to_fixed_point,
                to_orbit: r.fates.to_orbit,
                escaped: r.fates.escaped,
                wandering: r.fates.wandering,
            },
            details: r.details.iter().map(|(k, v)| (k.clone(), detail_to_value(v))).collect(),
        }
    }
}

impl TryFrom<&ReportJson> for ClassificationReport {
    type Error = DecodeError;

    fn try_from(j: &ReportJson) -> Result<Self, DecodeError> {
        let system_class = SystemClass::parse(&j.system_class)
            .ok_or_else(|| DecodeError(format!("unknown system class '{}'", j.system_class)))?;
        let fixed_points = j
            .fixed_points
            .iter()
            .map(|p| {
                let kind = FixedPointType::parse(&p.kind)
                    .ok_or_else(|| DecodeError(format!("unknown fixed point type '{}'", p.kind)))?;
                Ok(FixedPointRecord {
                    location: p.location.clone(),
                    eigenvalues: p.eigenvalues.iter().map(Into::into).collect(),
                    kind,
                    residual: p.residual,
                })
            })
            .collect::<Result<Vec<_>, DecodeError>>()?;
        let periodic_orbits = j
            .periodic_orbits
            .iter()
            .map(|o| OrbitRecord {
                points: o.points.clone(),
                period: o.period,
                multipliers: o.multipliers.iter().map(Into::into).collect(),
                is_stable: o.is_stable,
                closure: o.closure,
            })
            .collect();
        let details = j
            .details
            .iter()
            .map(|(k, v)| Ok((k.clone(), value_to_detail(k, v)?)))
            .collect::<Result<BTreeMap<_, _>, DecodeError>>()?;
        Ok(ClassificationReport {
            system_class,
            fixed_points,
            periodic_orbits,
            jacobian_symmetry: j.jacobian_symmetry,
            curl_gradient_ratio: j.curl_gradient_ratio,
            has_transverse_manifolds: j.has_transverse_manifolds,
            confidence: j.confidence,
            fates: FateCounts {
                to_fixed_point: j.fates.to_fixed_point,
                to_orbit: j.fates.to_orbit,
                escaped: j.fates.escaped,
                wandering: j.fates.wandering,
            },
            details,
        })
    }
}

pub fn report_to_json(report: &ClassificationReport) -> String {
    serde_json::to_string_pretty(&ReportJson::from(report)).expect("report DTO serializes")
}

pub fn report_from_json(text: &str) -> Result<ClassificationReport, DecodeError> {
    let dto: ReportJson = serde_json::from_str(text).map_err(|e| DecodeError(e.to_string()))?;
    ClassificationReport::try_from(&dto)
}

//! Numerical classification of continuous-time dynamical systems `dx/dt = F(x)`.
//!
//! The crate places a vector field in the hierarchy
//! gradient → gradient-like → Morse–Smale → structurally stable → general by
//! measuring Jacobian symmetry and curl, locating fixed points and periodic
//! orbits, tracing saddle manifolds and following trajectory fates.
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature enables
//! wall-clock timeouts; `parallel` runs independent searches on rayon.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` deliberately also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bounds;
pub mod classify;
pub mod error;
pub mod fixedpoints;
pub mod manifolds;
pub mod numerics;
pub mod odeint;
pub mod orbits;
pub mod structure;
pub mod vectorfield;

mod exec;
mod sampling;

pub use bounds::Bounds;
pub use classify::{
    classify_system, get_system_class, landscape_interpretation, quick_classify, ClassificationReport,
    ClassifySettings, Detail, FateCounts, Landscape, SystemClass, Thresholds,
};
pub use error::{Error, Result};
pub use fixedpoints::{FixedPointRecord, FixedPointType};
pub use numerics::{Dual, EigenSet, Matrix, Scalar};
pub use orbits::{FloquetStability, OrbitRecord};
pub use vectorfield::{ParamMap, System, VectorField};

//! Seeded random streams.
//!
//! Every stochastic choice draws from a ChaCha stream keyed by the master
//! seed, a purpose tag and an item index, so item `i` sees the same numbers
//! regardless of how many items are requested or which thread runs it.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::bounds::Bounds;

#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub(crate) enum Purpose {
    Region = 1,
    NewtonStart = 2,
    OrbitSeed = 3,
    FateSeed = 4,
}

pub(crate) fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) ^ index);
    rng
}

/// Uniform draw in `[0, 1)` with 53 random bits.
pub(crate) fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn point_in(bounds: &Bounds, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let u: Vec<f64> = (0..bounds.dim()).map(|_| unit(rng)).collect();
    bounds.from_unit(&u)
}

/// The `index`-th seeded uniform point for `purpose`.
pub(crate) fn seeded_point(bounds: &Bounds, seed: u64, purpose: Purpose, index: usize) -> Vec<f64> {
    point_in(bounds, &mut stream(seed, purpose, index as u64))
}

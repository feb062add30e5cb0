//! Seeded, scheduling-independent sample generation.
//!
//! Each work unit (grid cell, scan point, segment node) owns a ChaCha stream
//! selected by its index, so results do not depend on which thread ran it or
//! in what order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::maps::Phase;

// 1/g and 1/g^2 for the plastic number g, the R2 additive-recurrence lattice.
const R2_ALPHA: [f64; 2] = [0.754_877_666_246_692_8, 0.569_840_290_998_053_3];

/// Generator for work unit `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `count` points of the unit square from the R2 low-discrepancy lattice
/// under a random Cranley–Patterson shift.
pub fn shifted_lattice(rng: &mut ChaCha8Rng, count: usize) -> Vec<[f64; 2]> {
    let shift: [f64; 2] = [rng.random(), rng.random()];
    (0..count)
        .map(|i| {
            let i = i as f64;
            [(shift[0] + i * R2_ALPHA[0]).fract(), (shift[1] + i * R2_ALPHA[1]).fract()]
        })
        .collect()
}

/// Phase at `x` with its sub-`f64` bits filled from `rng`, so that the exact
/// tripling orbit behaves like a generic point rather than a dyadic rational
/// with a short binary expansion.
pub fn generic_phase(x: f64, rng: &mut ChaCha8Rng) -> Phase {
    let base = Phase::from_f64(x);
    Phase(base.0 ^ (rng.next_u64() & 0x7ff))
}

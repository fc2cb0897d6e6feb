// Copyright 2026 bosonic-qec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Seeded, splittable random streams.
//!
//! Every stochastic run is driven by a master seed. Independent streams (one
//! per trajectory, per cardinal input, ...) are derived with ChaCha's stream
//! selector so results do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

/// Stream `stream` of the generator seeded by `master`.
pub fn stream(master: u64, stream: u64) -> Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// Compose a stream index from hierarchical coordinates (e.g. grid point,
/// input state, trajectory).
pub fn stream_id(parts: &[u64]) -> u64 {
    parts.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &p| {
        let mut x = h ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15);
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^ (x >> 31)
    })
}

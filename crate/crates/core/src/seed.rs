//! Deterministic seed derivation for parallel work items.
//!
//! Each work item (grid point, replication, restart) gets its own stream
//! seeded from `base ^ mix(coordinates)`, so results do not depend on the
//! order in which a thread pool happens to schedule them.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a list of integer coordinates to a 64-bit value.
pub fn hash_coords(coords: &[u64]) -> u64 {
    let mut h = mix64(coords.len() as u64 ^ GOLDEN);
    for &c in coords {
        h = mix64(h.wrapping_add(GOLDEN) ^ mix64(c.wrapping_add(GOLDEN)));
    }
    h
}

/// `base ^ hash(coords)`.
pub fn derive_seed(base: u64, coords: &[u64]) -> u64 {
    base ^ hash_coords(coords)
}

/// Encode a signed grid value (e.g. a gamma target) as a coordinate.
pub fn f64_coord(x: f64) -> u64 {
    x.to_bits()
}

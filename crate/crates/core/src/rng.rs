//! Seed lanes.
//!
//! Every random choice in a run is drawn from a generator keyed by
//! `(run seed, label, owner)`, so results do not depend on the order in
//! which workers execute or on how many draws another stage consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Owner id for randomness shared by every worker (e.g. the embedding `S`).
pub const SHARED: u64 = u64::MAX;
/// Owner id for draws made by the master.
pub const MASTER: u64 = u64::MAX - 1;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a seed with a counter into a new, well-mixed seed.
#[inline]
pub fn mix(seed: u64, counter: u64) -> u64 {
    splitmix64(seed ^ splitmix64(counter.wrapping_add(0x632B_E59B_D9B4_E019)))
}

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed for the lane `(seed, label, owner)`.
pub fn lane(seed: u64, label: &str, owner: u64) -> u64 {
    mix(mix(seed, fnv1a(label)), owner)
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn lane_rng(seed: u64, label: &str, owner: u64) -> ChaCha8Rng {
    rng_from(lane(seed, label, owner))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lanes_are_distinct() {
        let a = lane(7, "embed", SHARED);
        let b = lane(7, "embed", 0);
        let c = lane(7, "leverage", 0);
        let d = lane(8, "embed", SHARED);
        assert!(a != b && b != c && a != d);
        assert_eq!(a, lane(7, "embed", SHARED));
    }
}

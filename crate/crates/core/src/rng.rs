//! Seeded random streams. Every consumer draws from its own stream derived
//! from the scenario seed, a domain tag and an index, so adding a consumer
//! never perturbs another one's sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn stream(seed: u64, domain: &str, index: u64) -> SimRng {
    let key = splitmix64(splitmix64(seed) ^ fnv1a(domain)) ^ splitmix64(index.wrapping_add(1));
    ChaCha8Rng::seed_from_u64(key)
}

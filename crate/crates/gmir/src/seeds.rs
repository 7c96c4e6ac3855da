//! Deterministic seed derivation.
//!
//! Every source of randomness in a run (init, shuffles, buffer draws, pool
//! selection, ...) gets its own stream derived from the run seed and a string
//! tag, so adding or removing one consumer never perturbs the others.

/// Derives an independent seed from a base seed, a stream tag and an index.
pub fn derive(base: u64, stream: &str, index: u64) -> u64 {
    // FNV-1a over the tag, then splitmix64 to decorrelate.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in stream.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(base ^ splitmix64(h ^ splitmix64(index)))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

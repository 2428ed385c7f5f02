//! Stable per-trial seed derivation.
//!
//! Trial seeds must not depend on execution order or on the standard
//! library's hasher (which is allowed to change), so strings go through
//! FNV-1a and everything is folded with the SplitMix64 finalizer.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, b| (h ^ *b as u64).wrapping_mul(FNV_PRIME))
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Channel seed of one sweep trial.
pub fn trial_seed(
    master: u64,
    image_id: &str,
    scheme: &str,
    eta_index: usize,
    snr_index: usize,
    seed_index: usize,
) -> u64 {
    [
        fnv1a(image_id.as_bytes()),
        fnv1a(scheme.as_bytes()),
        eta_index as u64,
        snr_index as u64,
        seed_index as u64,
    ]
    .into_iter()
    .fold(splitmix64(master), |h, v| splitmix64(h ^ v))
}

//! Deterministic derivation of child seeds from one root seed.
//!
//! `derive_seed(root, k)` applies the SplitMix64 finalizer to
//! `root + (k + 1) * GOLDEN`. Named streams hash their label with FNV-1a
//! first.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, stream: u64) -> u64 {
    splitmix64(root.wrapping_add(stream.wrapping_add(1).wrapping_mul(GOLDEN)))
}

pub fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed for a named stream such as a phenotype or a pipeline stage.
pub fn named_seed(root: u64, label: &str) -> u64 {
    derive_seed(root, fnv1a(label))
}

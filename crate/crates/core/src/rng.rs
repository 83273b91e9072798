//! Seeded random streams.
//!
//! Every run seed drives several independent ChaCha8 streams, one per
//! purpose, so that e.g. switching the selection strategy leaves the
//! generated scenario and the detection draws untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Ads = 1,
    Profiles = 2,
    Poas = 3,
    Trace = 4,
    Detection = 5,
    Strategy = 6,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// SplitMix64 finaliser applied to `master ^ index`; used to derive
/// per-replicate seeds from one master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = (master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

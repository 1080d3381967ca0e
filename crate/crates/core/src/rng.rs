//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 256-bit seed derived from
//! `(base seed, path...)` with SplitMix64:
//!
//! ```text
//! h = splitmix64(seed)
//! for p in path: h = splitmix64(h ^ (p * 0x9E3779B97F4A7C15))
//! key = [splitmix64(h + 1), splitmix64(h + 2), splitmix64(h + 3), splitmix64(h + 4)]  (little-endian)
//! ```
//!
//! Streams depend only on their path, never on scheduling, so parallel runs
//! are bit-identical to serial ones. Uniforms take the top 53 bits of a
//! `u64` output and are centred in their bin, giving values strictly inside
//! `(0, 1)`; normals are obtained by inverting the normal CDF.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::normal_quantile;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for the substream identified by `path` under `seed`.
pub fn substream(seed: u64, path: &[u64]) -> StreamRng {
    let mut h = splitmix64(seed);
    for &p in path {
        h = splitmix64(h ^ p.wrapping_mul(GOLDEN));
    }
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix64(h.wrapping_add(i as u64 + 1)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Uniform draw in the open interval (0, 1).
pub fn uniform_open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw by inverse-CDF transform of one uniform.
pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    normal_quantile(uniform_open01(rng)).expect("uniform lies in (0,1)")
}

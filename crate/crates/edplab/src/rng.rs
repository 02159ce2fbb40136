//! Counter-based pseudorandomness.
//!
//! Every random draw in this crate is a pure function of `(seed, counter)`,
//! so identical seeds reproduce bit-identical streams on every platform and
//! any index can be generated independently of the others (materialization
//! parallelizes without shared state).
//!
//! The generator is SplitMix64:
//!
//! ```text
//! value(seed, k) = mix64(seed + (k + 1) * GOLDEN)
//! ```
//!
//! with `GOLDEN = 0x9E3779B97F4A7C15` (2^64 / phi) and `mix64` the standard
//! finalizer `(z ^= z >> 30) * 0xBF58476D1CE4E5B9; (z ^= z >> 27) *
//! 0x94D049BB133111EB; z ^ (z >> 31)`. Floating draws take the top 53 bits
//! of the output as the mantissa of a uniform value in `[0, 1)`; sign draws
//! take the top bit.

pub const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Domain separator so substream seeds never collide with direct draws.
const STREAM_SALT: u64 = 0xD6E8_FEB8_6659_FD93;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Raw 64-bit value at position `k` of the stream owned by `seed`.
#[inline]
pub fn at(seed: u64, k: u64) -> u64 {
    mix64(seed.wrapping_add(GOLDEN.wrapping_mul(k.wrapping_add(1))))
}

/// Uniform `f64` in `[0, 1)` from the top 53 bits of `at(seed, k)`.
#[inline]
pub fn unit_f64(seed: u64, k: u64) -> f64 {
    (at(seed, k) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `+1` or `-1` from the top bit of `at(seed, k)`.
#[inline]
pub fn sign(seed: u64, k: u64) -> i8 {
    if at(seed, k) >> 63 == 0 {
        1
    } else {
        -1
    }
}

/// Seed of derived substream `id`. A seed should be used either for direct
/// draws or for substream derivation, never both; the salt keeps the two
/// uses from colliding anyway.
#[inline]
pub fn substream(seed: u64, id: u64) -> u64 {
    mix64(at(seed, id) ^ STREAM_SALT)
}

//! Counter-based generator shared by initialization and the synthetic
//! datasets.
//!
//! Every value is a pure function of `(seed, stream, row, col)`, so any
//! distribution of a matrix across ranks reproduces the same global entries.
//! The construction is three rounds of the SplitMix64 finalizer:
//!
//! ```text
//! z0 = mix(seed + stream * 0x9E3779B97F4A7C15)
//! z1 = mix(z0 ^ (row * 0xBF58476D1CE4E5B9 + 0x94D049BB133111EB))
//! z2 = mix(z1 ^ (col * 0x94D049BB133111EB + 0xBF58476D1CE4E5B9))
//! u  = (z2 >> 11) * 2^-53            in [0, 1)
//! ```
//!
//! with wrapping 64-bit arithmetic and
//! `mix(z) = { z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27; z *= 0x94D049BB133111EB; z ^ (z >> 31) }`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const M1: u64 = 0xBF58_476D_1CE4_E5B9;
const M2: u64 = 0x94D0_49BB_1331_11EB;

/// Streams keep different consumers of one seed independent.
pub mod stream {
    pub const INIT_W: u64 = 1;
    pub const INIT_H: u64 = 2;
    pub const LOWRANK_LEFT: u64 = 3;
    pub const LOWRANK_RIGHT: u64 = 4;
    pub const SPARSE_PATTERN: u64 = 5;
    pub const SPARSE_VALUE: u64 = 6;
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(M1);
    z ^= z >> 27;
    z = z.wrapping_mul(M2);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PortableRng {
    seed: u64,
}

impl PortableRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn bits(&self, stream: u64, row: u64, col: u64) -> u64 {
        let z0 = mix(self.seed.wrapping_add(stream.wrapping_mul(GOLDEN)));
        let z1 = mix(z0 ^ row.wrapping_mul(M1).wrapping_add(M2));
        mix(z1 ^ col.wrapping_mul(M2).wrapping_add(M1))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&self, stream: u64, row: u64, col: u64) -> f64 {
        (self.bits(stream, row, col) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values_are_frozen() {
        // computed with an independent Python transcription of the docs
        assert_eq!(PortableRng::new(0).bits(0, 0, 0), 0xA55E_9F4E_EDD6_0651);
        assert_eq!(PortableRng::new(7).bits(2, 3, 5), 0x63BD_E15E_EDDA_5C1B);
        assert_eq!(mix(0), 0);
        assert_eq!(mix(1), 0x5692_161D_100B_05E5);
    }

    #[test]
    fn uniform_range() {
        let rng = PortableRng::new(42);
        for i in 0..2000 {
            let u = rng.uniform(stream::INIT_H, i, i * 3);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn mean_is_near_half() {
        let rng = PortableRng::new(9);
        let n = 100_000u64;
        let mean: f64 = (0..n).map(|i| rng.uniform(1, i / 100, i % 100)).sum::<f64>() / n as f64;
        // 5 sigma of the uniform mean
        assert!((mean - 0.5).abs() < 5.0 * (1.0f64 / 12.0 / n as f64).sqrt());
    }
}

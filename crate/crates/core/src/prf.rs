//! Deterministic seeded pseudo-randomness shared by every sketch component.
//!
//! All randomness in the artifact is derived from a single 256-bit master
//! seed through SHA-256 with domain-separation tags, so that the same
//! (seed, tag, input) triple always produces the same output and distinct
//! tags behave as independent streams.

use num::bigint::BigUint;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use sha2::{Digest, Sha256};

/// A keyed pseudo-random function bound to one domain-separation tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prf {
    key: [u8; 32],
}

/// Builds domain-separation tags out of a name plus integer coordinates.
#[derive(Debug, Clone, Default)]
pub struct Tag {
    bytes: Vec<u8>,
}

impl Tag {
    pub fn new(name: &str) -> Self {
        let mut bytes = Vec::with_capacity(name.len() + 16);
        bytes.extend_from_slice(&(name.len() as u32).to_le_bytes());
        bytes.extend_from_slice(name.as_bytes());
        Tag { bytes }
    }

    pub fn with(mut self, v: u64) -> Self {
        self.bytes.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

impl Prf {
    /// Derive the PRF for `tag` under `master_seed`.
    pub fn new(master_seed: &[u8; 32], tag: &Tag) -> Self {
        let mut h = Sha256::new();
        h.update(b"cutsketch-prf-v1");
        h.update(master_seed);
        h.update(tag.as_bytes());
        Prf { key: h.finalize().into() }
    }

    /// Derive a sub-PRF by extending this one's tag.
    pub fn subtag(&self, tag: &Tag) -> Self {
        let mut h = Sha256::new();
        h.update(b"cutsketch-sub-v1");
        h.update(self.key);
        h.update(tag.as_bytes());
        Prf { key: h.finalize().into() }
    }

    pub fn bytes32(&self, input: &[u8]) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.key);
        h.update(input);
        h.finalize().into()
    }

    pub fn u64(&self, input: &[u8]) -> u64 {
        let out = self.bytes32(input);
        u64::from_le_bytes(out[..8].try_into().unwrap())
    }

    pub fn u128(&self, input: &[u8]) -> u128 {
        let out = self.bytes32(input);
        u128::from_le_bytes(out[..16].try_into().unwrap())
    }

    /// Deterministic Bernoulli(rate) bit for `input`, exact at rate 0 and 1
    /// and within 2^-128 of the requested rate otherwise.
    pub fn bit(&self, input: &[u8], rate: &BigRational) -> bool {
        debug_assert!(!rate.is_negative() && *rate <= BigRational::one());
        if rate.is_zero() {
            return false;
        }
        if rate.is_one() {
            return true;
        }
        let draw = BigUint::from(self.u128(input));
        let numer = rate.numer().magnitude();
        let denom = rate.denom().magnitude();
        // draw / 2^128 < numer / denom
        draw * denom < numer * (BigUint::one() << 128)
    }

    /// Bernoulli(2^-bits) bit; `bits = 0` always passes.
    pub fn coin_pow2(&self, input: &[u8], bits: u32) -> bool {
        if bits == 0 {
            return true;
        }
        if bits >= 64 {
            let x = self.u128(input);
            return x & ((1u128 << bits.min(127)) - 1) == 0;
        }
        self.u64(input) & ((1u64 << bits) - 1) == 0
    }

    /// Uniform value in [0, bound) for bound >= 1, by rejection-free
    /// widening (bias below 2^-64 for any bound that fits in u64).
    pub fn below(&self, input: &[u8], bound: u64) -> u64 {
        debug_assert!(bound >= 1);
        (self.u128(input) % bound as u128) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::rational::BigRational;
    use num::BigInt;

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn rate_one_always_passes_and_rate_zero_never_does() {
        let prf = Prf::new(&[7u8; 32], &Tag::new("t"));
        for i in 0..64u64 {
            assert!(prf.bit(&i.to_le_bytes(), &ratio(1, 1)));
            assert!(!prf.bit(&i.to_le_bytes(), &ratio(0, 1)));
        }
    }

    #[test]
    fn repeated_calls_are_deterministic() {
        let prf = Prf::new(&[3u8; 32], &Tag::new("det").with(5));
        let first = prf.bit(b"input", &ratio(1, 2));
        for _ in 0..100 {
            assert_eq!(prf.bit(b"input", &ratio(1, 2)), first);
        }
    }

    #[test]
    fn distinct_tags_give_distinct_streams() {
        let a = Prf::new(&[9u8; 32], &Tag::new("a"));
        let b = Prf::new(&[9u8; 32], &Tag::new("b"));
        let differs = (0..64u64).any(|i| a.u64(&i.to_le_bytes()) != b.u64(&i.to_le_bytes()));
        assert!(differs);
    }

    #[test]
    fn empirical_rate_within_three_sigma() {
        let prf = Prf::new(&[1u8; 32], &Tag::new("rate"));
        for (num, den) in [(1i64, 2i64), (1, 4), (3, 7)] {
            let rate = ratio(num, den);
            let trials = 100_000u64;
            let hits = (0..trials)
                .filter(|i| prf.bit(&i.to_le_bytes(), &rate))
                .count() as f64;
            let p = num as f64 / den as f64;
            let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (hits - trials as f64 * p).abs() <= 3.0 * sigma,
                "rate {num}/{den}: {hits} hits out of {trials}"
            );
        }
    }

    #[test]
    fn pow2_coin_matches_rational_bit_rate() {
        let prf = Prf::new(&[2u8; 32], &Tag::new("pow2"));
        let trials = 40_000u64;
        let hits = (0..trials)
            .filter(|i| prf.coin_pow2(&i.to_le_bytes(), 3))
            .count() as f64;
        let p = 0.125;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!((hits - trials as f64 * p).abs() <= 4.0 * sigma);
    }
}

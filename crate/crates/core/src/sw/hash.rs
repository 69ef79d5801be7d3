use crate::rng::{derive_seed, mix64};

const ROUNDS: usize = 6;

/// Keyed pseudorandom permutation of `[0, domain)`: a balanced Feistel
/// network on the smallest even bit width covering the domain, restricted
/// to the domain by cycle walking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyedPermutation {
    domain: u128,
    half_bits: u32,
    keys: [u64; ROUNDS],
}

impl KeyedPermutation {
    pub fn new(domain: u128, seed: u64) -> Self {
        assert!(domain > 0, "permutation domain must be non-empty");
        let bits = 128 - (domain - 1).leading_zeros();
        let half_bits = bits.div_ceil(2).max(1);
        assert!(half_bits <= 64, "domain too large");
        let mut keys = [0u64; ROUNDS];
        for (i, k) in keys.iter_mut().enumerate() {
            *k = derive_seed(seed, i as u64);
        }
        KeyedPermutation {
            domain,
            half_bits,
            keys,
        }
    }

    pub fn domain(&self) -> u128 {
        self.domain
    }

    fn mask(&self) -> u64 {
        if self.half_bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.half_bits) - 1
        }
    }

    fn round(&self, r: u64, k: u64) -> u64 {
        mix64(r ^ k) & self.mask()
    }

    fn forward_once(&self, v: u128) -> u128 {
        let mask = self.mask();
        let (mut l, mut r) = ((v >> self.half_bits) as u64, v as u64 & mask);
        for &k in &self.keys {
            (l, r) = (r, l ^ self.round(r, k));
        }
        ((l as u128) << self.half_bits) | r as u128
    }

    fn backward_once(&self, v: u128) -> u128 {
        let mask = self.mask();
        let (mut l, mut r) = ((v >> self.half_bits) as u64, v as u64 & mask);
        for &k in self.keys.iter().rev() {
            (l, r) = (r ^ self.round(l, k), l);
        }
        ((l as u128) << self.half_bits) | r as u128
    }

    pub fn apply(&self, v: u128) -> u128 {
        debug_assert!(v < self.domain);
        let mut w = self.forward_once(v);
        while w >= self.domain {
            w = self.forward_once(w);
        }
        w
    }

    pub fn invert(&self, v: u128) -> u128 {
        debug_assert!(v < self.domain);
        let mut w = self.backward_once(v);
        while w >= self.domain {
            w = self.backward_once(w);
        }
        w
    }
}

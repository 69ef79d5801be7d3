//! Slepian-Wolf binning with typicality decoding, inverse binning, and the
//! typical-set shaper.

pub mod binning;
pub mod hash;
pub mod shaper;

pub use binning::{sw_decode, sw_encode, sw_invert, BinningCode};
pub use hash::KeyedPermutation;
pub use shaper::Shaper;

/// Bits are stored one per `bool`, most significant first.
pub type Bits = Vec<bool>;

pub fn bits_to_u128(bits: &[bool]) -> u128 {
    bits.iter().fold(0u128, |acc, &b| (acc << 1) | b as u128)
}

pub fn u128_to_bits(value: u128, len: usize) -> Bits {
    (0..len).rev().map(|i| i < 128 && (value >> i) & 1 == 1).collect()
}

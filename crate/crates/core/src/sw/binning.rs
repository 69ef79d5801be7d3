//! Random binning.
//!
//! A sequence `u^n` is mapped to its lex index among all `|U|^n` sequences,
//! pushed through a seeded keyed permutation, and the permuted index is cut
//! into equal-width bins: `bin(u) = perm(index(u)) / width` with
//! `width = ceil(|U|^n / 2^bits)`. Bins are balanced and each bin can be
//! listed by inverting the permutation, which makes exhaustive decoding
//! cheap whenever bins are small.

use std::ops::ControlFlow;

use super::hash::KeyedPermutation;
use super::{bits_to_u128, u128_to_bits, Bits};
use crate::error::CodecError;
use crate::info::law::ConditionalLaw;
use crate::info::typical::{index_sequence, sequence_index, TypicalSet, TypicalitySpec, DEFAULT_ENUMERATION_LIMIT};

#[derive(Debug, Clone)]
pub struct BinningCode {
    block_len: usize,
    alphabet: usize,
    bit_budget: usize,
    seed: u64,
    width: u128,
    perm: KeyedPermutation,
    /// Law of the source given the side information the decoder holds.
    law: ConditionalLaw,
    spec: TypicalitySpec,
    search_limit: u128,
}

impl BinningCode {
    /// `law` is `p(u | side)`; its output alphabet fixes `|U|`.
    pub fn new(block_len: usize, bit_budget: usize, seed: u64, law: ConditionalLaw, spec: TypicalitySpec) -> Self {
        let alphabet = law.outputs();
        let domain = (alphabet as u128)
            .checked_pow(block_len as u32)
            .filter(|d| *d < (1u128 << 126))
            .expect("block too long for exhaustive binning");
        let bins = if bit_budget >= 127 {
            u128::MAX
        } else {
            1u128 << bit_budget
        };
        let width = domain.div_ceil(bins).max(1);
        BinningCode {
            block_len,
            alphabet,
            bit_budget,
            seed,
            width,
            perm: KeyedPermutation::new(domain, seed),
            law,
            spec,
            search_limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }

    /// Same bins, decoded against different side information.
    pub fn with_law(&self, law: ConditionalLaw, spec: TypicalitySpec) -> Self {
        assert_eq!(law.outputs(), self.alphabet, "source alphabet must not change");
        BinningCode {
            law,
            spec,
            ..self.clone()
        }
    }

    pub fn with_search_limit(mut self, limit: u128) -> Self {
        self.search_limit = limit;
        self
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn bit_budget(&self) -> usize {
        self.bit_budget
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn law(&self) -> &ConditionalLaw {
        &self.law
    }

    pub fn spec(&self) -> TypicalitySpec {
        self.spec
    }

    /// Number of sequences per bin (the last non-empty bin may be short).
    pub fn bin_width(&self) -> u128 {
        self.width
    }

    pub fn is_typical(&self, u: &[usize], side: &[usize]) -> bool {
        crate::info::typical::is_jointly_typical(u, side, &self.law, self.spec)
    }

    pub fn bin_of(&self, u: &[usize]) -> u128 {
        self.perm.apply(sequence_index(u, self.alphabet)) / self.width
    }

    fn check_bits(&self, bits: &[bool]) -> Result<u128, CodecError> {
        if bits.len() != self.bit_budget {
            return Err(CodecError::BitLength {
                expected: self.bit_budget,
                got: bits.len(),
            });
        }
        Ok(bits_to_u128(bits))
    }

    fn check_side(&self, side: &[usize]) -> Result<(), CodecError> {
        if side.len() != self.block_len {
            return Err(CodecError::BitLength {
                expected: self.block_len,
                got: side.len(),
            });
        }
        Ok(())
    }

    /// Typical members of a bin in lex order, stopping after `keep` of them
    /// unless `keep` is `None`. Returns (total found, kept members).
    fn typical_in_bin(
        &self,
        bin: u128,
        side: &[usize],
        keep: Option<usize>,
    ) -> Result<(usize, Vec<Vec<usize>>), CodecError> {
        let set = TypicalSet::new(&self.law, side, self.spec).map_err(|_| CodecError::SearchBudget {
            needed: self.perm.domain(),
            limit: self.search_limit,
        })?;
        let domain = self.perm.domain();
        let start = bin.saturating_mul(self.width);
        if start >= domain {
            return Ok((0, Vec::new()));
        }
        let end = (start + self.width).min(domain);
        let bin_size = end - start;
        let typical = set.count();
        if bin_size.min(typical) > self.search_limit {
            return Err(CodecError::SearchBudget {
                needed: bin_size.min(typical),
                limit: self.search_limit,
            });
        }

        if bin_size <= typical {
            let mut hits: Vec<Vec<usize>> = (start..end)
                .map(|v| index_sequence(self.perm.invert(v), self.alphabet, self.block_len))
                .filter(|u| set.contains(u))
                .collect();
            hits.sort_unstable();
            let total = hits.len();
            if let Some(k) = keep {
                hits.truncate(k);
            }
            Ok((total, hits))
        } else {
            let mut total = 0usize;
            let mut hits = Vec::new();
            set.for_each(|u| {
                if self.bin_of(u) == bin {
                    total += 1;
                    if keep.is_none_or(|k| hits.len() < k) {
                        hits.push(u.to_vec());
                    }
                    if keep == Some(1) {
                        return ControlFlow::Break(());
                    }
                }
                ControlFlow::Continue(())
            });
            Ok((total, hits))
        }
    }
}

/// Bin index of `u`, `bit_budget` bits, most significant first.
pub fn sw_encode(u: &[usize], code: &BinningCode) -> Bits {
    assert_eq!(u.len(), code.block_len, "block length mismatch");
    u128_to_bits(code.bin_of(u), code.bit_budget)
}

/// The unique member of the bin typical with the side information.
pub fn sw_decode(bits: &[bool], side: &[usize], code: &BinningCode) -> Result<Vec<usize>, CodecError> {
    let bin = code.check_bits(bits)?;
    code.check_side(side)?;
    let (total, mut hits) = code.typical_in_bin(bin, side, None)?;
    match total {
        0 => Err(CodecError::EmptyBin),
        1 => Ok(hits.pop().expect("one hit")),
        count => Err(CodecError::Ambiguous {
            count,
            first: hits.swap_remove(0),
        }),
    }
}

/// The lexicographically smallest member of the bin typical with the side
/// information.
pub fn sw_invert(bits: &[bool], side: &[usize], code: &BinningCode) -> Result<Vec<usize>, CodecError> {
    let bin = code.check_bits(bits)?;
    code.check_side(side)?;
    let (_, mut hits) = code.typical_in_bin(bin, side, Some(1))?;
    hits.pop().ok_or(CodecError::EmptyBin)
}

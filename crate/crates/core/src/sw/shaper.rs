//! Injective map from bit strings into the conditional typical set: the
//! bits, read as a big-endian integer, index the lexicographic enumeration
//! of `T[x^n]`. The budget is `floor(log2 |T[x^n]|)`, so every bit string
//! of that length has an image.

use super::{bits_to_u128, u128_to_bits, Bits};
use crate::error::CodecError;
use crate::info::law::ConditionalLaw;
use crate::info::typical::{TypicalSet, TypicalitySpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Shaper {
    /// `p(u | x)`.
    law: ConditionalLaw,
    spec: TypicalitySpec,
}

impl Shaper {
    pub fn new(law: ConditionalLaw, spec: TypicalitySpec) -> Self {
        Shaper { law, spec }
    }

    pub fn law(&self) -> &ConditionalLaw {
        &self.law
    }

    pub fn spec(&self) -> TypicalitySpec {
        self.spec
    }

    fn set(&self, x: &[usize]) -> Result<TypicalSet, CodecError> {
        TypicalSet::new(&self.law, x, self.spec).map_err(|_| CodecError::SearchBudget {
            needed: x.len() as u128,
            limit: 0,
        })
    }

    pub fn typical_count(&self, x: &[usize]) -> Result<u128, CodecError> {
        Ok(self.set(x)?.count())
    }

    /// Number of bits that `shape` accepts for this conditioning block.
    pub fn bit_budget(&self, x: &[usize]) -> Result<usize, CodecError> {
        self.set(x)?.bit_budget().ok_or(CodecError::EmptyTypicalSet)
    }

    pub fn shape(&self, bits: &[bool], x: &[usize]) -> Result<Vec<usize>, CodecError> {
        let set = self.set(x)?;
        let budget = set.bit_budget().ok_or(CodecError::EmptyTypicalSet)?;
        if bits.len() != budget {
            return Err(CodecError::BitLength {
                expected: budget,
                got: bits.len(),
            });
        }
        set.unrank(bits_to_u128(bits))
    }

    pub fn unshape(&self, u: &[usize], x: &[usize]) -> Result<Bits, CodecError> {
        let set = self.set(x)?;
        let budget = set.bit_budget().ok_or(CodecError::EmptyTypicalSet)?;
        let rank = set.rank(u)?;
        if budget < 128 && rank >> budget != 0 {
            return Err(CodecError::IndexOutOfRange);
        }
        Ok(u128_to_bits(rank, budget))
    }

    /// Number of free bits left after a payload of the given length.
    pub fn pad_len(&self, payload_len: usize, x: &[usize]) -> Result<usize, CodecError> {
        let budget = self.bit_budget(x)?;
        budget.checked_sub(payload_len).ok_or(CodecError::ShaperOverflow {
            payload: payload_len,
            budget,
        })
    }

    /// Shape `payload` followed by `pad`; together they must fill the
    /// budget. Putting the payload first spreads payloads evenly over the
    /// enumeration.
    pub fn shape_padded(&self, payload: &[bool], pad: &[bool], x: &[usize]) -> Result<Vec<usize>, CodecError> {
        let free = self.pad_len(payload.len(), x)?;
        if pad.len() != free {
            return Err(CodecError::BitLength {
                expected: free,
                got: pad.len(),
            });
        }
        let mut bits = payload.to_vec();
        bits.extend_from_slice(pad);
        self.shape(&bits, x)
    }

    /// Shape a payload shorter than the budget, padding with zeros.
    pub fn shape_payload(&self, payload: &[bool], x: &[usize]) -> Result<Vec<usize>, CodecError> {
        let free = self.pad_len(payload.len(), x)?;
        self.shape_padded(payload, &vec![false; free], x)
    }

    /// Leading `payload_len` bits of `unshape`, whatever the pad.
    pub fn unshape_prefix(&self, u: &[usize], x: &[usize], payload_len: usize) -> Result<Bits, CodecError> {
        let mut bits = self.unshape(u, x)?;
        if payload_len > bits.len() {
            return Err(CodecError::ShaperOverflow {
                payload: payload_len,
                budget: bits.len(),
            });
        }
        bits.truncate(payload_len);
        Ok(bits)
    }

    /// Inverse of `shape_payload`; a nonzero pad is an error.
    pub fn unshape_payload(&self, u: &[usize], x: &[usize], payload_len: usize) -> Result<Bits, CodecError> {
        let bits = self.unshape(u, x)?;
        if payload_len > bits.len() {
            return Err(CodecError::ShaperOverflow {
                payload: payload_len,
                budget: bits.len(),
            });
        }
        let (payload, pad) = bits.split_at(payload_len);
        if pad.iter().any(|&b| b) {
            return Err(CodecError::BadPadding);
        }
        Ok(payload.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::typical::index_sequence;

    fn shaper(p: f64, d: f64) -> Shaper {
        Shaper::new(
            ConditionalLaw::binary_symmetric(p).unwrap(),
            TypicalitySpec::new(d).unwrap(),
        )
    }

    #[test]
    fn exhaustive_bijection_n8() {
        let sh = shaper(0.25, 0.1);
        for xi in [0u128, 37, 200, 255] {
            let x = index_sequence(xi, 2, 8);
            let budget = sh.bit_budget(&x).unwrap();
            let mut images = Vec::new();
            for v in 0..(1u128 << budget) {
                let bits = u128_to_bits(v, budget);
                let u = sh.shape(&bits, &x).unwrap();
                assert_eq!(sh.unshape(&u, &x).unwrap(), bits);
                images.push(u);
            }
            let n = images.len();
            images.sort();
            images.dedup();
            assert_eq!(images.len(), n);
        }
    }

    #[test]
    fn zero_bits_give_first_typical() {
        let sh = shaper(0.25, 0.1);
        let x = vec![0, 1, 1, 0, 0, 1, 0, 1];
        let budget = sh.bit_budget(&x).unwrap();
        let set = TypicalSet::new(sh.law(), &x, sh.spec()).unwrap();
        assert_eq!(sh.shape(&vec![false; budget], &x).unwrap(), set.unrank(0).unwrap());
    }

    #[test]
    fn budget_is_floor_log_count() {
        let sh = shaper(0.25, 0.1);
        let x = vec![1, 1, 0, 1, 0, 0, 0, 1];
        let count = sh.typical_count(&x).unwrap();
        let b = sh.bit_budget(&x).unwrap();
        assert!(1u128 << b <= count && count < 1u128 << (b + 1));
    }

    #[test]
    fn errors() {
        let sh = shaper(0.25, 0.1);
        let x = vec![0; 8];
        let budget = sh.bit_budget(&x).unwrap();
        assert!(matches!(
            sh.shape(&vec![true; budget + 1], &x),
            Err(CodecError::BitLength { .. })
        ));
        assert_eq!(sh.unshape(&[1; 8], &x), Err(CodecError::NotTypical));
        assert!(matches!(
            sh.shape_payload(&vec![true; budget + 1], &x),
            Err(CodecError::ShaperOverflow { .. })
        ));
    }

    #[test]
    fn padded_payload_round_trip() {
        let sh = shaper(0.1, 0.08);
        let x: Vec<usize> = (0..20).map(|i| (i % 3 == 0) as usize).collect();
        let payload = vec![true, false, true];
        let u = sh.shape_payload(&payload, &x).unwrap();
        assert_eq!(sh.unshape_payload(&u, &x, 3).unwrap(), payload);
        // reading a longer payload exposes the first pad bit only if set
        assert_eq!(sh.unshape_payload(&u, &x, 4).unwrap(), vec![true, false, true, false]);
        let free = sh.pad_len(3, &x).unwrap();
        let mut pad = vec![false; free];
        pad[0] = true;
        let v = sh.shape_padded(&payload, &pad, &x).unwrap();
        assert_eq!(sh.unshape_prefix(&v, &x, 3).unwrap(), payload);
        assert_eq!(sh.unshape_payload(&v, &x, 3), Err(CodecError::BadPadding));
    }

    #[test]
    fn shape_after_unshape_on_typical_members() {
        let sh = shaper(0.3, 0.12);
        let x = vec![0, 1, 0, 0, 1, 1, 0, 1, 0];
        let set = TypicalSet::new(sh.law(), &x, sh.spec()).unwrap();
        let budget = sh.bit_budget(&x).unwrap();
        for u in set.enumerate(1 << 16).unwrap().into_iter().take(1 << budget) {
            assert_eq!(sh.shape(&sh.unshape(&u, &x).unwrap(), &x).unwrap(), u);
        }
    }
}

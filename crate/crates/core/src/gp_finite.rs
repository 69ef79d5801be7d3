//! Iterative coding for a finite state-dependent channel with feedback.
//!
//! Block `j` carries a payload through inverse binning against the state,
//! the transmitter learns the channel output by feedback, and compresses the
//! auxiliary block into a shorter bin index that becomes the payload of
//! block `j + 1`. The last bin index goes through a repetition code. The
//! receiver walks the chain backwards from the termination output.

use rand::Rng;

use crate::error::{CodecError, Error, Result};
use crate::info::law::GpLaw;
use crate::info::measures::info_measures;
use crate::info::typical::TypicalitySpec;
use crate::rng::derive_seed;
use crate::sw::{sw_decode, sw_encode, sw_invert, BinningCode, Bits};

const CEIL_TOL: f64 = 1e-9;

/// `ceil` that treats values within rounding error of an integer as that
/// integer.
pub(crate) fn ceil_tol(x: f64) -> usize {
    (x - CEIL_TOL).ceil().max(0.0) as usize
}

/// Per-symbol bit rates of the two binning stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpRates {
    /// Bits carried per symbol by inverse binning against the state.
    pub inversion: f64,
    /// Bits per symbol needed to describe the block given the output.
    pub compression: f64,
}

impl GpRates {
    /// `H(U|S) - slack` and `H(U|Y) + slack`.
    pub fn from_law(law: &GpLaw, slack: f64) -> Self {
        let m = info_measures(&law.joint());
        GpRates {
            inversion: m.h_u_given_s - slack,
            compression: m.h_u_given_y + slack,
        }
    }

    pub fn net(&self) -> f64 {
        self.inversion - self.compression
    }
}

/// Repetition code for the final bin index. Bit `b` is sent as the
/// auxiliary symbol `pair[b]` mapped through `f(., s)`; the receiver makes
/// a per-symbol maximum likelihood decision and takes a majority vote, ties
/// going to the first repetition's decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepetitionCode {
    pub pair: [usize; 2],
    pub factor: usize,
}

impl RepetitionCode {
    pub fn new(factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::param("factor", "must be at least 1"));
        }
        Ok(RepetitionCode { pair: [0, 1], factor })
    }

    pub fn channel_uses(&self, bits: usize) -> usize {
        bits * self.factor
    }

    fn likelihood(&self, law: &GpLaw, b: usize, y: usize) -> f64 {
        let ch = &law.channel;
        (0..ch.num_states())
            .map(|s| ch.state[s] * ch.transition[law.input(self.pair[b], s)][s][y])
            .sum()
    }

    pub fn decide_symbol(&self, law: &GpLaw, y: usize) -> bool {
        self.likelihood(law, 1, y) > self.likelihood(law, 0, y)
    }

    /// Probability that one transmitted symbol is decided wrongly, for each
    /// bit value.
    pub fn symbol_errors(&self, law: &GpLaw) -> [f64; 2] {
        let ny = law.channel.num_outputs();
        let mut err = [0.0; 2];
        for (b, e) in err.iter_mut().enumerate() {
            *e = (0..ny)
                .filter(|&y| self.decide_symbol(law, y) != (b == 1))
                .map(|y| self.likelihood(law, b, y))
                .sum();
        }
        err
    }

    /// Majority-vote error per bit, averaged over equiprobable bits.
    pub fn bit_error(&self, law: &GpLaw) -> f64 {
        let e = self.symbol_errors(law);
        (repetition_error(e[0], self.factor) + repetition_error(e[1], self.factor)) / 2.0
    }

    pub fn transmit<R: Rng + ?Sized>(&self, bits: &[bool], law: &GpLaw, rng: &mut R) -> ChannelBlock {
        let mut block = ChannelBlock::default();
        for &b in bits {
            for _ in 0..self.factor {
                let s = law.channel.sample_state(rng);
                let u = self.pair[b as usize];
                let x = law.input(u, s);
                block.s.push(s);
                block.u.push(u);
                block.x.push(x);
                block.y.push(law.channel.sample_output(rng, x, s));
            }
        }
        block
    }

    pub fn decode(&self, y: &[usize], law: &GpLaw) -> Bits {
        y.chunks(self.factor)
            .map(|rep| {
                let votes: Vec<bool> = rep.iter().map(|&v| self.decide_symbol(law, v)).collect();
                let ones = votes.iter().filter(|&&v| v).count();
                match (2 * ones).cmp(&votes.len()) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => votes[0],
                }
            })
            .collect()
    }
}

/// Majority-vote error of `r` independent symbols each wrong with
/// probability `p`; an even split is resolved by a fair coin.
pub fn repetition_error(p: f64, r: usize) -> f64 {
    let mut total = 0.0;
    for j in 0..=r {
        let term = binomial(r, j) * p.powi(j as i32) * (1.0 - p).powi((r - j) as i32);
        if 2 * j > r {
            total += term;
        } else if 2 * j == r {
            total += term / 2.0;
        }
    }
    total
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpSchedule {
    pub message_bits: usize,
    /// `n_1 .. n_k`.
    pub blocks: Vec<usize>,
    /// Payload bits of each block; the first is the message.
    pub payloads: Vec<usize>,
    /// Bin-index length after compression of each block against the output.
    pub compressed: Vec<usize>,
    pub termination: RepetitionCode,
    pub rates: GpRates,
}

impl GpSchedule {
    pub fn iterations(&self) -> usize {
        self.blocks.len()
    }

    /// `l_j`, cumulative channel uses after block `j`.
    pub fn cumulative(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, &n| {
                *acc += n;
                Some(*acc)
            })
            .collect()
    }

    pub fn block_uses(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn termination_bits(&self) -> usize {
        *self.compressed.last().expect("non-empty schedule")
    }

    /// `L`.
    pub fn termination_len(&self) -> usize {
        self.termination.channel_uses(self.termination_bits())
    }

    pub fn channel_uses(&self) -> usize {
        self.block_uses() + self.termination_len()
    }

    /// Message bits per channel use.
    pub fn rate(&self) -> f64 {
        self.message_bits as f64 / self.channel_uses() as f64
    }

    /// `N / (R_s - R_y) + L`.
    pub fn channel_use_bound(&self) -> f64 {
        self.message_bits as f64 / self.rates.net() + self.termination_len() as f64
    }
}

/// Block lengths `n_j = ceil(payload_j / R_s)` with
/// `payload_{j+1} = ceil(n_j R_y)`. The chain stops early if a compressed
/// index becomes empty.
pub fn plan_schedule(
    message_bits: usize,
    rates: GpRates,
    iterations: usize,
    min_block: usize,
    termination: RepetitionCode,
) -> Result<GpSchedule> {
    if message_bits == 0 {
        return Err(Error::param("message_bits", "must be positive"));
    }
    if iterations == 0 {
        return Err(Error::param("iterations", "must be at least 1"));
    }
    if !(rates.inversion > 0.0 && rates.compression >= 0.0 && rates.net() > 0.0) {
        return Err(Error::param(
            "rates",
            format!(
                "net rate {:.6} is not positive (inversion {:.6}, compression {:.6})",
                rates.net(),
                rates.inversion,
                rates.compression
            ),
        ));
    }
    let mut blocks = Vec::new();
    let mut payloads = Vec::new();
    let mut compressed = Vec::new();
    let mut payload = message_bits;
    for j in 0..iterations {
        let n = ceil_tol(payload as f64 / rates.inversion);
        if n < min_block {
            return Err(Error::param(
                "iterations",
                format!(
                    "block {} would have {n} symbols, below the minimum of {min_block}",
                    j + 1
                ),
            ));
        }
        let c = ceil_tol(n as f64 * rates.compression);
        blocks.push(n);
        payloads.push(payload);
        compressed.push(c);
        if c == 0 {
            break;
        }
        payload = c;
    }
    Ok(GpSchedule {
        message_bits,
        blocks,
        payloads,
        compressed,
        termination,
        rates,
    })
}

/// Typicality slacks and binning seed for a session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpCodecConfig {
    /// Slack for inverse binning against the state.
    pub inversion: TypicalitySpec,
    /// Slack for decoding against the channel output.
    pub decoding: TypicalitySpec,
    pub hash_seed: u64,
}

/// Per-block binning codes. Each block has one code keyed to the state law
/// (payload bits) and one keyed to the output law (compressed bits).
#[derive(Debug, Clone)]
pub struct GpCodebook {
    pub inversion: Vec<BinningCode>,
    pub compression: Vec<BinningCode>,
}

impl GpCodebook {
    pub fn new(schedule: &GpSchedule, law: &GpLaw, cfg: &GpCodecConfig) -> Self {
        let u_s = law.u_given_s();
        let u_y = law.u_given_y();
        let mut inversion = Vec::new();
        let mut compression = Vec::new();
        for (j, &n) in schedule.blocks.iter().enumerate() {
            let j = j as u64;
            inversion.push(BinningCode::new(
                n,
                schedule.payloads[j as usize],
                derive_seed(cfg.hash_seed, 2 * j),
                u_s.clone(),
                cfg.inversion,
            ));
            compression.push(BinningCode::new(
                n,
                schedule.compressed[j as usize],
                derive_seed(cfg.hash_seed, 2 * j + 1),
                u_y.clone(),
                cfg.decoding,
            ));
        }
        GpCodebook { inversion, compression }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelBlock {
    pub s: Vec<usize>,
    pub u: Vec<usize>,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpBlockRecord {
    pub payload: Bits,
    pub channel: ChannelBlock,
    /// Bin index of the block against the output, sent on as the next
    /// payload.
    pub compressed: Bits,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpTranscript {
    pub message: Bits,
    pub blocks: Vec<GpBlockRecord>,
    pub termination_payload: Bits,
    pub termination: ChannelBlock,
    pub termination_decoded: Bits,
    pub decoded: Result<Bits>,
}

impl GpTranscript {
    pub fn is_correct(&self) -> bool {
        self.decoded.as_ref().is_ok_and(|d| *d == self.message)
    }

    pub fn termination_correct(&self) -> bool {
        self.termination_decoded == self.termination_payload
    }
}

/// Run the transmitter, channel, feedback loop and termination code, then
/// decode at the receiver. Inversion failures abort with the block index.
pub fn run_gp_session<R: Rng + ?Sized>(
    schedule: &GpSchedule,
    law: &GpLaw,
    codebook: &GpCodebook,
    message: &[bool],
    rng: &mut R,
) -> Result<GpTranscript> {
    if message.len() != schedule.message_bits {
        return Err(Error::LengthMismatch {
            name: "message",
            expected: schedule.message_bits,
            got: message.len(),
        });
    }
    let mut blocks = Vec::with_capacity(schedule.iterations());
    let mut payload: Bits = message.to_vec();
    for (j, &n) in schedule.blocks.iter().enumerate() {
        let s: Vec<usize> = (0..n).map(|_| law.channel.sample_state(rng)).collect();
        let u = sw_invert(&payload, &s, &codebook.inversion[j]).map_err(Error::at_stage(j + 1))?;
        let x: Vec<usize> = u.iter().zip(&s).map(|(&u, &s)| law.input(u, s)).collect();
        let y: Vec<usize> = x
            .iter()
            .zip(&s)
            .map(|(&x, &s)| law.channel.sample_output(rng, x, s))
            .collect();
        // feedback: the transmitter now knows y and recompresses u
        let compressed = sw_encode(&u, &codebook.compression[j]);
        blocks.push(GpBlockRecord {
            payload: std::mem::replace(&mut payload, compressed.clone()),
            channel: ChannelBlock { s, u, x, y },
            compressed,
        });
    }
    let termination = schedule.termination.transmit(&payload, law, rng);
    let termination_decoded = schedule.termination.decode(&termination.y, law);
    let y_blocks: Vec<&[usize]> = blocks.iter().map(|b| b.channel.y.as_slice()).collect();
    let decoded = decode_gp_chain(&y_blocks, &termination_decoded, codebook);
    Ok(GpTranscript {
        message: message.to_vec(),
        blocks,
        termination_payload: payload,
        termination,
        termination_decoded,
        decoded,
    })
}

/// Receiver: starting from the termination output, recover each block by
/// typicality decoding against its outputs and re-derive that block's
/// payload from the state-keyed bins.
pub fn decode_gp_chain(y_blocks: &[&[usize]], termination: &[bool], codebook: &GpCodebook) -> Result<Bits> {
    let k = codebook.inversion.len();
    if y_blocks.len() != k {
        return Err(Error::LengthMismatch {
            name: "y_blocks",
            expected: k,
            got: y_blocks.len(),
        });
    }
    let mut bits: Bits = termination.to_vec();
    for j in (0..k).rev() {
        bits = decode_gp_stage(&bits, y_blocks[j], codebook, j).map_err(Error::at_stage(j + 1))?;
    }
    Ok(bits)
}

fn decode_gp_stage(bits: &[bool], y: &[usize], codebook: &GpCodebook, j: usize) -> Result<Bits, CodecError> {
    let u = sw_decode(bits, y, &codebook.compression[j])?;
    Ok(sw_encode(&u, &codebook.inversion[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::law::{ConditionalLaw, GpChannel};
    use crate::rng::rng_from_seed;

    fn exact(h_us: f64, h_uy: f64) -> GpRates {
        GpRates {
            inversion: h_us,
            compression: h_uy,
        }
    }

    #[test]
    fn halving_schedule() {
        let s = plan_schedule(16, exact(1.0, 0.5), 3, 1, RepetitionCode::new(1).unwrap()).unwrap();
        assert_eq!(s.blocks, vec![16, 8, 4]);
        assert_eq!(s.cumulative(), vec![16, 24, 28]);
        assert_eq!(s.termination_bits(), 2);
        for k in 1..=6 {
            let s = plan_schedule(16, exact(1.0, 0.5), k, 1, RepetitionCode::new(3).unwrap()).unwrap();
            assert!(s.block_uses() as f64 <= 32.0);
            assert!(s.channel_uses() as f64 <= s.channel_use_bound() + 1e-12);
        }
    }

    #[test]
    fn single_iteration_schedule() {
        let s = plan_schedule(12, exact(0.75, 0.25), 1, 1, RepetitionCode::new(1).unwrap()).unwrap();
        assert_eq!(s.blocks, vec![16]);
        assert_eq!(s.termination_bits(), 4);
        assert_eq!(s.termination_len(), 4);
    }

    #[test]
    fn schedule_rejects_bad_inputs() {
        let rep = RepetitionCode::new(1).unwrap();
        assert!(plan_schedule(16, exact(0.5, 0.5), 2, 1, rep).is_err());
        assert!(plan_schedule(16, exact(1.0, 0.5), 5, 2, rep).is_err());
        assert!(plan_schedule(0, exact(1.0, 0.5), 1, 1, rep).is_err());
        assert!(RepetitionCode::new(0).is_err());
    }

    #[test]
    fn dimension_chain() {
        let s = plan_schedule(40, exact(0.9, 0.3), 4, 1, RepetitionCode::new(1).unwrap()).unwrap();
        for j in 1..s.iterations() {
            assert_eq!(s.payloads[j], s.compressed[j - 1]);
        }
    }

    #[test]
    fn repetition_tail() {
        assert!((repetition_error(0.1, 5) - 0.00856).abs() < 1e-5);
        assert_eq!(repetition_error(0.0, 1), 0.0);
        assert!((repetition_error(0.2, 1) - 0.2).abs() < 1e-15);
    }

    fn additive_law(flip: f64) -> GpLaw {
        GpLaw::new(
            GpChannel::binary_additive(0.5, flip).unwrap(),
            ConditionalLaw::new(vec![vec![0.5, 0.5]; 2]).unwrap(),
            vec![vec![0, 1], vec![1, 0]],
        )
        .unwrap()
    }

    #[test]
    fn termination_on_noisy_mapping() {
        let law = additive_law(0.1);
        let rep = RepetitionCode::new(5).unwrap();
        assert!((rep.bit_error(&law) - 0.00856).abs() < 1e-5);
        let mut rng = rng_from_seed(3);
        let bits: Bits = (0..4000).map(|i| i % 3 == 0).collect();
        let block = rep.transmit(&bits, &law, &mut rng);
        assert_eq!(block.y.len(), 5 * bits.len());
        let wrong = rep
            .decode(&block.y, &law)
            .iter()
            .zip(&bits)
            .filter(|(a, b)| a != b)
            .count();
        let rate = wrong as f64 / bits.len() as f64;
        let se = (0.00856f64 * (1.0 - 0.00856) / bits.len() as f64).sqrt();
        assert!((rate - 0.00856).abs() < 4.0 * se, "termination bit error {rate}");
    }

    #[test]
    fn noiseless_channel_always_recovers() {
        let law = additive_law(0.0);
        // at zero slack each bin holds a single sequence, so inversion must
        // accept anything
        let cfg = GpCodecConfig {
            inversion: TypicalitySpec::new(1.0).unwrap(),
            decoding: TypicalitySpec::new(0.01).unwrap(),
            hash_seed: 17,
        };
        // zero slack: the compressed index is empty and the chain stops
        let s = plan_schedule(8, GpRates::from_law(&law, 0.0), 3, 1, RepetitionCode::new(1).unwrap()).unwrap();
        assert_eq!(s.blocks, vec![8]);
        assert_eq!(s.termination_len(), 0);
        let book = GpCodebook::new(&s, &law, &cfg);
        for seed in 0..50 {
            let mut rng = rng_from_seed(seed);
            let msg: Bits = (0..8).map(|_| rng.random_bool(0.5)).collect();
            let t = run_gp_session(&s, &law, &book, &msg, &mut rng).unwrap();
            assert!(t.is_correct(), "seed {seed}");
        }
    }

    #[test]
    fn transcript_invariants_and_determinism() {
        let law = additive_law(0.002);
        let cfg = GpCodecConfig {
            inversion: TypicalitySpec::new(0.3).unwrap(),
            decoding: TypicalitySpec::new(0.01).unwrap(),
            hash_seed: 5,
        };
        let s = plan_schedule(12, GpRates::from_law(&law, 0.15), 2, 4, RepetitionCode::new(5).unwrap()).unwrap();
        let book = GpCodebook::new(&s, &law, &cfg);
        let msg: Bits = (0..12).map(|i| i % 5 < 2).collect();
        let a = run_gp_session(&s, &law, &book, &msg, &mut rng_from_seed(9)).unwrap();
        let b = run_gp_session(&s, &law, &book, &msg, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
        for blk in &a.blocks {
            for i in 0..blk.channel.x.len() {
                assert_eq!(blk.channel.x[i], law.input(blk.channel.u[i], blk.channel.s[i]));
            }
        }
        for j in 1..a.blocks.len() {
            assert_eq!(a.blocks[j].payload, a.blocks[j - 1].compressed);
        }
    }

    #[test]
    fn corrupted_last_block_is_flagged() {
        let law = additive_law(0.002);
        let cfg = GpCodecConfig {
            inversion: TypicalitySpec::new(0.3).unwrap(),
            decoding: TypicalitySpec::new(0.01).unwrap(),
            hash_seed: 5,
        };
        let s = plan_schedule(12, GpRates::from_law(&law, 0.15), 2, 4, RepetitionCode::new(5).unwrap()).unwrap();
        let book = GpCodebook::new(&s, &law, &cfg);
        let msg: Bits = (0..12).map(|i| i % 2 == 0).collect();
        let mut flagged = 0;
        for seed in 0..20 {
            let t = run_gp_session(&s, &law, &book, &msg, &mut rng_from_seed(seed)).unwrap();
            let mut ys: Vec<Vec<usize>> = t.blocks.iter().map(|b| b.channel.y.clone()).collect();
            ys.last_mut().unwrap()[0] ^= 1;
            let refs: Vec<&[usize]> = ys.iter().map(Vec::as_slice).collect();
            let out = decode_gp_chain(&refs, &t.termination_payload, &book);
            flagged += out.as_ref().map_or(true, |d| *d != msg) as usize;
        }
        assert!(flagged >= 16, "only {flagged} of 20 corruptions changed the outcome");
    }
}

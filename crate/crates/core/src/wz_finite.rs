//! Lossy coding of a finite source with decoder side information and
//! feedforward of past source symbols.
//!
//! The encoder reverses the source and cuts it into blocks of growing
//! length `l_0, l_1, ...`. Block 0 gets an auxiliary sequence drawn from
//! `p(u|x)`; each later block's auxiliary sequence is the shaper image of
//! the previous block's bin index. Only the last bin index is sent. The
//! decoder handles the blocks last to first, which is first to last in
//! time: it decodes a block against its side information, emits the
//! reconstruction, receives that block's source symbols by feedforward and
//! unshapes to get the bin index of the block before.

use rand::Rng;

use crate::error::{CodecError, Error, Result};
use crate::gp_finite::ceil_tol;
use crate::info::law::WzLaw;
use crate::info::measures::info_measures;
use crate::info::typical::TypicalitySpec;
use crate::rng::derive_seed;
use crate::sw::{sw_decode, sw_encode, u128_to_bits, BinningCode, Bits, Shaper};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WzRates {
    /// Bits per symbol the shaper is assumed to absorb.
    pub shaping: f64,
    /// Bits per symbol of the bin index sent to a decoder holding `Y`.
    pub compression: f64,
}

impl WzRates {
    /// `H(U|X) - slack` and `H(U|Y) + slack`.
    pub fn from_law(law: &WzLaw, slack: f64) -> Self {
        let m = info_measures(&law.joint());
        WzRates {
            shaping: m.h_u_given_x - slack,
            compression: m.h_u_given_y + slack,
        }
    }

    pub fn ratio(&self) -> f64 {
        self.compression / self.shaping
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WzSchedule {
    /// `l_0 .. l_{k-1}` in the reversed stream.
    pub blocks: Vec<usize>,
    /// Bin-index length of each block.
    pub compressed: Vec<usize>,
    pub rates: WzRates,
}

impl WzSchedule {
    pub fn iterations(&self) -> usize {
        self.blocks.len()
    }

    pub fn total_len(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn emitted_bits(&self) -> usize {
        *self.compressed.last().expect("non-empty schedule")
    }

    pub fn rate(&self) -> f64 {
        self.emitted_bits() as f64 / self.total_len() as f64
    }

    /// `R_y - R_x`, approached as the number of blocks grows.
    pub fn rate_limit(&self) -> f64 {
        self.rates.compression - self.rates.shaping
    }

    /// Start of each block in the reversed stream.
    pub fn offsets(&self) -> Vec<usize> {
        let mut t = 0;
        self.blocks
            .iter()
            .map(|&l| {
                let start = t;
                t += l;
                start
            })
            .collect()
    }

    /// Range of block `j` in the original stream, as `start..end`.
    pub fn original_range(&self, j: usize) -> std::ops::Range<usize> {
        let n = self.total_len();
        let t = self.offsets()[j];
        n - t - self.blocks[j]..n - t
    }
}

/// `c_j = ceil(l_j R_y)`, `l_{j+1} = ceil(c_j / R_x)`.
pub fn wz_plan(base_len: usize, iterations: usize, rates: WzRates) -> Result<WzSchedule> {
    if base_len == 0 {
        return Err(Error::param("base_len", "must be positive"));
    }
    if iterations == 0 {
        return Err(Error::param("iterations", "must be at least 1"));
    }
    if !(rates.compression >= 0.0) {
        return Err(Error::param("rates", "compression rate must be non-negative"));
    }
    if iterations > 1 && !(rates.shaping > 0.0 && rates.ratio() >= 1.0 - 1e-12) {
        return Err(Error::param(
            "rates",
            format!(
                "block ratio {:.6} must be at least 1 (shaping {:.6}, compression {:.6})",
                rates.ratio(),
                rates.shaping,
                rates.compression
            ),
        ));
    }
    let mut blocks = vec![base_len];
    let mut compressed = vec![ceil_tol(base_len as f64 * rates.compression)];
    for _ in 1..iterations {
        let l = ceil_tol(*compressed.last().unwrap() as f64 / rates.shaping).max(1);
        blocks.push(l);
        compressed.push(ceil_tol(l as f64 * rates.compression));
    }
    Ok(WzSchedule {
        blocks,
        compressed,
        rates,
    })
}

/// How the encoder fills shaper index bits beyond the payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadPolicy {
    /// All zeros; the decoder checks them.
    Zero,
    /// Drawn with probability proportional to `p(u^n | x^n)` of the image,
    /// over all pads or `candidates` random ones if there are more. Lex
    /// enumeration alone spreads images uniformly over the typical set;
    /// this tilts them back toward the law. The decoder ignores the pad.
    Weighted { candidates: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WzCodecConfig {
    pub shaping: TypicalitySpec,
    pub decoding: TypicalitySpec,
    pub hash_seed: u64,
    pub pad: PadPolicy,
}

#[derive(Debug, Clone)]
pub struct WzCodebook {
    pub shaper: Shaper,
    pub codes: Vec<BinningCode>,
    pub pad: PadPolicy,
}

impl WzCodebook {
    pub fn new(schedule: &WzSchedule, law: &WzLaw, cfg: &WzCodecConfig) -> Self {
        let u_y = law.u_given_y();
        let codes = schedule
            .blocks
            .iter()
            .zip(&schedule.compressed)
            .enumerate()
            .map(|(j, (&l, &c))| {
                BinningCode::new(l, c, derive_seed(cfg.hash_seed, j as u64), u_y.clone(), cfg.decoding)
            })
            .collect();
        WzCodebook {
            shaper: Shaper::new(law.u_given_x(), cfg.shaping),
            codes,
            pad: cfg.pad,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WzStage {
    /// Auxiliary block, in reversed-stream order.
    pub u: Vec<usize>,
    pub bits: Bits,
}

fn reversed_block(stream: &[usize], schedule: &WzSchedule, j: usize) -> Vec<usize> {
    stream[schedule.original_range(j)].iter().rev().copied().collect()
}

/// Encode `x^n` (original order). Returns every stage; the last stage's
/// bits are what is sent. Shaper failures carry the stage index.
pub fn wz_ff_encode<R: Rng + ?Sized>(
    x: &[usize],
    schedule: &WzSchedule,
    law: &WzLaw,
    book: &WzCodebook,
    rng: &mut R,
) -> Result<Vec<WzStage>> {
    if x.len() != schedule.total_len() {
        return Err(Error::LengthMismatch {
            name: "x",
            expected: schedule.total_len(),
            got: x.len(),
        });
    }
    let mut stages: Vec<WzStage> = Vec::with_capacity(schedule.iterations());
    for j in 0..schedule.iterations() {
        let xb = reversed_block(x, schedule, j);
        let u = match stages.last() {
            None => xb.iter().map(|&s| law.aux.sample(rng, s)).collect(),
            Some(prev) => shape_stage(book, law, &prev.bits, &xb, rng).map_err(Error::at_stage(j))?,
        };
        let bits = sw_encode(&u, &book.codes[j]);
        stages.push(WzStage { u, bits });
    }
    Ok(stages)
}

fn shape_stage<R: Rng + ?Sized>(
    book: &WzCodebook,
    law: &WzLaw,
    payload: &[bool],
    x: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>, CodecError> {
    let candidates = match book.pad {
        PadPolicy::Zero => return book.shaper.shape_payload(payload, x),
        PadPolicy::Weighted { candidates } => candidates.max(1),
    };
    let free = book.shaper.pad_len(payload.len(), x)?;
    let pads: Vec<Bits> = if free < 64 && (1u64 << free) <= candidates as u64 {
        (0..1u128 << free).map(|v| u128_to_bits(v, free)).collect()
    } else {
        (0..candidates)
            .map(|_| (0..free).map(|_| rng.random_bool(0.5)).collect())
            .collect()
    };
    let mut images = Vec::with_capacity(pads.len());
    let mut log_w = Vec::with_capacity(pads.len());
    for pad in &pads {
        let u = book.shaper.shape_padded(payload, pad, x)?;
        log_w.push(u.iter().zip(x).map(|(&u, &x)| law.aux.prob(x, u).ln()).sum::<f64>());
        images.push(u);
    }
    let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_w.iter().map(|w| (w - top).exp()).collect();
    Ok(images.swap_remove(sample_pmf_unnormalised(rng, &weights)))
}

fn sample_pmf_unnormalised<R: Rng + ?Sized>(rng: &mut R, w: &[f64]) -> usize {
    let total: f64 = w.iter().sum();
    let mut t = rng.random::<f64>() * total;
    for (i, &v) in w.iter().enumerate() {
        if t < v {
            return i;
        }
        t -= v;
    }
    w.len() - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Emit { start: usize, end: usize },
    Reveal { start: usize, end: usize },
}

/// Decoder-side view of the source: reconstructions go in, source symbols
/// come out only for positions already reconstructed. Every access is
/// logged.
#[derive(Debug, Clone)]
pub struct FeedforwardLink<'a> {
    source: &'a [usize],
    xhat: Vec<Option<usize>>,
    log: Vec<Access>,
}

impl<'a> FeedforwardLink<'a> {
    pub fn new(source: &'a [usize]) -> Self {
        FeedforwardLink {
            source,
            xhat: vec![None; source.len()],
            log: Vec::new(),
        }
    }

    pub fn emit(&mut self, start: usize, values: &[usize]) {
        let end = start + values.len();
        for (slot, &v) in self.xhat[start..end].iter_mut().zip(values) {
            assert!(slot.is_none(), "position reconstructed twice");
            *slot = Some(v);
        }
        self.log.push(Access::Emit { start, end });
    }

    /// Source symbols of `start..end`; fails if any of them has not been
    /// reconstructed yet.
    pub fn reveal(&mut self, start: usize, end: usize) -> Result<&'a [usize]> {
        if let Some(i) = (start..end).find(|&i| self.xhat[i].is_none()) {
            return Err(Error::param(
                "feedforward",
                format!("position {i} requested before reconstruction"),
            ));
        }
        self.log.push(Access::Reveal { start, end });
        Ok(&self.source[start..end])
    }

    pub fn log(&self) -> &[Access] {
        &self.log
    }

    pub fn reconstruction(&self) -> Option<Vec<usize>> {
        self.xhat.iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WzDecoding {
    pub xhat: Vec<usize>,
    /// Decoded auxiliary block of each stage, reversed-stream order.
    pub u_hat: Vec<Vec<usize>>,
    /// `recovered[j]` is the bin index of stage `j` as recovered by
    /// unshaping stage `j + 1`; the last entry is the received bits.
    pub recovered: Vec<Bits>,
}

/// Decode the received bits against `y^n` (original order), pulling source
/// symbols through the feedforward link.
pub fn wz_ff_decode(
    bits: &[bool],
    y: &[usize],
    link: &mut FeedforwardLink<'_>,
    schedule: &WzSchedule,
    law: &WzLaw,
    book: &WzCodebook,
) -> Result<WzDecoding> {
    let k = schedule.iterations();
    if y.len() != schedule.total_len() {
        return Err(Error::LengthMismatch {
            name: "y",
            expected: schedule.total_len(),
            got: y.len(),
        });
    }
    let mut u_hat = vec![Vec::new(); k];
    let mut recovered = vec![Vec::new(); k];
    let mut current: Bits = bits.to_vec();
    for j in (0..k).rev() {
        let range = schedule.original_range(j);
        let yb = reversed_block(y, schedule, j);
        let u = sw_decode(&current, &yb, &book.codes[j]).map_err(Error::at_stage(j))?;
        let xhat_rev: Vec<usize> = u.iter().zip(&yb).map(|(&u, &y)| law.reconstruct(u, y)).collect();
        let xhat: Vec<usize> = xhat_rev.into_iter().rev().collect();
        link.emit(range.start, &xhat);
        recovered[j] = std::mem::take(&mut current);
        if j > 0 {
            let xb: Vec<usize> = link.reveal(range.start, range.end)?.iter().rev().copied().collect();
            let len = schedule.compressed[j - 1];
            current = match book.pad {
                PadPolicy::Zero => book.shaper.unshape_payload(&u, &xb, len),
                PadPolicy::Weighted { .. } => book.shaper.unshape_prefix(&u, &xb, len),
            }
            .map_err(Error::at_stage(j))?;
        }
        u_hat[j] = u;
    }
    let xhat = link.reconstruction().expect("every block emitted");
    Ok(WzDecoding { xhat, u_hat, recovered })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WzTranscript {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub stages: Result<Vec<WzStage>>,
    pub decoding: Result<WzDecoding>,
    pub feedforward_log: Vec<Access>,
}

impl WzTranscript {
    pub fn encoded(&self) -> bool {
        self.stages.is_ok()
    }

    pub fn decoded(&self) -> bool {
        self.decoding.is_ok()
    }

    pub fn emitted(&self) -> Option<&Bits> {
        self.stages.as_ref().ok().and_then(|s| s.last()).map(|s| &s.bits)
    }

    pub fn distortion(&self, law: &WzLaw) -> Option<f64> {
        let d = self.decoding.as_ref().ok()?;
        let total: f64 = self
            .x
            .iter()
            .zip(&d.xhat)
            .map(|(&x, &h)| law.source.distortion[x][h])
            .sum();
        Some(total / self.x.len() as f64)
    }

    /// On an error-free trial, unshaping at each stage gives back exactly
    /// the bin index the encoder produced at the stage before.
    pub fn stage_inverse_holds(&self) -> Option<bool> {
        let stages = self.stages.as_ref().ok()?;
        let d = self.decoding.as_ref().ok()?;
        Some(stages.iter().zip(&d.recovered).all(|(s, r)| s.bits == *r))
    }
}

/// Draw `(x^n, y^n)` i.i.d., encode, and decode with feedforward.
pub fn run_wz_trial<R: Rng + ?Sized>(
    schedule: &WzSchedule,
    law: &WzLaw,
    book: &WzCodebook,
    rng: &mut R,
) -> WzTranscript {
    let n = schedule.total_len();
    let (x, y): (Vec<usize>, Vec<usize>) = (0..n).map(|_| law.source.sample_pair(rng)).unzip();
    let stages = wz_ff_encode(&x, schedule, law, book, rng);
    let mut link = FeedforwardLink::new(&x);
    let decoding = match &stages {
        Ok(st) => wz_ff_decode(&st.last().expect("non-empty").bits, &y, &mut link, schedule, law, book),
        Err(e) => Err(e.clone()),
    };
    let feedforward_log = link.log().to_vec();
    WzTranscript {
        x,
        y,
        stages,
        decoding,
        feedforward_log,
    }
}

/// Whether a feedforward log only ever reveals positions reconstructed
/// earlier in the log.
pub fn log_is_causal(log: &[Access], len: usize) -> bool {
    let mut emitted = vec![false; len];
    for a in log {
        match *a {
            Access::Emit { start, end } => emitted[start..end].iter_mut().for_each(|e| *e = true),
            Access::Reveal { start, end } => {
                if !emitted[start..end].iter().all(|&e| e) {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::law::{ConditionalLaw, WzSource};
    use crate::rng::rng_from_seed;

    fn exact(h_ux: f64, h_uy: f64) -> WzRates {
        WzRates {
            shaping: h_ux,
            compression: h_uy,
        }
    }

    #[test]
    fn doubling_schedule() {
        let s = wz_plan(4, 3, exact(0.25, 0.5)).unwrap();
        assert_eq!(s.blocks, vec![4, 8, 16]);
        assert_eq!(s.total_len(), 28);
        assert_eq!(s.emitted_bits(), 8);
        assert!((s.rate() - 8.0 / 28.0).abs() < 1e-15);
        assert!((s.rate_limit() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn single_stage_and_unit_ratio() {
        let s = wz_plan(10, 1, exact(0.3, 0.6)).unwrap();
        assert_eq!(s.total_len(), 10);
        assert!((s.rate() - 0.6).abs() < 1e-15);
        let s = wz_plan(8, 4, exact(0.5, 0.5)).unwrap();
        assert_eq!(s.blocks, vec![8; 4]);
        assert!(wz_plan(8, 2, exact(0.6, 0.5)).is_err());
    }

    #[test]
    fn original_ranges_tile_the_stream() {
        let s = wz_plan(4, 3, exact(0.25, 0.5)).unwrap();
        assert_eq!(s.original_range(2), 0..16);
        assert_eq!(s.original_range(1), 16..24);
        assert_eq!(s.original_range(0), 24..28);
    }

    #[test]
    fn feedforward_link_refuses_future_symbols() {
        let x = vec![1, 0, 1, 1];
        let mut link = FeedforwardLink::new(&x);
        assert!(link.reveal(0, 2).is_err());
        link.emit(0, &[1, 1]);
        assert_eq!(link.reveal(0, 2).unwrap(), &[1, 0]);
        assert!(link.reveal(1, 3).is_err());
        assert!(log_is_causal(link.log(), 4));
        assert!(!log_is_causal(&[Access::Reveal { start: 0, end: 1 }], 4));
    }

    fn lossless_law() -> WzLaw {
        let src = WzSource::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]], None).unwrap();
        WzLaw::new(src, ConditionalLaw::identity(2), vec![vec![0, 0], vec![1, 1]]).unwrap()
    }

    #[test]
    fn lossless_collapse() {
        let law = lossless_law();
        let rates = WzRates::from_law(&law, 0.0);
        assert_eq!(rates.compression, 0.0);
        let s = wz_plan(6, 1, rates).unwrap();
        let cfg = WzCodecConfig {
            shaping: TypicalitySpec::new(0.1).unwrap(),
            decoding: TypicalitySpec::new(0.1).unwrap(),
            hash_seed: 3,
            pad: PadPolicy::Zero,
        };
        let book = WzCodebook::new(&s, &law, &cfg);
        for seed in 0..20 {
            let t = run_wz_trial(&s, &law, &book, &mut rng_from_seed(seed));
            assert_eq!(t.distortion(&law), Some(0.0));
        }
    }

    fn symmetric_law() -> WzLaw {
        WzLaw::new(
            WzSource::doubly_symmetric(0.25).unwrap(),
            ConditionalLaw::binary_symmetric(0.1).unwrap(),
            vec![vec![0, 0], vec![1, 1]],
        )
        .unwrap()
        .with_bayes_map()
    }

    #[test]
    fn single_stage_is_binning_plus_map() {
        let law = symmetric_law();
        let s = wz_plan(10, 1, WzRates::from_law(&law, 0.1)).unwrap();
        let cfg = WzCodecConfig {
            shaping: TypicalitySpec::new(0.05).unwrap(),
            decoding: TypicalitySpec::new(1.0).unwrap(),
            hash_seed: 4,
            pad: PadPolicy::Zero,
        };
        let book = WzCodebook::new(&s, &law, &cfg);
        let t = run_wz_trial(&s, &law, &book, &mut rng_from_seed(1));
        let st = t.stages.as_ref().unwrap();
        assert_eq!(st[0].bits, sw_encode(&st[0].u, &book.codes[0]));
        let d = t.decoding.as_ref().unwrap();
        let expect: Vec<usize> = st[0]
            .u
            .iter()
            .rev()
            .zip(&t.y)
            .map(|(&u, &y)| law.reconstruct(u, y))
            .collect();
        assert_eq!(d.xhat, expect);
    }

    #[test]
    fn two_stage_trials_are_causal_and_invertible() {
        let law = symmetric_law();
        let s = wz_plan(10, 2, WzRates::from_law(&law, 0.1)).unwrap();
        assert_eq!(s.blocks, vec![10, 28]);
        let cfg = WzCodecConfig {
            shaping: TypicalitySpec::new(0.05).unwrap(),
            decoding: TypicalitySpec::new(1.0).unwrap(),
            hash_seed: 8,
            pad: PadPolicy::Weighted { candidates: 64 },
        };
        let book = WzCodebook::new(&s, &law, &cfg);
        let mut ok = 0;
        for seed in 0..100 {
            let t = run_wz_trial(&s, &law, &book, &mut rng_from_seed(seed));
            assert!(log_is_causal(&t.feedforward_log, s.total_len()));
            if let Some(inv) = t.stage_inverse_holds() {
                assert!(inv);
                ok += 1;
            }
        }
        assert!(ok >= 90, "{ok} of 100 trials completed");
    }
}

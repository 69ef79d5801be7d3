//! Rate-distortion coding with feedforward for Gaussian sources, and its
//! Wyner–Ziv extension with side information `X_i = Y_i + N_i`.
//!
//! The encoder sends one scalar: the cell index of a linear statistic of the
//! whole block. The decoder unrolls that statistic one sample at a time,
//! using the past source samples revealed through feedforward.

use rand::Rng;

use crate::dirty_paper::gaussian_sequence;
use crate::error::{Error, Result};
use crate::stats::Estimate;

const MAX_INDEX_BITS: f64 = 62.0;

/// Block quantizer parameters. `beta = 2^(R - 2 eps)`, `Delta = 2^(l eps)`,
/// `M = ceil(2^(R l))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FfQuantizerSpec {
    pub block_len: usize,
    pub rate: f64,
    pub epsilon: f64,
    pub source_var: f64,
    pub beta: f64,
    pub interval: f64,
    pub levels: u64,
}

impl FfQuantizerSpec {
    pub fn new(block_len: usize, rate: f64, epsilon: f64, source_var: f64) -> Result<Self> {
        if block_len == 0 {
            return Err(Error::param("block_len", "must be >= 1"));
        }
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::param("rate", format!("must be > 0, got {rate}")));
        }
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::param("epsilon", format!("must be > 0, got {epsilon}")));
        }
        if !source_var.is_finite() || source_var < 0.0 {
            return Err(Error::param("source_var", format!("must be >= 0, got {source_var}")));
        }
        let bits = rate * block_len as f64;
        if bits > MAX_INDEX_BITS {
            return Err(Error::param(
                "rate",
                format!("R*l = {bits} exceeds {MAX_INDEX_BITS} bits"),
            ));
        }
        let beta = 2f64.powf(rate - 2.0 * epsilon);
        if block_len >= 2 && beta <= 1.0 {
            return Err(Error::param(
                "epsilon",
                format!("beta = {beta} must exceed 1 (need R > 2 eps)"),
            ));
        }
        Ok(FfQuantizerSpec {
            block_len,
            rate,
            epsilon,
            source_var,
            beta,
            interval: 2f64.powf(block_len as f64 * epsilon),
            levels: (2f64.powf(bits).ceil() as u64).max(1),
        })
    }

    /// Cell width `Delta / M`.
    pub fn resolution(&self) -> f64 {
        self.interval / self.levels as f64
    }

    /// Limiting distortion `sigma^2 / beta^2 = sigma^2 2^(-2(R - 2 eps))`.
    pub fn limit_distortion(&self) -> f64 {
        self.source_var / (self.beta * self.beta)
    }

    /// Right side of the distortion identity for a given `E(Y - Yhat)^2`.
    pub fn identity_rhs(&self, quant_mse: f64) -> f64 {
        let l = self.block_len as f64;
        let b2 = self.beta * self.beta;
        quant_mse * b2.powi(self.block_len as i32) / l + self.source_var * (l * b2 - b2) / (l * b2 * b2)
    }

    /// Expected distortion with no truncation, using the high-resolution
    /// quantization error `(Delta / M)^2 / 12`.
    pub fn untruncated_distortion(&self) -> f64 {
        self.identity_rhs(self.resolution().powi(2) / 12.0)
    }

    /// Variance of the statistic for i.i.d. inputs of unit variance.
    pub fn statistic_gain(&self) -> f64 {
        statistic_coefficients(self.block_len, self.beta)
            .iter()
            .map(|c| c * c)
            .sum()
    }
}

/// Index of a quantization cell in `[0, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex(pub u64);

/// Coefficients `c_1 = -1/beta`, `c_k = -sqrt(beta^2 - 1) beta^-(k+1)`.
pub fn statistic_coefficients(len: usize, beta: f64) -> Vec<f64> {
    let root = (beta * beta - 1.0).max(0.0).sqrt();
    (1..=len)
        .map(|k| {
            if k == 1 {
                -1.0 / beta
            } else {
                -root * beta.powi(-(k as i32 + 1))
            }
        })
        .collect()
}

/// The scalar statistic `Y = -sum_{k>=2} sqrt(beta^2-1) beta^-(k+1) x_k - x_1 / beta`.
pub fn build_statistic(x: &[f64], beta: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::param("x", "block must be non-empty"));
    }
    if x.len() >= 2 && !(beta > 1.0) {
        return Err(Error::param(
            "beta",
            format!("must exceed 1 for blocks of length >= 2, got {beta}"),
        ));
    }
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::param("beta", format!("must be finite and nonzero, got {beta}")));
    }
    Ok(statistic_coefficients(x.len(), beta)
        .iter()
        .zip(x)
        .map(|(c, v)| c * v)
        .sum())
}

/// Center of cell `index`.
pub fn cell_center(index: CellIndex, spec: &FfQuantizerSpec) -> f64 {
    -spec.interval / 2.0 + (index.0 as f64 + 0.5) * spec.resolution()
}

/// Uniform `M`-level quantizer on `[-Delta/2, Delta/2]`. Boundaries go to the
/// upper cell; values outside the interval go to the nearest extreme cell.
pub fn quantize_uniform(y: f64, spec: &FfQuantizerSpec) -> (CellIndex, f64) {
    let pos = ((y + spec.interval / 2.0) / spec.resolution()).floor();
    let top = spec.levels - 1;
    let idx = if !(pos > 0.0) {
        0
    } else if pos >= top as f64 {
        top
    } else {
        pos as u64
    };
    let idx = CellIndex(idx);
    (idx, cell_center(idx, spec))
}

/// Streaming reconstruction with feedforward. Emits `xhat_i` one at a time;
/// `xhat_i` for `i >= 2` needs the true `x_{i-1}`.
#[derive(Debug, Clone)]
pub struct FeedforwardReconstructor {
    beta: f64,
    root: f64,
    step: usize,
    last: f64,
}

impl FeedforwardReconstructor {
    pub fn new(statistic: f64, beta: f64) -> Self {
        FeedforwardReconstructor {
            beta,
            root: (beta * beta - 1.0).max(0.0).sqrt(),
            step: 0,
            last: statistic,
        }
    }

    /// Next reconstruction. `prev_source` is `x_{i-1}`, ignored for `i = 1`.
    pub fn next(&mut self, prev_source: f64) -> f64 {
        self.step += 1;
        let b = self.beta;
        self.last = match self.step {
            1 => -b * self.last,
            2 => self.root * (self.last - prev_source),
            _ => b * self.last - (b * b - 1.0) / b * prev_source,
        };
        self.last
    }
}

/// Reconstruct a block of length `x.len()` from `yhat`, consuming the
/// feedforward samples `x_1 .. x_{l-1}` causally.
pub fn reconstruct_ff(yhat: f64, x: &[f64], beta: f64) -> Vec<f64> {
    let mut rec = FeedforwardReconstructor::new(yhat, beta);
    (0..x.len())
        .map(|i| rec.next(if i == 0 { 0.0 } else { x[i - 1] }))
        .collect()
}

fn mean_sq_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>() / a.len() as f64
}

/// Encoder: quantize the statistic of the source block.
pub fn wz_encode(x: &[f64], spec: &FfQuantizerSpec) -> Result<CellIndex> {
    check_len(x, spec)?;
    Ok(quantize_uniform(build_statistic(x, spec.beta)?, spec).0)
}

fn check_len(x: &[f64], spec: &FfQuantizerSpec) -> Result<()> {
    if x.len() != spec.block_len {
        return Err(Error::LengthMismatch {
            name: "block",
            expected: spec.block_len,
            got: x.len(),
        });
    }
    Ok(())
}

/// Decoder with side information `y` and feedforward of the past source
/// samples `x`. Shifts the received value by the side-information part of the
/// statistic, reconstructs `N = X - Y` with feedforward `N_{i-1}`, and returns
/// `xhat_i = y_i + Nhat_i`.
pub fn wz_decode(index: CellIndex, y: &[f64], x_feedforward: &[f64], spec: &FfQuantizerSpec) -> Result<Vec<f64>> {
    wz_decode_value(cell_center(index, spec), y, x_feedforward, spec)
}

/// [`wz_decode`] starting from a real-valued description `yhat` instead of a
/// cell index.
pub fn wz_decode_value(yhat: f64, y: &[f64], x_feedforward: &[f64], spec: &FfQuantizerSpec) -> Result<Vec<f64>> {
    check_len(y, spec)?;
    check_len(x_feedforward, spec)?;
    let shifted = yhat - build_statistic(y, spec.beta)?;
    let mut rec = FeedforwardReconstructor::new(shifted, spec.beta);
    Ok((0..spec.block_len)
        .map(|i| {
            let prev_n = if i == 0 { 0.0 } else { x_feedforward[i - 1] - y[i - 1] };
            y[i] + rec.next(prev_n)
        })
        .collect())
}

/// Monte Carlo estimates of both sides of the distortion identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub truncation_rate: f64,
}

impl IdentityCheck {
    /// Standard error of `lhs - rhs` treating the two as independent.
    pub fn combined_se(&self) -> f64 {
        self.lhs.std_error.hypot(self.rhs.std_error)
    }
}

/// Draw `trials` Gaussian blocks, code them without side information and
/// record per-trial `(1/l) sum (x - xhat)^2` and the per-trial right side.
pub fn check_distortion_identity<R: Rng + ?Sized>(spec: &FfQuantizerSpec, trials: usize, rng: &mut R) -> IdentityCheck {
    let mut lhs = Vec::with_capacity(trials);
    let mut rhs = Vec::with_capacity(trials);
    let mut truncated = 0usize;
    for _ in 0..trials {
        let x = gaussian_sequence(rng, spec.source_var, spec.block_len);
        let y = build_statistic(&x, spec.beta).expect("spec guarantees beta > 1");
        if y.abs() > spec.interval / 2.0 {
            truncated += 1;
        }
        let (_, yhat) = quantize_uniform(y, spec);
        let xhat = reconstruct_ff(yhat, &x, spec.beta);
        lhs.push(mean_sq_error(&x, &xhat));
        rhs.push(spec.identity_rhs((y - yhat).powi(2)));
    }
    IdentityCheck {
        lhs: Estimate::from_samples(&lhs),
        rhs: Estimate::from_samples(&rhs),
        truncation_rate: truncated as f64 / trials.max(1) as f64,
    }
}

/// Distortion of the unperturbed scheme and of the same blocks decoded from
/// index `I + offset` (clamped to `[0, M)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessReport {
    pub base: Estimate,
    pub perturbed: Estimate,
}

impl RobustnessReport {
    pub fn relative_change(&self) -> f64 {
        (self.perturbed.mean - self.base.mean).abs() / self.base.mean
    }
}

pub fn shift_index(index: CellIndex, offset: i64, spec: &FfQuantizerSpec) -> CellIndex {
    let top = spec.levels as i128 - 1;
    CellIndex((index.0 as i128 + offset as i128).clamp(0, top) as u64)
}

pub fn perturb_index_robustness<R: Rng + ?Sized>(
    spec: &FfQuantizerSpec,
    offset: i64,
    trials: usize,
    rng: &mut R,
) -> RobustnessReport {
    let mut base = Vec::with_capacity(trials);
    let mut perturbed = Vec::with_capacity(trials);
    for _ in 0..trials {
        let x = gaussian_sequence(rng, spec.source_var, spec.block_len);
        let idx = wz_encode(&x, spec).expect("block length matches");
        let xhat = reconstruct_ff(cell_center(idx, spec), &x, spec.beta);
        base.push(mean_sq_error(&x, &xhat));
        let moved = shift_index(idx, offset, spec);
        let xhat = reconstruct_ff(cell_center(moved, spec), &x, spec.beta);
        perturbed.push(mean_sq_error(&x, &xhat));
    }
    RobustnessReport {
        base: Estimate::from_samples(&base),
        perturbed: Estimate::from_samples(&perturbed),
    }
}

/// Outcome of a Wyner–Ziv Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WzRun {
    pub distortion: Estimate,
    pub truncation_rate: f64,
}

/// Code `trials` blocks with i.i.d. Gaussian side information of variance
/// `si_var` and report the mean squared error.
pub fn simulate_wz<R: Rng + ?Sized>(spec: &FfQuantizerSpec, si_var: f64, trials: usize, rng: &mut R) -> WzRun {
    let mut dist = Vec::with_capacity(trials);
    let mut truncated = 0usize;
    for _ in 0..trials {
        let y = gaussian_sequence(rng, si_var, spec.block_len);
        let n = gaussian_sequence(rng, spec.source_var, spec.block_len);
        let x: Vec<f64> = y.iter().zip(&n).map(|(a, b)| a + b).collect();
        let stat = build_statistic(&x, spec.beta).expect("spec guarantees beta > 1");
        if stat.abs() > spec.interval / 2.0 {
            truncated += 1;
        }
        let idx = quantize_uniform(stat, spec).0;
        let xhat = wz_decode(idx, &y, &x, spec).expect("lengths match");
        dist.push(mean_sq_error(&x, &xhat));
    }
    WzRun {
        distortion: Estimate::from_samples(&dist),
        truncation_rate: truncated as f64 / trials.max(1) as f64,
    }
}

//! Feedback coding for the dirty-paper channel `Y_i = X_i + S_i + Z_i`.
//!
//! A Schalkwijk-style recursion where the transmitter knows the whole
//! interference sequence in advance. The interference is folded into a
//! shifted message point `theta' = theta + psi_{n+1}` and subtracted from
//! each transmitted estimation error, so the receiver's final estimate is
//! exactly the one it would form with no interference at all.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Scalars of the scheme. Immutable once derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFbParams {
    pub power: f64,
    pub noise_var: f64,
    pub interference_var: f64,
    pub horizon: usize,
    pub rate: f64,
    pub num_messages: u64,
    /// `sqrt(1 + P / noise_var)`
    pub alpha: f64,
    /// `sqrt(P / noise_var)`
    pub gain: f64,
}

/// Largest `n * R` for which the message count still fits in a `u64`.
const MAX_MESSAGE_BITS: f64 = 62.0;

/// Build the scheme parameters. The interference variance defaults to zero;
/// set it with [`GaussianFbParams::with_interference_var`].
pub fn derive_params(power: f64, noise_var: f64, horizon: usize, rate: f64) -> Result<GaussianFbParams> {
    if !power.is_finite() || power < 0.0 {
        return Err(Error::param("power", format!("must be finite and >= 0, got {power}")));
    }
    if !noise_var.is_finite() || noise_var <= 0.0 {
        return Err(Error::param(
            "noise_var",
            format!("must be finite and > 0, got {noise_var}"),
        ));
    }
    if horizon < 2 {
        return Err(Error::param("horizon", format!("must be >= 2, got {horizon}")));
    }
    if !rate.is_finite() || rate <= 0.0 {
        return Err(Error::param("rate", format!("must be finite and > 0, got {rate}")));
    }
    let bits = horizon as f64 * rate;
    if bits > MAX_MESSAGE_BITS {
        return Err(Error::param(
            "rate",
            format!("n*R = {bits} exceeds {MAX_MESSAGE_BITS} bits"),
        ));
    }
    let snr = power / noise_var;
    let num_messages = (2f64.powf(bits).ceil() as u64).max(2);
    Ok(GaussianFbParams {
        power,
        noise_var,
        interference_var: 0.0,
        horizon,
        rate,
        num_messages,
        alpha: (1.0 + snr).sqrt(),
        gain: snr.sqrt(),
    })
}

impl GaussianFbParams {
    pub fn with_interference_var(mut self, var: f64) -> Result<Self> {
        if !var.is_finite() || var < 0.0 {
            return Err(Error::param(
                "interference_var",
                format!("must be finite and >= 0, got {var}"),
            ));
        }
        self.interference_var = var;
        Ok(self)
    }

    /// AWGN capacity `0.5 log2(1 + P / noise_var)` in bits per use.
    pub fn capacity(&self) -> f64 {
        0.5 * (1.0 + self.power / self.noise_var).log2()
    }

    /// Variance of the final estimation error, `noise_var / alpha^(2n)`.
    pub fn final_error_variance(&self) -> f64 {
        self.noise_var / self.alpha.powi(2 * self.horizon as i32)
    }

    fn alpha_sq(&self) -> f64 {
        self.alpha * self.alpha
    }

    /// Scale applied to the estimation error at step `i >= 2`: `alpha^(i-1) g`.
    fn step_scale(&self, i: usize) -> f64 {
        self.alpha.powi(i as i32 - 1) * self.gain
    }
}

/// Message point `theta = (m + 1/2) / M`.
pub fn message_to_theta(message: u64, num_messages: u64) -> Result<f64> {
    if num_messages == 0 || message >= num_messages {
        return Err(Error::param(
            "message",
            format!("must satisfy 0 <= m < M, got m={message}, M={num_messages}"),
        ));
    }
    Ok((message as f64 + 0.5) / num_messages as f64)
}

/// Quantize the final estimate to its message interval. Values outside
/// `[0, 1)` clamp to the nearest extreme message.
pub fn decode_message(x_final: f64, num_messages: u64) -> u64 {
    if !(x_final > 0.0) {
        return 0;
    }
    let idx = (x_final * num_messages as f64).floor();
    if idx >= num_messages as f64 {
        num_messages - 1
    } else {
        idx as u64
    }
}

/// Interference pre-cancellation terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftState {
    /// `psi_2 ..= psi_{n+1}`, stored from index 0.
    psi: Vec<f64>,
    pub theta: f64,
    pub theta_prime: f64,
}

impl ShiftState {
    /// `psi_i` for `2 <= i <= n + 1`.
    pub fn psi(&self, i: usize) -> f64 {
        assert!(i >= 2 && i - 2 < self.psi.len(), "psi index {i} out of range");
        self.psi[i - 2]
    }

    pub fn psi_values(&self) -> &[f64] {
        &self.psi
    }

    pub fn psi_final(&self) -> f64 {
        *self.psi.last().expect("psi is never empty")
    }
}

/// Run the shift recursion `psi_2 = S_1 / alpha`,
/// `psi_{i+1} = psi_i + (1 - 1/alpha^2) S_i / (alpha^(i-1) g)`.
pub fn compute_shift(interference: &[f64], theta: f64, params: &GaussianFbParams) -> Result<ShiftState> {
    let n = params.horizon;
    if interference.len() != n {
        return Err(Error::LengthMismatch {
            name: "interference",
            expected: n,
            got: interference.len(),
        });
    }
    let contraction = 1.0 - 1.0 / params.alpha_sq();
    let mut psi = Vec::with_capacity(n);
    psi.push(interference[0] / params.alpha);
    for i in 2..=n {
        let s = interference[i - 1];
        let prev = *psi.last().unwrap();
        if s == 0.0 {
            psi.push(prev);
            continue;
        }
        if params.gain == 0.0 {
            return Err(Error::DegenerateGain { step: i });
        }
        psi.push(prev + contraction * s / params.step_scale(i));
    }
    let theta_prime = theta + psi[n - 1];
    Ok(ShiftState {
        psi,
        theta,
        theta_prime,
    })
}

/// Noise-only error recursion `phi_2 = Z_1 / alpha`,
/// `phi_{i+1} = phi_i / alpha^2 + (1 - 1/alpha^2) Z_i / (alpha^(i-1) g)`.
/// Returns `phi_2 ..= phi_{n+1}`.
pub fn noise_error_path(noise: &[f64], params: &GaussianFbParams) -> Vec<f64> {
    let a2 = params.alpha_sq();
    let mut phi = Vec::with_capacity(noise.len());
    phi.push(noise[0] / params.alpha);
    for i in 2..=noise.len() {
        let prev = *phi.last().unwrap();
        phi.push(prev / a2 + (1.0 - 1.0 / a2) * noise[i - 1] / params.step_scale(i));
    }
    phi
}

/// Transmitter state machine. Holds the shift and the latest fed-back
/// estimate `X_{i,1}`.
#[derive(Debug, Clone)]
pub struct SkEncoder {
    params: GaussianFbParams,
    shift: ShiftState,
    next_step: usize,
    estimate: f64,
    has_feedback: bool,
}

impl SkEncoder {
    pub fn new(params: GaussianFbParams, shift: ShiftState) -> Self {
        SkEncoder {
            params,
            shift,
            next_step: 1,
            estimate: 0.5,
            has_feedback: true,
        }
    }

    pub fn next_step(&self) -> usize {
        self.next_step
    }

    /// Channel input for step `i`.
    pub fn encode_step(&mut self, i: usize) -> Result<f64> {
        if i != self.next_step || i > self.params.horizon || !self.has_feedback {
            return Err(Error::StepMismatch {
                expected: self.next_step,
                got: i,
            });
        }
        let err = self.estimate - self.shift.theta_prime;
        let x = if i == 1 {
            self.params.alpha * err
        } else {
            self.params.step_scale(i) * (err + self.shift.psi(i))
        };
        self.next_step += 1;
        self.has_feedback = false;
        Ok(x)
    }

    /// Receive `X_{i+1,1}` over the feedback link.
    pub fn accept_feedback(&mut self, estimate: f64) {
        self.estimate = estimate;
        self.has_feedback = true;
    }
}

/// Receiver state machine: the running estimate `X_{i,1}`.
#[derive(Debug, Clone)]
pub struct SkReceiver {
    params: GaussianFbParams,
    next_step: usize,
    estimate: f64,
}

impl SkReceiver {
    pub fn new(params: GaussianFbParams) -> Self {
        SkReceiver {
            params,
            next_step: 1,
            estimate: 0.5,
        }
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    /// Process output `Y_i` and return `X_{i+1,1}` (which is also fed back).
    pub fn receive_step(&mut self, i: usize, y: f64) -> Result<f64> {
        if i != self.next_step || i > self.params.horizon {
            return Err(Error::StepMismatch {
                expected: self.next_step,
                got: i,
            });
        }
        self.estimate = if i == 1 {
            self.estimate - y / self.params.alpha
        } else {
            let a2 = self.params.alpha_sq();
            let second = self.estimate - y / self.params.step_scale(i);
            self.estimate / a2 + (1.0 - 1.0 / a2) * second
        };
        self.next_step += 1;
        Ok(self.estimate)
    }
}

/// Complete record of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub message: u64,
    pub theta: f64,
    pub inputs: Vec<f64>,
    pub outputs: Vec<f64>,
    /// Receiver estimate after each step; entries `0..n-1` travel back over
    /// the feedback link, the last one is the final estimate.
    pub feedback: Vec<f64>,
    pub noise: Vec<f64>,
    pub interference: Vec<f64>,
    pub decoded: u64,
    pub final_estimate: f64,
    /// `phi_{n+1}` from the noise-only recursion.
    pub phi_final: f64,
    pub shift: ShiftState,
}

impl Transcript {
    /// Realized estimation error `theta - X_{n+1,1}`; equals `phi_{n+1}`
    /// up to rounding.
    pub fn estimation_error(&self) -> f64 {
        self.theta - self.final_estimate
    }

    pub fn is_correct(&self) -> bool {
        self.decoded == self.message
    }
}

/// Execute the encoder / channel / receiver loop for one message.
pub fn run_episode(params: &GaussianFbParams, message: u64, interference: &[f64], noise: &[f64]) -> Result<Transcript> {
    let n = params.horizon;
    if noise.len() != n {
        return Err(Error::LengthMismatch {
            name: "noise",
            expected: n,
            got: noise.len(),
        });
    }
    let theta = message_to_theta(message, params.num_messages)?;
    let shift = compute_shift(interference, theta, params)?;
    if params.gain == 0.0 {
        return Err(Error::param(
            "power",
            "zero power leaves the recursion undefined for n >= 2",
        ));
    }

    let mut encoder = SkEncoder::new(*params, shift.clone());
    let mut receiver = SkReceiver::new(*params);
    let mut inputs = Vec::with_capacity(n);
    let mut outputs = Vec::with_capacity(n);
    let mut feedback = Vec::with_capacity(n);
    for i in 1..=n {
        let x = encoder.encode_step(i)?;
        let y = x + interference[i - 1] + noise[i - 1];
        let next = receiver.receive_step(i, y)?;
        if i < n {
            encoder.accept_feedback(next);
        }
        inputs.push(x);
        outputs.push(y);
        feedback.push(next);
    }
    let final_estimate = receiver.estimate();
    let phi_final = *noise_error_path(noise, params).last().unwrap();
    Ok(Transcript {
        message,
        theta,
        inputs,
        outputs,
        feedback,
        noise: noise.to_vec(),
        interference: interference.to_vec(),
        decoded: decode_message(final_estimate, params.num_messages),
        final_estimate,
        phi_final,
        shift,
    })
}

/// I.i.d. zero-mean Gaussian samples with the given variance.
pub fn gaussian_sequence<R: Rng + ?Sized>(rng: &mut R, var: f64, len: usize) -> Vec<f64> {
    if var == 0.0 {
        return vec![0.0; len];
    }
    let normal = Normal::new(0.0, var.sqrt()).expect("variance is finite and positive");
    (0..len).map(|_| normal.sample(rng)).collect()
}

/// Draw a uniform message, Gaussian interference and Gaussian noise, then run
/// one episode.
pub fn random_episode<R: Rng + ?Sized>(params: &GaussianFbParams, rng: &mut R) -> Result<Transcript> {
    let message = rng.random_range(0..params.num_messages);
    let s = gaussian_sequence(rng, params.interference_var, params.horizon);
    let z = gaussian_sequence(rng, params.noise_var, params.horizon);
    run_episode(params, message, &s, &z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn derive_params_examples() {
        let p = derive_params(1.0, 1.0, 10, 0.4).unwrap();
        assert!(close(p.alpha, 2f64.sqrt(), 1e-15));
        assert_eq!(p.gain, 1.0);
        assert_eq!(p.capacity(), 0.5);
        assert_eq!(p.num_messages, 16);

        let p = derive_params(3.0, 1.0, 10, 0.4).unwrap();
        assert_eq!(p.alpha, 2.0);
        assert!(close(p.gain, 3f64.sqrt(), 1e-15));
        assert_eq!(p.capacity(), 1.0);

        let p = derive_params(0.0, 1.0, 10, 0.4).unwrap();
        assert_eq!((p.alpha, p.gain, p.capacity()), (1.0, 0.0, 0.0));
    }

    #[test]
    fn derive_params_rejects_bad_input() {
        assert!(derive_params(-1.0, 1.0, 10, 0.4).is_err());
        assert!(derive_params(1.0, 0.0, 10, 0.4).is_err());
        assert!(derive_params(f64::NAN, 1.0, 10, 0.4).is_err());
        assert!(derive_params(1.0, 1.0, 1, 0.4).is_err());
        assert!(derive_params(1.0, 1.0, 10, 0.0).is_err());
        assert!(derive_params(1.0, 1.0, 100, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn params_invariants(p in 0.0f64..50.0, nv in 0.01f64..10.0, n in 2usize..30, r in 0.01f64..2.0) {
            let prm = derive_params(p, nv, n, r).unwrap();
            let a2 = 1.0 + p / nv;
            prop_assert!((prm.alpha * prm.alpha - a2).abs() <= 1e-12 * a2);
            if p > 0.0 {
                prop_assert!((prm.gain * prm.gain * nv - p).abs() <= 1e-12 * p);
            }
            prop_assert!(prm.num_messages >= 2);
        }
    }

    #[test]
    fn theta_examples() {
        assert_eq!(message_to_theta(0, 4).unwrap(), 0.125);
        assert_eq!(message_to_theta(3, 4).unwrap(), 0.875);
        assert_eq!(message_to_theta(0, 1).unwrap(), 0.5);
        assert!(message_to_theta(4, 4).is_err());
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_message(0.13, 4), 0);
        assert_eq!(decode_message(-0.2, 4), 0);
        assert_eq!(decode_message(1.7, 4), 3);
        assert_eq!(decode_message(f64::NAN, 4), 0);
        for m in 0..64 {
            assert_eq!(decode_message(message_to_theta(m, 64).unwrap(), 64), m);
        }
    }

    fn sqrt2_params(n: usize) -> GaussianFbParams {
        derive_params(1.0, 1.0, n, 0.4).unwrap()
    }

    #[test]
    fn shift_zero_interference() {
        let p = sqrt2_params(6);
        let sh = compute_shift(&[0.0; 6], 0.3, &p).unwrap();
        assert!(sh.psi_values().iter().all(|&v| v == 0.0));
        assert_eq!(sh.theta_prime, 0.3);
    }

    #[test]
    fn shift_hand_evaluated() {
        // psi_2 = 1/sqrt2, psi_3 = psi_2 + (1/2) * 1 / sqrt2
        let sh = compute_shift(&[1.0, 1.0], 0.0, &sqrt2_params(2)).unwrap();
        assert!(close(sh.psi(2), std::f64::consts::FRAC_1_SQRT_2, 1e-15));
        assert!(close(sh.psi(3), 1.060_660_171_779_821_2, 1e-15));
        assert!(close(sh.theta_prime - sh.theta, sh.psi(3), 0.0));

        // only the i = 3 term fires: (1/2) * 1 / alpha^2
        let sh = compute_shift(&[0.0, 0.0, 1.0], 0.0, &sqrt2_params(3)).unwrap();
        assert_eq!(sh.psi(2), 0.0);
        assert_eq!(sh.psi(3), 0.0);
        assert!(close(sh.psi(4), 0.25, 1e-15));
    }

    #[test]
    fn shift_errors() {
        let p = sqrt2_params(3);
        assert!(matches!(
            compute_shift(&[1.0], 0.5, &p),
            Err(Error::LengthMismatch { .. })
        ));
        let p0 = derive_params(0.0, 1.0, 3, 0.4).unwrap();
        assert_eq!(
            compute_shift(&[1.0, 0.0, 2.0], 0.5, &p0),
            Err(Error::DegenerateGain { step: 3 })
        );
        // S_1 alone only divides by alpha
        assert!(compute_shift(&[1.0, 0.0, 0.0], 0.5, &p0).is_ok());
    }

    #[test]
    fn encode_examples() {
        let p = sqrt2_params(4);
        let shift = compute_shift(&[0.0; 4], 0.5, &p).unwrap();
        let mut enc = SkEncoder::new(p, shift);
        assert_eq!(enc.encode_step(1).unwrap(), 0.0);

        let shift = compute_shift(&[0.4, -0.2, 0.0, 0.0], 0.3, &p).unwrap();
        let mut enc = SkEncoder::new(p, shift.clone());
        enc.encode_step(1).unwrap();
        enc.accept_feedback(shift.theta_prime - shift.psi(2));
        assert_eq!(enc.encode_step(2).unwrap(), 0.0);

        let mut enc = SkEncoder::new(p, shift.clone());
        enc.encode_step(1).unwrap();
        enc.accept_feedback(shift.theta_prime - shift.psi(2) + 0.1);
        assert!(close(enc.encode_step(2).unwrap(), 0.141_421_356_237_309_5, 1e-12));
    }

    #[test]
    fn encode_out_of_order() {
        let p = sqrt2_params(4);
        let shift = compute_shift(&[0.0; 4], 0.5, &p).unwrap();
        let mut enc = SkEncoder::new(p, shift);
        assert_eq!(enc.encode_step(2), Err(Error::StepMismatch { expected: 1, got: 2 }));
        enc.encode_step(1).unwrap();
        // no feedback yet
        assert!(enc.encode_step(2).is_err());
    }

    #[test]
    fn receive_examples() {
        let p = sqrt2_params(4);
        let mut rx = SkReceiver::new(p);
        assert_eq!(rx.receive_step(1, 0.0).unwrap(), 0.5);
        // alpha^2 = 2: equal weights between X_{2,1} and X_{2,2}
        let a = 0.5;
        let y = 0.3;
        let b = a - y / p.alpha;
        assert!(close(rx.receive_step(2, y).unwrap(), (a + b) / 2.0, 1e-15));
        assert!(rx.receive_step(2, 0.0).is_err());
    }

    #[test]
    fn noise_free_episode_recovers_theta() {
        let mut rng = rng_from_seed(3);
        for n in [2, 5, 15, 30] {
            let p = derive_params(1.0, 1.0, n, 0.3).unwrap();
            let s = gaussian_sequence(&mut rng, 4.0, n);
            let m = rng.random_range(0..p.num_messages);
            let t = run_episode(&p, m, &s, &vec![0.0; n]).unwrap();
            assert!(close(t.final_estimate, t.theta, 1e-9), "n={n}");
            assert_eq!(t.decoded, m);
        }
    }

    #[test]
    fn final_estimate_matches_phi_recursion() {
        let p = derive_params(2.0, 0.5, 12, 0.5).unwrap();
        let mut rng = rng_from_seed(11);
        for _ in 0..50 {
            let t = {
                let s = gaussian_sequence(&mut rng, 4.0, 12);
                let z = gaussian_sequence(&mut rng, 0.5, 12);
                run_episode(&p, 17, &s, &z).unwrap()
            };
            assert!(close(t.estimation_error(), t.phi_final, 1e-10));
            assert_eq!(t.inputs.len(), 12);
            assert_eq!(t.outputs.len(), 12);
            assert_eq!(t.feedback.len(), 12);
        }
    }

    #[test]
    fn interference_does_not_change_decision() {
        let p = derive_params(1.0, 1.0, 15, 0.4).unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..200 {
            let s = gaussian_sequence(&mut rng, 4.0, 15);
            let z = gaussian_sequence(&mut rng, 1.0, 15);
            let m = rng.random_range(0..p.num_messages);
            let dirty = run_episode(&p, m, &s, &z).unwrap();
            let clean = run_episode(&p, m, &[0.0; 15], &z).unwrap();
            assert_eq!(dirty.decoded, clean.decoded);
            assert!(close(dirty.estimation_error(), clean.estimation_error(), 1e-9));
        }
    }

    #[test]
    fn episodes_are_deterministic() {
        let p = derive_params(1.0, 1.0, 10, 0.4)
            .unwrap()
            .with_interference_var(4.0)
            .unwrap();
        let a = random_episode(&p, &mut rng_from_seed(9)).unwrap();
        let b = random_episode(&p, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_power_episode_rejected() {
        let p = derive_params(0.0, 1.0, 4, 0.4).unwrap();
        assert!(run_episode(&p, 0, &[0.0; 4], &[0.0; 4]).is_err());
    }
}

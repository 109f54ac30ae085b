//! Time-domain losses and evaluation measures.

use crate::error::{bail, Result};

/// Upper cap for reported SNRs; a perfect estimate reports exactly this.
pub const SNR_CAP_DB: f64 = 120.0;

/// Pre-emphasis and companding settings for the perceptual MSE.
///
/// The defaults are the usual speech-coding values and are configuration,
/// not measured optima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmseParams {
    /// Pre-emphasis coefficient in `[0, 1)`; 0 disables it.
    pub beta: f64,
    /// μ-law constant; 0 means no companding.
    pub mu: f64,
}

impl Default for PmseParams {
    fn default() -> Self {
        Self {
            beta: 0.97,
            mu: 255.0,
        }
    }
}

impl PmseParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            bail!(
                Domain,
                "pre-emphasis beta must lie in [0, 1), got {}",
                self.beta
            );
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            bail!(
                Domain,
                "mu must be finite and non-negative, got {}",
                self.mu
            );
        }
        Ok(())
    }
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        bail!(Domain, "signal lengths differ ({} vs {})", a.len(), b.len());
    }
    if a.is_empty() {
        bail!(Domain, "signals are empty");
    }
    Ok(())
}

fn mean_sq_diff(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>, len: usize) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc / len as f64
}

pub fn mse(s: &[f64], est: &[f64]) -> Result<f64> {
    same_len(s, est)?;
    Ok(mean_sq_diff(
        s.iter().copied(),
        est.iter().copied(),
        s.len(),
    ))
}

pub fn mu_law(v: f64, mu: f64) -> f64 {
    if mu == 0.0 {
        return v;
    }
    v.signum() * (mu * v.abs()).ln_1p() / mu.ln_1p()
}

/// `x(n) - beta * x(n-1)` with `x(-1) = 0`, then μ-law companded.
fn perceptual(x: &[f64], p: PmseParams) -> impl Iterator<Item = f64> + '_ {
    let prev = std::iter::once(0.0).chain(x.iter().copied());
    x.iter()
        .zip(prev)
        .map(move |(&cur, prev)| mu_law(cur - p.beta * prev, p.mu))
}

pub fn pmse(s: &[f64], est: &[f64], p: PmseParams) -> Result<f64> {
    same_len(s, est)?;
    p.validate()?;
    Ok(mean_sq_diff(perceptual(s, p), perceptual(est, p), s.len()))
}

/// Per-sample weighted pMSE, for activity-prior weighting.
pub fn weighted_pmse(s: &[f64], est: &[f64], p: PmseParams, weights: &[f64]) -> Result<f64> {
    same_len(s, est)?;
    same_len(s, weights)?;
    p.validate()?;
    let mut acc = 0.0;
    for ((a, b), w) in perceptual(s, p).zip(perceptual(est, p)).zip(weights) {
        acc += w * (a - b) * (a - b);
    }
    Ok(acc / s.len() as f64)
}

/// Enhancement term plus autoencoder-reconstruction term.
pub fn dual_path_loss(
    s: &[f64],
    s_est: &[f64],
    x: &[f64],
    x_rec: &[f64],
    p: PmseParams,
) -> Result<f64> {
    Ok(pmse(s, s_est, p)? + pmse(x, x_rec, p)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeechActivityWeights {
    pub prior: f64,
    pub active_count: usize,
    pub inactive_count: usize,
    pub active_weight: f64,
    pub inactive_weight: f64,
}

impl SpeechActivityWeights {
    pub fn weight(&self, active: bool) -> f64 {
        if active {
            self.active_weight
        } else {
            self.inactive_weight
        }
    }

    pub fn per_sample(&self, flags: &[bool]) -> Vec<f64> {
        flags.iter().map(|&a| self.weight(a)).collect()
    }
}

/// Weights that give active samples a total share `prior` of the batch mass.
/// Batches with only one class get unit weights.
pub fn activity_weights(flags: &[bool], prior: f64) -> Result<SpeechActivityWeights> {
    let active = flags.iter().filter(|&&a| a).count();
    weights_from_counts(active, flags.len() - active, prior)
}

pub fn weights_from_counts(
    active: usize,
    inactive: usize,
    prior: f64,
) -> Result<SpeechActivityWeights> {
    if !(0.0..=1.0).contains(&prior) {
        bail!(Domain, "activity prior must lie in [0, 1], got {prior}");
    }
    if active + inactive == 0 {
        bail!(Domain, "no samples to weight");
    }
    let total = (active + inactive) as f64;
    let (wa, wi) = if active == 0 || inactive == 0 {
        (1.0, 1.0)
    } else {
        (
            prior * total / active as f64,
            (1.0 - prior) * total / inactive as f64,
        )
    };
    Ok(SpeechActivityWeights {
        prior,
        active_count: active,
        inactive_count: inactive,
        active_weight: wa,
        inactive_weight: wi,
    })
}

/// Energy VAD on a clean reference: 20 ms blocks whose RMS exceeds 1% of the
/// global RMS are active. Flags are per sample.
pub fn activity_flags(reference: &[f64], sample_rate: u32) -> Vec<bool> {
    let block = ((sample_rate as usize) / 50).max(1);
    let global = crate::signal_io::rms(reference);
    let mut flags = Vec::with_capacity(reference.len());
    for chunk in reference.chunks(block) {
        let active = global > 0.0 && crate::signal_io::rms(chunk) > 0.01 * global;
        flags.extend(std::iter::repeat(active).take(chunk.len()));
    }
    flags
}

fn energy(x: impl Iterator<Item = f64>) -> f64 {
    x.map(|v| v * v).sum()
}

/// `10 log10(|ref|² / |ref - est|²)`, capped at [`SNR_CAP_DB`].
pub fn snr_db(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    same_len(reference, estimate)?;
    let signal = energy(reference.iter().copied());
    if signal == 0.0 {
        bail!(Domain, "reference signal is all zeros");
    }
    let noise = energy(reference.iter().zip(estimate).map(|(a, b)| a - b));
    if noise == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (signal / noise).log10()).min(SNR_CAP_DB))
}

/// `10 log10(|x - x̂|² / |x|²)`: the negated SNR, floored at `-SNR_CAP_DB`.
pub fn reconstruction_error_db(x: &[f64], x_rec: &[f64]) -> Result<f64> {
    Ok(-snr_db(x, x_rec)?)
}

/// Mean of per-block SNRs (blocks of `block` samples), each clamped to
/// `[-10, 35]` dB; blocks with a silent reference are skipped.
pub fn segmental_snr_db(reference: &[f64], estimate: &[f64], block: usize) -> Result<f64> {
    same_len(reference, estimate)?;
    if block == 0 {
        bail!(Domain, "block length must be positive");
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (r, e) in reference.chunks(block).zip(estimate.chunks(block)) {
        let signal = energy(r.iter().copied());
        if signal == 0.0 {
            continue;
        }
        let noise = energy(r.iter().zip(e).map(|(a, b)| a - b));
        let v = if noise == 0.0 {
            35.0
        } else {
            (10.0 * (signal / noise).log10()).clamp(-10.0, 35.0)
        };
        total += v;
        count += 1;
    }
    if count == 0 {
        bail!(Domain, "reference signal is all zeros");
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_basics() {
        assert_eq!(mse(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(mse(&[0.3, -0.2], &[0.3, -0.2]).unwrap(), 0.0);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn mu_law_points() {
        for mu in [0.0, 1.0, 255.0] {
            assert_eq!(mu_law(0.0, mu), 0.0);
        }
        for mu in [0.5, 1.0, 255.0, 1e4] {
            assert_eq!(mu_law(1.0, mu), 1.0);
            assert_eq!(mu_law(-1.0, mu), -1.0);
        }
        // log(1 + 25.5) / log(256)
        assert!((mu_law(0.1, 255.0) - 0.590_990_06).abs() < 1e-8);
    }

    #[test]
    fn pmse_limits() {
        let s = [0.1, -0.4, 0.25, 0.9, -0.7];
        let e = [0.0, -0.3, 0.2, 0.95, -0.1];
        let plain = PmseParams { beta: 0.0, mu: 0.0 };
        assert_eq!(pmse(&s, &e, plain).unwrap(), mse(&s, &e).unwrap());
        let tiny = PmseParams {
            beta: 0.0,
            mu: 1e-6,
        };
        let m = mse(&s, &e).unwrap();
        assert!((pmse(&s, &e, tiny).unwrap() - m).abs() <= 1e-6 * m);
        assert_eq!(pmse(&s, &s, PmseParams::default()).unwrap(), 0.0);
        assert!(pmse(&s, &e, PmseParams { beta: 1.0, mu: 0.0 }).is_err());
    }

    #[test]
    fn pre_emphasis_starts_from_zero() {
        let p = PmseParams { beta: 0.5, mu: 0.0 };
        // emphasized: s -> [1, 1.5], est -> [0, 0]
        assert_eq!(
            pmse(&[1.0, 2.0], &[0.0, 0.0], p).unwrap(),
            (1.0 + 2.25) / 2.0
        );
    }

    #[test]
    fn dual_path() {
        let p = PmseParams::default();
        let s = [0.1, 0.2, -0.3];
        let e = [0.0, 0.25, -0.2];
        let x = [0.5, -0.5, 0.1];
        assert_eq!(dual_path_loss(&s, &s, &x, &x, p).unwrap(), 0.0);
        assert_eq!(
            dual_path_loss(&s, &e, &x, &x, p).unwrap(),
            pmse(&s, &e, p).unwrap()
        );
        assert_eq!(
            dual_path_loss(&s, &e, &x, &e, p).unwrap(),
            dual_path_loss(&x, &e, &s, &e, p).unwrap()
        );
    }

    #[test]
    fn activity_weight_cases() {
        let w = weights_from_counts(100, 300, 0.75).unwrap();
        assert!((w.active_weight - 3.0).abs() < 1e-15);
        assert!((w.inactive_weight - 1.0 / 3.0).abs() < 1e-15);
        let w = weights_from_counts(50, 50, 0.5).unwrap();
        assert_eq!((w.active_weight, w.inactive_weight), (1.0, 1.0));
        let w = activity_weights(&[true; 10], 0.75).unwrap();
        assert_eq!((w.active_weight, w.inactive_weight), (1.0, 1.0));
        assert!(activity_weights(&[true], 1.5).is_err());
    }

    #[test]
    fn vad_marks_loud_blocks() {
        let mut x = vec![0.0; 960];
        x[320..640].iter_mut().for_each(|v| *v = 0.5);
        let flags = activity_flags(&x, 16_000);
        assert!(!flags[0] && flags[400] && !flags[700]);
    }

    #[test]
    fn snr_cases() {
        let r = [1.0, -1.0, 1.0, -1.0];
        assert_eq!(snr_db(&r, &r).unwrap(), SNR_CAP_DB);
        let est: Vec<f64> = r.iter().map(|v| v + 1.0).collect();
        assert!(snr_db(&r, &est).unwrap().abs() < 1e-12);
        assert_eq!(reconstruction_error_db(&r, &[0.0; 4]).unwrap(), 0.0);
        assert!(snr_db(&[0.0; 4], &r).is_err());
    }

    #[test]
    fn segmental_snr_skips_silence() {
        let r = [0.0, 0.0, 1.0, 1.0];
        let e = [5.0, 5.0, 1.0, 0.0];
        let v = segmental_snr_db(&r, &e, 2).unwrap();
        assert!((v - 10.0 * 2f64.log10()).abs() < 1e-12);
    }
}

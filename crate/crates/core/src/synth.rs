//! Seeded synthetic test signals and an additive mixer. These stand in for
//! real recordings in demos and tests; nothing here models rooms or corpora.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{bail, Result};

pub fn white_noise(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Shapes white noise in the frequency domain by `gain(f)` with `f` in
/// normalized frequency (1 = Nyquist), then rescales to unit RMS.
fn shaped_noise(len: usize, seed: u64, gain: impl Fn(f64) -> f64) -> Vec<f64> {
    if len == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = white_noise(len, seed)
        .into_iter()
        .map(|v| Complex::new(v, 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for (i, c) in buf.iter_mut().enumerate() {
        let k = i.min(len - i);
        *c *= gain(2.0 * k as f64 / len as f64);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let out: Vec<f64> = buf.iter().map(|c| c.re).collect();
    normalize(out)
}

fn normalize(mut x: Vec<f64>) -> Vec<f64> {
    let r = crate::signal_io::rms(&x);
    if r > 0.0 {
        x.iter_mut().for_each(|v| *v /= r);
    }
    x
}

/// Noise with a 1/f power spectrum.
pub fn pink_noise(len: usize, seed: u64) -> Vec<f64> {
    shaped_noise(len, seed, |f| {
        let f = f.max(1.0 / len as f64);
        1.0 / f.sqrt()
    })
}

/// Speech-shaped noise at 16 kHz: pink spectrum, fourth-order roll-off above
/// 3.2 kHz and a 4 Hz syllabic amplitude envelope. Unit RMS.
pub fn speech_shaped(len: usize, seed: u64) -> Vec<f64> {
    let base = shaped_noise(len, seed, |f| {
        let f = f.max(1.0 / len as f64);
        (1.0 / f.sqrt()) / (1.0 + (f / 0.4).powi(4))
    });
    let env = (0..len).map(|n| {
        let s = (2.0 * std::f64::consts::PI * 4.0 * n as f64 / 16_000.0).sin();
        0.5 + 0.5 * s * s
    });
    normalize(base.iter().zip(env).map(|(v, e)| v * e).collect())
}

/// `clean + g * noise` with `g` chosen so the mixture has the requested
/// global SNR.
pub fn mix_at_snr(clean: &[f64], noise: &[f64], snr_db: f64) -> Result<Vec<f64>> {
    if clean.len() != noise.len() {
        bail!(Domain, "clean and noise lengths differ");
    }
    let ps: f64 = clean.iter().map(|v| v * v).sum();
    let pn: f64 = noise.iter().map(|v| v * v).sum();
    if ps == 0.0 || pn == 0.0 {
        bail!(
            Domain,
            "cannot set an SNR with a silent clean or noise signal"
        );
    }
    if !snr_db.is_finite() {
        bail!(Domain, "SNR must be finite");
    }
    let g = (ps / (pn * 10f64.powf(snr_db / 10.0))).sqrt();
    Ok(clean.iter().zip(noise).map(|(s, n)| s + g * n).collect())
}

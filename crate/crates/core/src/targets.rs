//! Half-overlap STFT/ISTFT with a square-root Hann window on both sides, and
//! the oracle Wiener-filtered target `S* = clamp(|S|²/|V|², 0, 1) · V`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{bail, Result};
use crate::xform::Window;

/// Default analysis window for target generation (32 ms at 16 kHz).
pub const DEFAULT_WIN_LEN: usize = 512;

/// Complex spectrogram, `frames × bins` with `bins = win_len/2 + 1`.
///
/// Frame `l` covers samples `[(l-1)·hop, (l+1)·hop)`, so the first frame is
/// centered on sample 0 and every sample lies under exactly two windows.
#[derive(Debug, Clone, PartialEq)]
pub struct Stft {
    win_len: usize,
    hop: usize,
    signal_len: usize,
    frames: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Stft {
    pub fn win_len(&self) -> usize {
        self.win_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.win_len / 2 + 1
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn get(&self, m: usize, l: usize) -> (f64, f64) {
        let i = l * self.bins() + m;
        (self.re[i], self.im[i])
    }

    pub fn set(&mut self, m: usize, l: usize, value: (f64, f64)) {
        let i = l * self.bins() + m;
        self.re[i] = value.0;
        self.im[i] = value.1;
    }

    pub fn power(&self, m: usize, l: usize) -> f64 {
        let (a, b) = self.get(m, l);
        a * a + b * b
    }

    /// All-zero spectrogram with the geometry `stft` would produce.
    pub fn zeros(signal_len: usize, win_len: usize, hop: usize) -> Result<Self> {
        check_geometry(signal_len, win_len, hop)?;
        let frames = (signal_len - 1) / hop + 2;
        let n = frames * (win_len / 2 + 1);
        Ok(Self {
            win_len,
            hop,
            signal_len,
            frames,
            re: vec![0.0; n],
            im: vec![0.0; n],
        })
    }

    fn same_geometry(&self, other: &Stft) -> bool {
        self.win_len == other.win_len
            && self.hop == other.hop
            && self.signal_len == other.signal_len
    }
}

fn check_geometry(len: usize, win_len: usize, hop: usize) -> Result<()> {
    if win_len < 2 || win_len % 2 != 0 {
        bail!(Domain, "window length {win_len} must be even");
    }
    if hop != win_len / 2 {
        bail!(
            Domain,
            "hop must be half the window ({}), got {hop}",
            win_len / 2
        );
    }
    if len < win_len {
        bail!(Domain, "signal of {len} samples is shorter than one window");
    }
    Ok(())
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

pub fn stft(x: &[f64], win_len: usize, hop: usize) -> Result<Stft> {
    let mut out = Stft::zeros(x.len(), win_len, hop)?;
    let h = Window::SqrtHann.coefficients(win_len);
    let fft = plan(win_len, false);
    let bins = out.bins();
    let mut buf = vec![Complex::new(0.0, 0.0); win_len];
    for l in 0..out.frames {
        let start = (l * hop) as isize - hop as isize;
        for (j, b) in buf.iter_mut().enumerate() {
            let n = start + j as isize;
            let v = if n >= 0 && (n as usize) < x.len() {
                x[n as usize]
            } else {
                0.0
            };
            *b = Complex::new(h[j] * v, 0.0);
        }
        fft.process(&mut buf);
        for m in 0..bins {
            out.re[l * bins + m] = buf[m].re;
            out.im[l * bins + m] = buf[m].im;
        }
    }
    Ok(out)
}

/// Windowed overlap-add inverse; returns `length` samples.
pub fn istft(spec: &Stft, length: usize) -> Vec<f64> {
    let n = spec.win_len;
    let hop = spec.hop;
    let bins = spec.bins();
    let h = Window::SqrtHann.coefficients(n);
    let ifft = plan(n, true);
    let mut out = vec![0.0; length];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for l in 0..spec.frames {
        for m in 0..bins {
            buf[m] = Complex::new(spec.re[l * bins + m], spec.im[l * bins + m]);
        }
        // bins above Nyquist are the conjugate mirror; DC and Nyquist stay real
        buf[0].im = 0.0;
        buf[n / 2].im = 0.0;
        for m in 1..n / 2 {
            buf[n - m] = buf[m].conj();
        }
        ifft.process(&mut buf);
        let start = (l * hop) as isize - hop as isize;
        for (j, b) in buf.iter().enumerate() {
            let idx = start + j as isize;
            if idx >= 0 && (idx as usize) < length {
                out[idx as usize] += h[j] * b.re / n as f64;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WienerStats {
    /// Bins where the reverberant spectrum was exactly zero (gain forced to 0).
    pub zero_bins: usize,
    pub total_bins: usize,
}

/// `clamp(s_power / v_power, 0, 1)`, or `None` when `v_power` is zero.
pub fn wiener_gain(s_power: f64, v_power: f64) -> Option<f64> {
    (v_power > 0.0).then(|| (s_power / v_power).clamp(0.0, 1.0))
}

/// Applies the oracle Wiener gain of `clean` onto `reverb`, bin by bin.
pub fn apply_wiener(clean: &Stft, reverb: &Stft) -> Result<(Stft, WienerStats)> {
    if !clean.same_geometry(reverb) {
        bail!(
            Consistency,
            "clean and reverberant spectrograms differ in geometry"
        );
    }
    let mut out = reverb.clone();
    let mut stats = WienerStats {
        zero_bins: 0,
        total_bins: reverb.frames * reverb.bins(),
    };
    for l in 0..reverb.frames {
        for m in 0..reverb.bins() {
            let g = wiener_gain(clean.power(m, l), reverb.power(m, l)).unwrap_or_else(|| {
                stats.zero_bins += 1;
                0.0
            });
            let (a, b) = reverb.get(m, l);
            out.set(m, l, (g * a, g * b));
        }
    }
    Ok((out, stats))
}

/// Oracle target waveform `s*` from a clean signal and its reverberant version.
pub fn wiener_target(
    clean: &[f64],
    reverb: &[f64],
    win_len: usize,
) -> Result<(Vec<f64>, WienerStats)> {
    if clean.len() != reverb.len() {
        bail!(
            Domain,
            "clean ({}) and reverberant ({}) lengths differ",
            clean.len(),
            reverb.len()
        );
    }
    let hop = win_len / 2;
    let s = stft(clean, win_len, hop)?;
    let v = stft(reverb, win_len, hop)?;
    let (target, stats) = apply_wiener(&s, &v)?;
    Ok((istft(&target, clean.len()), stats))
}

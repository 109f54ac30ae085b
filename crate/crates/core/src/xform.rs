//! Band-limited windowed-DFT analysis and synthesis operators.
//!
//! Analysis correlates a segment with `K_W` windowed complex exponentials at a
//! stride of `N/2` and emits the rectified 4-channel encoding of each
//! coefficient. Synthesis is the matching transposed correlation, with the
//! conjugate half of the spectrum folded in through a per-filter scale.
//!
//! Frames are laid out on a circular grid: frame `t` reads samples
//! `[t*N/2, t*N/2 + N)` modulo the segment length, so a segment of `D` samples
//! yields `floor(2D/N)` frames and every sample is covered by exactly two
//! windows. With the periodic square-root Hann window (`h²(n) + h²(n + N/2) = 1`)
//! and `1/sqrt(N)` on both kernel sets, full-band analysis followed by synthesis
//! is the identity.

use std::f64::consts::PI;

use crate::error::{bail, Result};
use crate::tensor::ChannelTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    /// `sin(pi n / N)`, the square root of the periodic Hann window.
    #[default]
    SqrtHann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::SqrtHann => (0..n).map(|i| (PI * i as f64 / n as f64).sin()).collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

const SNAP_TOL: f64 = 1e-9;

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= SNAP_TOL * r.abs().max(1.0) {
        r
    } else {
        v
    }
}

/// Inclusive DFT bin range `(ceil(N*lo/2), floor(N*hi/2))` for a band. Values
/// within rounding noise of an integer are snapped first, so an edge like
/// `0.6` on a 640-sample window lands on bin 192 rather than 191.
pub fn bin_range(window_len: usize, lo: f64, hi: f64) -> (i64, i64) {
    let half = window_len as f64 / 2.0;
    (
        snap(half * lo).ceil() as i64,
        snap(half * hi).floor() as i64,
    )
}

/// Filter count before overcompleteness: `floor(N*hi/2) - ceil(N*lo/2) + 1`.
/// May be zero or negative for bands narrower than one bin.
pub fn base_filter_count(window_len: usize, lo: f64, hi: f64) -> i64 {
    let (a, b) = bin_range(window_len, lo, hi);
    b - a + 1
}

pub fn filter_count(window_len: usize, lo: f64, hi: f64, overcompleteness: f64) -> i64 {
    let base = base_filter_count(window_len, lo, hi);
    if overcompleteness == 1.0 {
        base
    } else {
        snap(overcompleteness * base as f64).floor() as i64
    }
}

/// Windowed basis vectors of one branch, for either analysis or synthesis.
#[derive(Debug, Clone)]
pub struct KernelSet {
    window_len: usize,
    band: (f64, f64),
    overcompleteness: f64,
    window: Window,
    for_synthesis: bool,
    centers: Vec<f64>,
    synthesis_scale: Vec<f64>,
    real: Vec<f64>,
    imag: Vec<f64>,
}

/// Square-root-Hann kernels for band `[lo, hi]` on an `n`-sample window.
pub fn build_kernels(
    n: usize,
    lo: f64,
    hi: f64,
    overcompleteness: f64,
    for_synthesis: bool,
) -> Result<KernelSet> {
    KernelSet::new(n, lo, hi, overcompleteness, for_synthesis, Window::SqrtHann)
}

impl KernelSet {
    pub fn new(
        n: usize,
        lo: f64,
        hi: f64,
        overcompleteness: f64,
        for_synthesis: bool,
        window: Window,
    ) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            bail!(Domain, "window length {n} must be even and at least 2");
        }
        if !(lo >= 0.0 && lo < hi && hi <= 1.0) {
            bail!(Domain, "band [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1");
        }
        if !(overcompleteness.is_finite() && overcompleteness >= 1.0) {
            bail!(
                Domain,
                "overcompleteness must be >= 1, got {overcompleteness}"
            );
        }
        let (first, last) = bin_range(n, lo, hi);
        let base = last - first + 1;
        let count = filter_count(n, lo, hi, overcompleteness);
        if base < 1 || count < 1 {
            bail!(
                Config,
                "band [{lo}, {hi}] holds no DFT bin of a {n}-sample window"
            );
        }
        let count = count as usize;

        let centers: Vec<f64> = if count == 1 {
            vec![first as f64]
        } else {
            let span = (last - first) as f64;
            (0..count)
                .map(|i| first as f64 + span * i as f64 / (count - 1) as f64)
                .collect()
        };

        let half = (n / 2) as f64;
        let gain_norm = base as f64 / count as f64;
        let synthesis_scale: Vec<f64> = centers
            .iter()
            .map(|&f| {
                let fold = if f == 0.0 || f == half { 1.0 } else { 2.0 };
                fold * gain_norm
            })
            .collect();

        let h = window.coefficients(n);
        let norm = 1.0 / (n as f64).sqrt();
        let mut real = Vec::with_capacity(count * n);
        let mut imag = Vec::with_capacity(count * n);
        for (k, &f) in centers.iter().enumerate() {
            let s = if for_synthesis {
                synthesis_scale[k]
            } else {
                1.0
            };
            for (i, &hv) in h.iter().enumerate() {
                let phase = 2.0 * PI * f * i as f64 / n as f64;
                real.push(s * norm * hv * phase.cos());
                imag.push(-s * norm * hv * phase.sin());
            }
        }

        Ok(Self {
            window_len: n,
            band: (lo, hi),
            overcompleteness,
            window,
            for_synthesis,
            centers,
            synthesis_scale,
            real,
            imag,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn band(&self) -> (f64, f64) {
        self.band
    }

    pub fn num_filters(&self) -> usize {
        self.centers.len()
    }

    pub fn overcompleteness(&self) -> f64 {
        self.overcompleteness
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn is_synthesis(&self) -> bool {
        self.for_synthesis
    }

    /// Center frequency of each filter in DFT bins (may be fractional when overcomplete).
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn synthesis_scale(&self) -> &[f64] {
        &self.synthesis_scale
    }

    pub fn real_part(&self, k: usize) -> &[f64] {
        &self.real[k * self.window_len..(k + 1) * self.window_len]
    }

    pub fn imag_part(&self, k: usize) -> &[f64] {
        &self.imag[k * self.window_len..(k + 1) * self.window_len]
    }

    fn same_geometry(&self, other: &KernelSet) -> bool {
        self.window_len == other.window_len
            && self.band == other.band
            && self.overcompleteness == other.overcompleteness
            && self.window == other.window
    }

    pub fn stride(&self) -> usize {
        self.window_len / 2
    }

    /// Number of frames produced for a segment of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        2 * len / self.window_len
    }

    fn check_segment(&self, len: usize) -> Result<()> {
        if len < self.window_len {
            bail!(
                Domain,
                "segment of {len} samples is shorter than the {}-sample window",
                self.window_len
            );
        }
        if len % self.stride() != 0 {
            bail!(
                Domain,
                "segment length {len} is not a multiple of the stride {}",
                self.stride()
            );
        }
        Ok(())
    }
}

/// Raw real and imaginary correlations, each `frames * K_W`, frame-major.
pub fn analyze_complex(x: &[f64], ks: &KernelSet) -> Result<(Vec<f64>, Vec<f64>)> {
    if ks.for_synthesis {
        bail!(Consistency, "analysis requires analysis kernels");
    }
    ks.check_segment(x.len())?;
    let n = ks.window_len;
    let d = x.len();
    let frames = ks.frame_count(d);
    let kw = ks.num_filters();
    let mut re = Vec::with_capacity(frames * kw);
    let mut im = Vec::with_capacity(frames * kw);
    let mut buf = vec![0.0; n];
    for t in 0..frames {
        let start = t * ks.stride();
        for (i, b) in buf.iter_mut().enumerate() {
            *b = x[(start + i) % d];
        }
        for k in 0..kw {
            re.push(dot(&buf, ks.real_part(k)));
            im.push(dot(&buf, ks.imag_part(k)));
        }
    }
    Ok((re, im))
}

pub fn analyze(x: &[f64], ks: &KernelSet) -> Result<ChannelTensor> {
    let (re, im) = analyze_complex(x, ks)?;
    let frames = ks.frame_count(x.len());
    Ok(ChannelTensor::from_complex(
        frames,
        ks.num_filters(),
        &re,
        &im,
    ))
}

/// Transposed correlation of `y` with synthesis kernels, wrapped onto `len` samples.
pub fn synthesize(y: &ChannelTensor, ks: &KernelSet, len: usize) -> Result<Vec<f64>> {
    if !ks.for_synthesis {
        bail!(Consistency, "synthesis requires synthesis kernels");
    }
    if y.bins() != ks.num_filters() {
        bail!(
            Consistency,
            "tensor has {} bins but kernel set has {} filters",
            y.bins(),
            ks.num_filters()
        );
    }
    ks.check_segment(len)
        .map_err(|e| crate::error::Error::Consistency(e.to_string()))?;
    if y.frames() != ks.frame_count(len) {
        bail!(
            Consistency,
            "{} frames do not tile {len} samples at window {}",
            y.frames(),
            ks.window_len
        );
    }
    let n = ks.window_len;
    let mut out = vec![0.0; len];
    let mut buf = vec![0.0; n];
    for t in 0..y.frames() {
        buf.iter_mut().for_each(|b| *b = 0.0);
        for k in 0..ks.num_filters() {
            let (a, b) = y.coefficient(t, k);
            if a != 0.0 {
                axpy(&mut buf, a, ks.real_part(k));
            }
            if b != 0.0 {
                axpy(&mut buf, b, ks.imag_part(k));
            }
        }
        let start = t * ks.stride();
        for (i, &v) in buf.iter().enumerate() {
            out[(start + i) % len] += v;
        }
    }
    Ok(out)
}

/// Checks that an analysis and a synthesis set describe the same filters.
pub fn matched(analysis: &KernelSet, synthesis: &KernelSet) -> bool {
    !analysis.for_synthesis && synthesis.for_synthesis && analysis.same_geometry(synthesis)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    for (o, v) in acc.iter_mut().zip(x) {
        *o += a * v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn rel_rms(a: &[f64], b: &[f64]) -> f64 {
        let e: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let s: f64 = a.iter().map(|x| x * x).sum();
        (e / s).sqrt()
    }

    /// Direct DFT of a complex sequence evaluated at `m` equally spaced
    /// frequencies; independent of the kernel construction.
    fn dft_energy(re: &[f64], im: &[f64], m: usize) -> Vec<f64> {
        (0..m)
            .map(|j| {
                let (mut sr, mut si) = (0.0, 0.0);
                for n in 0..re.len() {
                    let p = -2.0 * PI * (j * n) as f64 / m as f64;
                    sr += re[n] * p.cos() - im[n] * p.sin();
                    si += re[n] * p.sin() + im[n] * p.cos();
                }
                sr * sr + si * si
            })
            .collect()
    }

    #[test]
    fn filter_counts() {
        assert_eq!(
            build_kernels(8, 0.0, 1.0, 1.0, false)
                .unwrap()
                .num_filters(),
            5
        );
        let ks = build_kernels(8, 0.5, 1.0, 1.0, false).unwrap();
        assert_eq!(ks.centers(), &[2.0, 3.0, 4.0]);
        let ks = build_kernels(8, 0.0, 1.0, 1.5, false).unwrap();
        assert_eq!(ks.num_filters(), 7);
        assert_eq!(ks.centers().first(), Some(&0.0));
        assert_eq!(ks.centers().last(), Some(&4.0));
    }

    #[test]
    fn synthesis_scale_folds_conjugate_half() {
        let ks = build_kernels(8, 0.0, 1.0, 1.0, true).unwrap();
        assert_eq!(ks.synthesis_scale(), &[1.0, 2.0, 2.0, 2.0, 1.0]);
    }

    #[test]
    fn kernel_domain_errors() {
        assert!(build_kernels(7, 0.0, 1.0, 1.0, false).is_err());
        assert!(build_kernels(8, 0.5, 0.5, 1.0, false).is_err());
        assert!(build_kernels(8, 0.0, 1.2, 1.0, false).is_err());
        assert!(build_kernels(8, 0.0, 1.0, 0.5, false).is_err());
        // no integer bin between 0.30 and 0.45 on an 8-sample window
        assert!(build_kernels(8, 0.30, 0.45, 1.0, false).is_err());
    }

    #[test]
    fn snapped_bin_range() {
        let rho: f64 = 5.0 / 3.0;
        let edge = rho.powi(-1);
        assert_eq!(bin_range(640, edge, 1.0), (192, 320));
    }

    #[test]
    fn analysis_shape_and_zero_input() {
        let ks = build_kernels(4, 0.0, 1.0, 1.0, false).unwrap();
        let y = analyze(&[0.0; 16], &ks).unwrap();
        assert_eq!(y.shape(), (8, 3, 4));
        assert!(y.data().iter().all(|&v| v == 0.0));
        assert!(analyze(&[0.0; 3], &ks).is_err());
    }

    #[test]
    fn pure_tone_concentrates_in_its_bin() {
        let n = 32;
        let ks = KernelSet::new(n, 0.0, 1.0, 1.0, false, Window::Rectangular).unwrap();
        for bin in [1usize, 5, 11] {
            let x: Vec<f64> = (0..4 * n)
                .map(|i| (2.0 * PI * (bin * i) as f64 / n as f64).cos())
                .collect();
            let y = analyze(&x, &ks).unwrap();
            for t in 0..y.frames() {
                // oracle: direct DFT magnitude of the frame
                let frame: Vec<f64> = (0..n).map(|i| x[(t * n / 2 + i) % x.len()]).collect();
                let e = dft_energy(&frame, &vec![0.0; n], n);
                let mag = |k: usize| {
                    let (a, b) = y.coefficient(t, k);
                    (a * a + b * b).sqrt()
                };
                assert!((mag(bin) - (e[bin] / n as f64).sqrt()).abs() < 1e-9);
                for k in (0..=n / 2).filter(|&k| k != bin) {
                    assert!(mag(bin) >= 100.0 * mag(k));
                }
            }
        }
    }

    #[test]
    fn full_band_round_trip_is_identity() {
        for n in [4, 16, 40, 64] {
            let x = noise(6 * n, n as u64);
            let a = build_kernels(n, 0.0, 1.0, 1.0, false).unwrap();
            let s = build_kernels(n, 0.0, 1.0, 1.0, true).unwrap();
            let y = synthesize(&analyze(&x, &a).unwrap(), &s, x.len()).unwrap();
            assert!(rel_rms(&x, &y) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn channel_encoding_identity() {
        let x = noise(128, 3);
        let ks = build_kernels(16, 0.2, 0.9, 1.0, false).unwrap();
        let (re, im) = analyze_complex(&x, &ks).unwrap();
        let y = analyze(&x, &ks).unwrap();
        for t in 0..y.frames() {
            for k in 0..y.bins() {
                let c = y.cell(t, k);
                assert_eq!(c[0] * c[1], 0.0);
                assert_eq!(c[2] * c[3], 0.0);
                assert_eq!(
                    y.coefficient(t, k),
                    (re[t * y.bins() + k], im[t * y.bins() + k])
                );
            }
        }
    }

    #[test]
    fn parseval_per_frame() {
        let n = 32;
        let x = noise(4 * n, 9);
        let ks = build_kernels(n, 0.0, 1.0, 1.0, false).unwrap();
        let fold = build_kernels(n, 0.0, 1.0, 1.0, true).unwrap();
        let y = analyze(&x, &ks).unwrap();
        let h = Window::SqrtHann.coefficients(n);
        for t in 0..y.frames() {
            let coef: f64 = (0..y.bins())
                .map(|k| {
                    let (a, b) = y.coefficient(t, k);
                    fold.synthesis_scale()[k] * (a * a + b * b)
                })
                .sum();
            let time: f64 = (0..n)
                .map(|i| (h[i] * x[(t * n / 2 + i) % x.len()]).powi(2))
                .sum();
            assert!((coef - time).abs() <= 1e-6 * time);
        }
    }

    #[test]
    fn interior_filters_stay_in_band() {
        // calibrated with the brute-force DFT below: worst case ~0.98
        const MIN_IN_BAND: f64 = 0.75;
        for (n, lo, hi) in [
            (40, 0.6, 1.0),
            (80, 0.36, 0.6),
            (160, 0.216, 0.36),
            (64, 0.0, 0.5),
        ] {
            let ks = build_kernels(n, lo, hi, 1.0, false).unwrap();
            let m = 8 * n;
            for k in 1..ks.num_filters() - 1 {
                let mut re = ks.real_part(k).to_vec();
                let mut im: Vec<f64> = ks.imag_part(k).iter().map(|v| -v).collect();
                re.resize(m, 0.0);
                im.resize(m, 0.0);
                let e = dft_energy(&re, &im, m);
                let total: f64 = e.iter().sum();
                let inside: f64 = e
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| {
                        let f = 2.0 * *j as f64 / m as f64;
                        f >= lo - 1e-12 && f <= hi + 1e-12
                    })
                    .map(|(_, v)| v)
                    .sum();
                assert!(
                    inside / total >= MIN_IN_BAND,
                    "n {n} filter {k}: {}",
                    inside / total
                );
            }
        }
    }

    #[test]
    fn synthesis_rejects_mismatched_shapes() {
        let s = build_kernels(8, 0.0, 1.0, 1.0, true).unwrap();
        let a = build_kernels(8, 0.0, 1.0, 1.0, false).unwrap();
        assert!(synthesize(&ChannelTensor::zeros(4, 4), &s, 16).is_err());
        assert!(synthesize(&ChannelTensor::zeros(3, 5), &s, 16).is_err());
        assert!(synthesize(&ChannelTensor::zeros(4, 5), &a, 16).is_err());
        assert!(analyze(&[0.0; 16], &s).is_err());
        let zero = synthesize(&ChannelTensor::zeros(4, 5), &s, 16).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        assert!(matched(&a, &s));
    }
}

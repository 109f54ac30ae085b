//! Mask-based enhancement in the multiscale embedding space.
//!
//! `enhance` runs the full chain: split into unit-RMS frames, encode, ask a
//! [`MaskSource`] for a gain tensor, floor it at the minimum gain, multiply,
//! decode and cross-fade the frames back together. Oracle sources that see the
//! parallel target signal stand in for a trained mask estimator.

use rayon::prelude::*;

use crate::error::{bail, Result};
use crate::msae::{self, EmbeddingTensor, MsaeConfig};
use crate::signal_io::{self, ProcessingFrame, Waveform};
use crate::tensor::{ChannelTensor, CHANNELS};

/// Minimum mask gain, specified in amplitude decibels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainFloor {
    db: f64,
    linear: f64,
}

impl GainFloor {
    pub fn from_db(db: f64) -> Result<Self> {
        if !(db.is_finite() && db <= 0.0) {
            bail!(
                Domain,
                "gain floor must be a finite value <= 0 dB, got {db}"
            );
        }
        Ok(Self {
            db,
            linear: 10f64.powf(db / 20.0),
        })
    }

    /// 0 dB: every mask is lifted to one, leaving the autoencoder path.
    pub fn unity() -> Self {
        Self {
            db: 0.0,
            linear: 1.0,
        }
    }

    pub fn db(&self) -> f64 {
        self.db
    }

    pub fn linear(&self) -> f64 {
        self.linear
    }
}

/// Gains in `[0, 1]` with the same shape as the embedding they scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskTensor(ChannelTensor);

impl MaskTensor {
    pub fn new(tensor: ChannelTensor) -> Result<Self> {
        if let Some(i) = tensor
            .data()
            .iter()
            .position(|&v| !(0.0..=1.0).contains(&v))
        {
            bail!(
                Domain,
                "mask element {i} = {} lies outside [0, 1]",
                tensor.data()[i]
            );
        }
        Ok(Self(tensor))
    }

    pub fn constant(frames: usize, bins: usize, value: f64) -> Result<Self> {
        let data = vec![value; frames * bins * CHANNELS];
        Self::new(ChannelTensor::from_data(frames, bins, data)?)
    }

    /// Repeats one gain per (frame, bin) across the four channels.
    pub fn broadcast(frames: usize, bins: usize, gains: &[f64]) -> Result<Self> {
        if gains.len() != frames * bins {
            bail!(
                Consistency,
                "{} gains for a {frames}x{bins} mask",
                gains.len()
            );
        }
        let data = gains.iter().flat_map(|&g| [g; CHANNELS]).collect();
        Self::new(ChannelTensor::from_data(frames, bins, data)?)
    }

    pub fn tensor(&self) -> &ChannelTensor {
        &self.0
    }
}

/// `max(floor, M) * Z`, element-wise.
pub fn apply_mask(
    z: &EmbeddingTensor,
    m: &MaskTensor,
    floor: GainFloor,
) -> Result<EmbeddingTensor> {
    if z.shape() != m.0.shape() {
        bail!(
            Consistency,
            "mask shape {:?} differs from embedding shape {:?}",
            m.0.shape(),
            z.shape()
        );
    }
    let g = floor.linear();
    let data = z
        .tensor()
        .data()
        .iter()
        .zip(m.0.data())
        .map(|(&v, &mv)| mv.max(g) * v)
        .collect();
    z.with_tensor(ChannelTensor::from_data(z.frames(), z.bins(), data)?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MaskStats {
    /// Elements where the mask ratio had a zero denominator.
    pub degenerate_bins: usize,
}

impl std::ops::AddAssign for MaskStats {
    fn add_assign(&mut self, rhs: Self) {
        self.degenerate_bins += rhs.degenerate_bins;
    }
}

fn check_pair(target: &EmbeddingTensor, noisy: &EmbeddingTensor) -> Result<()> {
    if target.shape() != noisy.shape() || target.branch_bins() != noisy.branch_bins() {
        bail!(Consistency, "target and noisy embeddings differ in layout");
    }
    Ok(())
}

fn per_bin_mask(
    target: &EmbeddingTensor,
    noisy: &EmbeddingTensor,
    gain: impl Fn((f64, f64), (f64, f64)) -> Option<f64>,
) -> Result<(MaskTensor, MaskStats)> {
    check_pair(target, noisy)?;
    let (zs, zx) = (target.tensor(), noisy.tensor());
    let mut stats = MaskStats::default();
    let mut gains = Vec::with_capacity(zs.frames() * zs.bins());
    for t in 0..zs.frames() {
        for k in 0..zs.bins() {
            let g = gain(zs.coefficient(t, k), zx.coefficient(t, k)).unwrap_or_else(|| {
                stats.degenerate_bins += 1;
                0.0
            });
            gains.push(g.clamp(0.0, 1.0));
        }
    }
    Ok((
        MaskTensor::broadcast(zs.frames(), zs.bins(), &gains)?,
        stats,
    ))
}

/// `P_s / (P_s + P_n)` with `P_n` the power of the noisy-minus-target coefficient.
pub fn oracle_wiener_mask(
    target: &EmbeddingTensor,
    noisy: &EmbeddingTensor,
) -> Result<(MaskTensor, MaskStats)> {
    per_bin_mask(target, noisy, |(sr, si), (xr, xi)| {
        let ps = sr * sr + si * si;
        let pn = (xr - sr).powi(2) + (xi - si).powi(2);
        let den = ps + pn;
        (den > 0.0).then(|| ps / den)
    })
}

/// `min(1, |c_s| / |c_x|)`, zero where the noisy coefficient vanishes.
pub fn oracle_amplitude_mask(
    target: &EmbeddingTensor,
    noisy: &EmbeddingTensor,
) -> Result<(MaskTensor, MaskStats)> {
    per_bin_mask(target, noisy, |(sr, si), (xr, xi)| {
        let cx = xr.hypot(xi);
        (cx > 0.0).then(|| (sr.hypot(si) / cx).min(1.0))
    })
}

pub struct MaskInput<'a> {
    pub noisy: &'a EmbeddingTensor,
    /// Embedding of the parallel target frame, scaled by the noisy frame's gain.
    pub target: Option<&'a EmbeddingTensor>,
}

/// Maps an embedding to a mask. Implementations must be pure: the pipeline
/// calls them concurrently for different frames.
pub trait MaskSource: Sync {
    fn needs_target(&self) -> bool {
        false
    }

    fn mask(&self, input: &MaskInput<'_>) -> Result<(MaskTensor, MaskStats)>;
}

/// The same gain everywhere.
#[derive(Debug, Clone, Copy)]
pub struct ConstantMask(pub f64);

impl MaskSource for ConstantMask {
    fn mask(&self, input: &MaskInput<'_>) -> Result<(MaskTensor, MaskStats)> {
        let z = input.noisy;
        Ok((
            MaskTensor::constant(z.frames(), z.bins(), self.0)?,
            MaskStats::default(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    Wiener,
    /// Ideal ratio of amplitudes.
    Amplitude,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleMask(pub OracleKind);

impl MaskSource for OracleMask {
    fn needs_target(&self) -> bool {
        true
    }

    fn mask(&self, input: &MaskInput<'_>) -> Result<(MaskTensor, MaskStats)> {
        let Some(target) = input.target else {
            bail!(Consistency, "oracle masks need the parallel target signal");
        };
        match self.0 {
            OracleKind::Wiener => oracle_wiener_mask(target, input.noisy),
            OracleKind::Amplitude => oracle_amplitude_mask(target, input.noisy),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnhanceOutput {
    pub waveform: Waveform,
    pub frames: usize,
    pub stats: MaskStats,
}

/// Runs the frame-wise encode → mask → decode pipeline over a whole signal.
pub fn enhance(
    x: &Waveform,
    target: Option<&Waveform>,
    source: &dyn MaskSource,
    cfg: &MsaeConfig,
    floor: GainFloor,
    frame_len: usize,
) -> Result<EnhanceOutput> {
    cfg.check_length(frame_len)?;
    if let Some(s) = target {
        if s.len() != x.len() {
            bail!(
                Consistency,
                "target has {} samples, noisy input has {}",
                s.len(),
                x.len()
            );
        }
    }
    if source.needs_target() && target.is_none() {
        bail!(Consistency, "mask source requires a target signal");
    }

    let frames = signal_io::split_frames(x, frame_len, 0.5)?;
    let results: Vec<Result<(ProcessingFrame, MaskStats)>> = frames
        .par_iter()
        .map(|f| {
            if f.original_gain == 0.0 {
                return Ok((f.clone(), MaskStats::default()));
            }
            let z = msae::encode(&f.payload, cfg)?;
            let zs = match target {
                Some(s) => {
                    let seg: Vec<f64> = signal_io::segment(s.samples(), f.offset, frame_len)
                        .into_iter()
                        .map(|v| v / f.original_gain)
                        .collect();
                    Some(msae::encode(&seg, cfg)?)
                }
                None => None,
            };
            let (mask, stats) = source.mask(&MaskInput {
                noisy: &z,
                target: zs.as_ref(),
            })?;
            let masked = apply_mask(&z, &mask, floor)?;
            let payload = msae::decode(&masked, cfg, frame_len)?;
            Ok((
                ProcessingFrame {
                    payload,
                    original_gain: f.original_gain,
                    offset: f.offset,
                },
                stats,
            ))
        })
        .collect();

    let mut stats = MaskStats::default();
    let mut processed = Vec::with_capacity(results.len());
    for r in results {
        let (f, s) = r?;
        stats += s;
        processed.push(f);
    }
    let samples = signal_io::overlap_add(&processed, x.len())?;
    Ok(EnhanceOutput {
        waveform: Waveform::new(samples, x.sample_rate())?,
        frames: processed.len(),
        stats,
    })
}

/// Autoencoder path over a whole signal: unit mask, 0 dB floor.
pub fn reconstruct(x: &Waveform, cfg: &MsaeConfig, frame_len: usize) -> Result<Waveform> {
    Ok(enhance(
        x,
        None,
        &ConstantMask(1.0),
        cfg,
        GainFloor::unity(),
        frame_len,
    )?
    .waveform)
}

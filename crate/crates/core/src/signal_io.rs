//! Waveform container, WAV file I/O and the windowed processing convention:
//! split into half-overlapping frames, normalize each to unit RMS, process,
//! restore the gain and cross-fade the frames back together.

use std::path::Path;

use crate::error::{bail, Error, Result};

/// Sample rate every analysis in this crate assumes unless told otherwise.
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Processing window length used by the enhancement pipeline (1.28 s at 16 kHz).
pub const DEFAULT_FRAME_LEN: usize = 20_480;

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            bail!(Domain, "sample rate must be positive");
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            bail!(Domain, "sample {i} is not finite");
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Fails unless the waveform was recorded at `expected` Hz. Nothing is resampled.
    pub fn require_rate(&self, expected: u32) -> Result<()> {
        if self.sample_rate != expected {
            bail!(
                Config,
                "expected {expected} Hz audio, got {} Hz (resampling is not supported)",
                self.sample_rate
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavEncoding {
    /// 16-bit signed integer PCM, samples scaled by 32768.
    #[default]
    Pcm16,
    /// IEEE 754 single precision.
    Float32,
}

/// Reads channel 0 of a PCM16 or float32 RIFF/WAVE file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let reader = hound::WavReader::open(path.as_ref()).map_err(map_hound)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let expected = reader.len() as usize;

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (fmt, bits) => bail!(Unsupported, "{bits}-bit {fmt:?} samples"),
    };
    if interleaved.len() != expected {
        bail!(
            Format,
            "data chunk declares {expected} samples but {} are present",
            interleaved.len()
        );
    }

    let samples = interleaved.into_iter().step_by(channels).collect();
    Waveform::new(samples, spec.sample_rate).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_wav(path: impl AsRef<Path>, w: &Waveform, encoding: WavEncoding) -> Result<()> {
    let (bits, format) = match encoding {
        WavEncoding::Pcm16 => (16, hound::SampleFormat::Int),
        WavEncoding::Float32 => (32, hound::SampleFormat::Float),
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: bits,
        sample_format: format,
    };
    let mut writer = hound::WavWriter::create(path.as_ref(), spec).map_err(map_hound)?;
    for &s in &w.samples {
        match encoding {
            WavEncoding::Pcm16 => writer.write_sample(quantize_pcm16(s)),
            WavEncoding::Float32 => writer.write_sample(s as f32),
        }
        .map_err(map_hound)?;
    }
    writer.finalize().map_err(map_hound)
}

fn quantize_pcm16(s: f64) -> i16 {
    (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

fn map_hound(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io)
            if io.kind() == std::io::ErrorKind::UnexpectedEof
                || io.to_string().contains("enough bytes") =>
        {
            Error::Format(format!("truncated file: {io}"))
        }
        hound::Error::IoError(io) => Error::Io(io),
        hound::Error::FormatError(msg) => Error::Format(msg.to_string()),
        hound::Error::Unsupported => Error::Unsupported("wav feature not supported".into()),
        other => Error::Format(other.to_string()),
    }
}

/// One unit-RMS analysis window cut from a longer signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessingFrame {
    pub payload: Vec<f64>,
    /// RMS of the segment before normalization; zero for silent segments.
    pub original_gain: f64,
    pub offset: usize,
}

/// Start offsets of half-overlapping frames that cover `len` samples.
///
/// Frames advance by `frame_len / 2` until one reaches the end of the signal, so
/// a signal of length `2 * frame_len` yields offsets `0, frame_len/2, frame_len`.
pub fn frame_offsets(len: usize, frame_len: usize) -> Vec<usize> {
    let stride = frame_len / 2;
    let extra = len.saturating_sub(frame_len);
    let count = 1 + extra.div_ceil(stride);
    (0..count).map(|i| i * stride).collect()
}

/// Copies `frame_len` samples starting at `offset`, zero-filling past the end.
pub fn segment(samples: &[f64], offset: usize, frame_len: usize) -> Vec<f64> {
    let mut out = vec![0.0; frame_len];
    if offset < samples.len() {
        let end = (offset + frame_len).min(samples.len());
        out[..end - offset].copy_from_slice(&samples[offset..end]);
    }
    out
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn check_framing(frame_len: usize, overlap: f64) -> Result<()> {
    if frame_len == 0 {
        bail!(Config, "frame length must be positive");
    }
    if frame_len % 2 != 0 {
        bail!(Config, "frame length {frame_len} must be even");
    }
    if overlap != 0.5 {
        bail!(Config, "only 50% overlap is supported, got {overlap}");
    }
    Ok(())
}

pub fn split_frames(w: &Waveform, frame_len: usize, overlap: f64) -> Result<Vec<ProcessingFrame>> {
    check_framing(frame_len, overlap)?;
    if w.is_empty() {
        bail!(Domain, "cannot frame an empty waveform");
    }
    let frames = frame_offsets(w.len(), frame_len)
        .into_iter()
        .map(|offset| {
            let mut payload = segment(&w.samples, offset, frame_len);
            let gain = rms(&payload);
            if gain > 0.0 {
                payload.iter_mut().for_each(|v| *v /= gain);
            }
            ProcessingFrame {
                payload,
                original_gain: gain,
                offset,
            }
        })
        .collect();
    Ok(frames)
}

/// Re-applies each frame's gain and cross-fades neighbours with linear ramps
/// over their shared half. Weights of overlapping frames sum to one; the
/// leading half of the first frame and trailing half of the last are unweighted.
pub fn overlap_add(frames: &[ProcessingFrame], total_len: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; total_len];
    let Some(first) = frames.first() else {
        if total_len == 0 {
            return Ok(out);
        }
        bail!(Consistency, "no frames to cover {total_len} samples");
    };
    let frame_len = first.payload.len();
    if frame_len == 0 || frame_len % 2 != 0 {
        bail!(
            Consistency,
            "frame length {frame_len} must be even and positive"
        );
    }
    let stride = frame_len / 2;
    for (i, f) in frames.iter().enumerate() {
        if f.payload.len() != frame_len {
            bail!(
                Consistency,
                "frame {i} has {} samples, expected {frame_len}",
                f.payload.len()
            );
        }
        if f.offset != i * stride {
            bail!(
                Consistency,
                "frame {i} starts at {}, expected {}",
                f.offset,
                i * stride
            );
        }
    }
    let last = frames.len() - 1;
    if frames[last].offset + frame_len < total_len {
        bail!(Consistency, "frames stop before sample {total_len}");
    }

    let ramp = |j: usize| (j as f64 + 0.5) / stride as f64;
    for (i, f) in frames.iter().enumerate() {
        for (j, &v) in f.payload.iter().enumerate() {
            let n = f.offset + j;
            if n >= total_len {
                break;
            }
            let weight = if j < stride {
                if i > 0 {
                    ramp(j)
                } else {
                    1.0
                }
            } else if i < last {
                1.0 - ramp(j - stride)
            } else {
                1.0
            };
            out[n] += weight * v * f.original_gain;
        }
    }
    Ok(out)
}

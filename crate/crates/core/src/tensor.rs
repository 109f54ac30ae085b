use std::ops::Range;

use crate::error::{bail, Result};

/// Number of non-negative planes used to encode one complex coefficient:
/// `[relu(re), relu(-re), relu(im), relu(-im)]`.
pub const CHANNELS: usize = 4;

/// Frames × bins × 4 tensor of non-negative values, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    frames: usize,
    bins: usize,
    data: Vec<f64>,
}

impl ChannelTensor {
    pub fn zeros(frames: usize, bins: usize) -> Self {
        Self {
            frames,
            bins,
            data: vec![0.0; frames * bins * CHANNELS],
        }
    }

    pub fn from_data(frames: usize, bins: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != frames * bins * CHANNELS {
            bail!(
                Consistency,
                "{} values do not fill a {frames}x{bins}x{CHANNELS} tensor",
                data.len()
            );
        }
        if let Some(i) = data.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            bail!(Domain, "element {i} is negative or not finite");
        }
        Ok(Self { frames, bins, data })
    }

    /// Splits signed real/imaginary planes (each `frames * bins`) into the
    /// four rectified channels.
    pub fn from_complex(frames: usize, bins: usize, re: &[f64], im: &[f64]) -> Self {
        debug_assert_eq!(re.len(), frames * bins);
        debug_assert_eq!(im.len(), frames * bins);
        let mut data = Vec::with_capacity(frames * bins * CHANNELS);
        for (&r, &i) in re.iter().zip(im) {
            data.extend_from_slice(&[r.max(0.0), (-r).max(0.0), i.max(0.0), (-i).max(0.0)]);
        }
        Self { frames, bins, data }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.frames, self.bins, CHANNELS)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn idx(&self, t: usize, k: usize) -> usize {
        (t * self.bins + k) * CHANNELS
    }

    pub fn get(&self, t: usize, k: usize, c: usize) -> f64 {
        self.data[self.idx(t, k) + c]
    }

    pub fn cell(&self, t: usize, k: usize) -> &[f64] {
        let i = self.idx(t, k);
        &self.data[i..i + CHANNELS]
    }

    /// Signed complex coefficient recovered from the channel planes.
    pub fn coefficient(&self, t: usize, k: usize) -> (f64, f64) {
        let c = self.cell(t, k);
        (c[0] - c[1], c[2] - c[3])
    }

    pub fn select_bins(&self, range: Range<usize>) -> ChannelTensor {
        let bins = range.len();
        let mut data = Vec::with_capacity(self.frames * bins * CHANNELS);
        for t in 0..self.frames {
            let a = self.idx(t, range.start);
            data.extend_from_slice(&self.data[a..a + bins * CHANNELS]);
        }
        ChannelTensor {
            frames: self.frames,
            bins,
            data,
        }
    }

    /// Concatenates blocks with equal frame counts along the bin axis.
    pub fn concat_bins(blocks: &[ChannelTensor]) -> Result<ChannelTensor> {
        let Some(first) = blocks.first() else {
            return Ok(ChannelTensor::zeros(0, 0));
        };
        let frames = first.frames;
        if blocks.iter().any(|b| b.frames != frames) {
            bail!(Consistency, "blocks disagree on frame count");
        }
        let bins = blocks.iter().map(|b| b.bins).sum();
        let mut data = Vec::with_capacity(frames * bins * CHANNELS);
        for t in 0..frames {
            for b in blocks {
                let a = b.idx(t, 0);
                data.extend_from_slice(&b.data[a..a + b.bins * CHANNELS]);
            }
        }
        Ok(ChannelTensor { frames, bins, data })
    }

    /// Nearest-neighbour upsampling in time: each frame is emitted `factor` times.
    pub fn repeat_frames(&self, factor: usize) -> ChannelTensor {
        let row = self.bins * CHANNELS;
        let mut data = Vec::with_capacity(self.data.len() * factor);
        for t in 0..self.frames {
            let src = &self.data[t * row..(t + 1) * row];
            for _ in 0..factor {
                data.extend_from_slice(src);
            }
        }
        ChannelTensor {
            frames: self.frames * factor,
            bins: self.bins,
            data,
        }
    }

    /// Element-wise max over non-overlapping runs of `factor` frames.
    pub fn max_pool_frames(&self, factor: usize) -> Result<ChannelTensor> {
        if factor == 0 || self.frames % factor != 0 {
            bail!(
                Consistency,
                "{} frames cannot be pooled by {factor}",
                self.frames
            );
        }
        let row = self.bins * CHANNELS;
        let frames = self.frames / factor;
        let mut data = vec![0.0f64; frames * row];
        for (t, out) in data.chunks_exact_mut(row).enumerate() {
            for r in 0..factor {
                let src = &self.data[(t * factor + r) * row..(t * factor + r + 1) * row];
                for (o, &v) in out.iter_mut().zip(src) {
                    *o = o.max(v);
                }
            }
        }
        Ok(ChannelTensor {
            frames,
            bins: self.bins,
            data,
        })
    }

    pub fn scaled(&self, alpha: f64) -> ChannelTensor {
        ChannelTensor {
            frames: self.frames,
            bins: self.bins,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }
}

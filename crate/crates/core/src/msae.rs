//! Multiscale encoder and decoder.
//!
//! Branch `b` (1-based, lowest band first) analyzes band `(w[b-1], w[b])` with a
//! window of `2^(B-b) * N_o` samples. Slower branches are brought to the base
//! frame rate by frame repetition and all branches are concatenated along the
//! bin axis. The decoder max-pools each block back to its native rate,
//! synthesizes it and sums the branch outputs.

use std::ops::Range;

use crate::bands::BandPlan;
use crate::error::{bail, Error, Result};
use crate::tensor::{ChannelTensor, CHANNELS};
use crate::xform::{self, KernelSet};

#[derive(Debug, Clone)]
pub struct Branch {
    index: usize,
    repeat: usize,
    analysis: KernelSet,
    synthesis: KernelSet,
}

impl Branch {
    /// 1-based branch number, 1 = lowest band.
    pub fn index(&self) -> usize {
        self.index
    }

    /// Frame-repetition factor `2^(B-b)` relative to the base rate.
    pub fn repeat(&self) -> usize {
        self.repeat
    }

    pub fn window_len(&self) -> usize {
        self.analysis.window_len()
    }

    pub fn band(&self) -> (f64, f64) {
        self.analysis.band()
    }

    pub fn num_bins(&self) -> usize {
        self.analysis.num_filters()
    }

    pub fn analysis(&self) -> &KernelSet {
        &self.analysis
    }

    pub fn synthesis(&self) -> &KernelSet {
        &self.synthesis
    }
}

#[derive(Debug, Clone)]
pub struct MsaeConfig {
    plan: BandPlan,
    base_window: usize,
    overcompleteness: f64,
    branches: Vec<Branch>,
}

impl MsaeConfig {
    pub fn new(plan: BandPlan, base_window: usize, overcompleteness: f64) -> Result<Self> {
        if base_window < 2 || base_window % 2 != 0 {
            bail!(
                Config,
                "base window {base_window} must be even and at least 2"
            );
        }
        let num = plan.num_bands();
        if num > 24 {
            bail!(Config, "{num} branches is too many");
        }
        let mut branches = Vec::with_capacity(num);
        for b in 1..=num {
            let (lo, hi) = plan.band(b)?;
            let repeat = 1usize << (num - b);
            let n = repeat * base_window;
            let build = |synth| {
                xform::build_kernels(n, lo, hi, overcompleteness, synth).map_err(|e| {
                    Error::Config(format!("branch {b} (window {n}, band [{lo}, {hi}]): {e}"))
                })
            };
            branches.push(Branch {
                index: b,
                repeat,
                analysis: build(false)?,
                synthesis: build(true)?,
            });
        }
        Ok(Self {
            plan,
            base_window,
            overcompleteness,
            branches,
        })
    }

    /// Constant-Q configuration from `(B, Q, T_o)`, with `T_o` in milliseconds.
    pub fn from_tuple(
        num_branches: usize,
        q: f64,
        base_window_ms: f64,
        overcompleteness: f64,
        sample_rate: u32,
    ) -> Result<Self> {
        let base_window = window_samples(base_window_ms, sample_rate)?;
        let plan = if num_branches == 1 {
            BandPlan::uniform(1)?
        } else {
            BandPlan::constant_q(num_branches, q)?
        };
        Self::new(plan, base_window, overcompleteness)
    }

    pub fn plan(&self) -> &BandPlan {
        &self.plan
    }

    pub fn num_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn base_window(&self) -> usize {
        self.base_window
    }

    pub fn overcompleteness(&self) -> f64 {
        self.overcompleteness
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Segment lengths must be a multiple of the longest branch window.
    pub fn required_multiple(&self) -> usize {
        self.branches[0].window_len()
    }

    pub fn check_length(&self, len: usize) -> Result<()> {
        let m = self.required_multiple();
        if len == 0 || len % m != 0 {
            bail!(
                Config,
                "segment length {len} must be a positive multiple of {m} (2^(B-1) * N_o)"
            );
        }
        Ok(())
    }

    /// Frames at the base rate for a segment of `len` samples.
    pub fn frames_for(&self, len: usize) -> usize {
        2 * len / self.base_window
    }

    pub fn branch_bins(&self) -> Vec<usize> {
        self.branches.iter().map(Branch::num_bins).collect()
    }

    pub fn total_bins(&self) -> usize {
        self.branches.iter().map(Branch::num_bins).sum()
    }
}

pub fn window_samples(ms: f64, sample_rate: u32) -> Result<usize> {
    let n = ms * sample_rate as f64 / 1000.0;
    let r = n.round();
    if !(ms > 0.0) || (n - r).abs() > 1e-6 || r < 2.0 || r as usize % 2 != 0 {
        bail!(
            Config,
            "{ms} ms at {sample_rate} Hz is not an even whole number of samples"
        );
    }
    Ok(r as usize)
}

/// Encoder output: the concatenated branch blocks plus their bin counts.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTensor {
    tensor: ChannelTensor,
    branch_bins: Vec<usize>,
}

impl EmbeddingTensor {
    pub fn new(tensor: ChannelTensor, branch_bins: Vec<usize>) -> Result<Self> {
        if branch_bins.iter().sum::<usize>() != tensor.bins() {
            bail!(
                Consistency,
                "branch bin counts do not add up to the tensor width"
            );
        }
        Ok(Self {
            tensor,
            branch_bins,
        })
    }

    pub fn zeros_like(cfg: &MsaeConfig, len: usize) -> Self {
        Self {
            tensor: ChannelTensor::zeros(cfg.frames_for(len), cfg.total_bins()),
            branch_bins: cfg.branch_bins(),
        }
    }

    pub fn tensor(&self) -> &ChannelTensor {
        &self.tensor
    }

    pub fn into_tensor(self) -> ChannelTensor {
        self.tensor
    }

    pub fn branch_bins(&self) -> &[usize] {
        &self.branch_bins
    }

    pub fn frames(&self) -> usize {
        self.tensor.frames()
    }

    pub fn bins(&self) -> usize {
        self.tensor.bins()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.tensor.shape()
    }

    /// Bin-axis range of branch `b` (1-based).
    pub fn branch_range(&self, b: usize) -> Range<usize> {
        let start: usize = self.branch_bins[..b - 1].iter().sum();
        start..start + self.branch_bins[b - 1]
    }

    pub fn branch_block(&self, b: usize) -> ChannelTensor {
        self.tensor.select_bins(self.branch_range(b))
    }

    pub fn with_tensor(&self, tensor: ChannelTensor) -> Result<Self> {
        if tensor.shape() != self.tensor.shape() {
            bail!(Consistency, "replacement tensor has a different shape");
        }
        Ok(Self {
            tensor,
            branch_bins: self.branch_bins.clone(),
        })
    }
}

/// Per-branch analysis at native rate (`Y_b`), before frame repetition.
pub fn analyze_branches(x: &[f64], cfg: &MsaeConfig) -> Result<Vec<ChannelTensor>> {
    cfg.check_length(x.len())?;
    cfg.branches
        .iter()
        .map(|br| xform::analyze(x, &br.analysis))
        .collect()
}

pub fn encode(x: &[f64], cfg: &MsaeConfig) -> Result<EmbeddingTensor> {
    let blocks: Vec<ChannelTensor> = analyze_branches(x, cfg)?
        .into_iter()
        .zip(&cfg.branches)
        .map(|(y, br)| y.repeat_frames(br.repeat))
        .collect();
    EmbeddingTensor::new(ChannelTensor::concat_bins(&blocks)?, cfg.branch_bins())
}

/// Max-pools each branch block back to its native frame rate.
pub fn pool_branches(z: &EmbeddingTensor, cfg: &MsaeConfig) -> Result<Vec<ChannelTensor>> {
    if z.branch_bins() != cfg.branch_bins().as_slice() {
        bail!(
            Consistency,
            "embedding branch layout does not match configuration"
        );
    }
    cfg.branches
        .iter()
        .map(|br| z.branch_block(br.index).max_pool_frames(br.repeat))
        .collect()
}

pub fn decode(z: &EmbeddingTensor, cfg: &MsaeConfig, len: usize) -> Result<Vec<f64>> {
    cfg.check_length(len)
        .map_err(|e| Error::Consistency(e.to_string()))?;
    if z.frames() != cfg.frames_for(len) {
        bail!(
            Consistency,
            "embedding has {} frames, expected {} for {len} samples",
            z.frames(),
            cfg.frames_for(len)
        );
    }
    let mut out = vec![0.0; len];
    for (y, br) in pool_branches(z, cfg)?.iter().zip(&cfg.branches) {
        let part = xform::synthesize(y, &br.synthesis, len)?;
        out.iter_mut().zip(part).for_each(|(o, p)| *o += p);
    }
    Ok(out)
}

/// Output of one branch alone, for band-limitation checks.
pub fn decode_branch(
    z: &EmbeddingTensor,
    cfg: &MsaeConfig,
    b: usize,
    len: usize,
) -> Result<Vec<f64>> {
    let br = cfg
        .branches
        .get(b.wrapping_sub(1))
        .ok_or_else(|| Error::Domain(format!("no branch {b}")))?;
    let y = z.branch_block(b).max_pool_frames(br.repeat)?;
    xform::synthesize(&y, &br.synthesis, len)
}

/// Frames × bins matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Magnitude {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<f64>,
}

impl Magnitude {
    pub fn get(&self, t: usize, k: usize) -> f64 {
        self.data[t * self.bins + k]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }
}

/// RMS over the channel axis.
pub fn magnitude(z: &EmbeddingTensor) -> Magnitude {
    let t = z.tensor();
    let data = t
        .data()
        .chunks_exact(CHANNELS)
        .map(|c| (c.iter().map(|v| v * v).sum::<f64>() / CHANNELS as f64).sqrt())
        .collect();
    Magnitude {
        frames: t.frames(),
        bins: t.bins(),
        data,
    }
}

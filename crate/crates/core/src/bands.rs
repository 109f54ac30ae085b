//! Band-edge designs that split the normalized spectrum `[0, 1]` (1 = Nyquist)
//! across encoder branches.

use crate::error::{bail, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandPlan {
    edges: Vec<f64>,
    quality_factor: Option<f64>,
}

impl BandPlan {
    /// Generalized Constant-Q design: every band above the lowest has center
    /// frequency / bandwidth equal to `q`, with the top edge pinned at Nyquist.
    ///
    /// Consecutive edges differ by the ratio `rho = (2q + 1) / (2q - 1)`, so
    /// `q = 1.5` gives `rho = 2`, the dyadic split.
    pub fn constant_q(num_bands: usize, q: f64) -> Result<Self> {
        if num_bands < 1 {
            bail!(Domain, "need at least one band");
        }
        if !(q.is_finite() && q > 0.5) {
            bail!(Domain, "quality factor must exceed 0.5, got {q}");
        }
        let rho = edge_ratio(q);
        let mut edges = Vec::with_capacity(num_bands + 1);
        edges.push(0.0);
        for b in 1..num_bands {
            edges.push(rho.powi(b as i32 - num_bands as i32));
        }
        edges.push(1.0);
        Ok(Self {
            edges,
            quality_factor: Some(q),
        })
    }

    pub fn uniform(num_bands: usize) -> Result<Self> {
        if num_bands < 1 {
            bail!(Domain, "need at least one band");
        }
        let edges = (0..=num_bands)
            .map(|b| b as f64 / num_bands as f64)
            .collect();
        Ok(Self {
            edges,
            quality_factor: None,
        })
    }

    /// Arbitrary edges; must start at 0, end at 1 and strictly increase.
    pub fn explicit(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            bail!(Domain, "need at least two band edges");
        }
        if edges[0] != 0.0 || *edges.last().unwrap() != 1.0 {
            bail!(Domain, "band edges must run from 0 to 1");
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            bail!(Domain, "band edges must strictly increase");
        }
        Ok(Self {
            edges,
            quality_factor: None,
        })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn num_bands(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn quality_factor(&self) -> Option<f64> {
        self.quality_factor
    }

    /// Normalized range `(low, high)` of band `b` (1-based, 1 = lowest).
    pub fn band(&self, b: usize) -> Result<(f64, f64)> {
        if b < 1 || b > self.num_bands() {
            bail!(Domain, "band index {b} outside 1..={}", self.num_bands());
        }
        Ok((self.edges[b - 1], self.edges[b]))
    }

    /// Center-to-width ratio of band `b`. The lowest band always measures 0.5
    /// because its lower edge sits at DC.
    pub fn measured_q(&self, b: usize) -> Result<f64> {
        let (lo, hi) = self.band(b)?;
        Ok((hi + lo) / (2.0 * (hi - lo)))
    }

    /// Edges in Hz for a given sample rate.
    pub fn edges_hz(&self, sample_rate: u32) -> Vec<f64> {
        let nyquist = sample_rate as f64 / 2.0;
        self.edges.iter().map(|e| e * nyquist).collect()
    }
}

pub fn edge_ratio(q: f64) -> f64 {
    (2.0 * q + 1.0) / (2.0 * q - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_edges() {
        let p = BandPlan::constant_q(3, 1.5).unwrap();
        assert_eq!(p.edges(), &[0.0, 0.25, 0.5, 1.0]);
        let p = BandPlan::constant_q(5, 1.5).unwrap();
        assert_eq!(p.edges(), &[0.0, 1.0 / 16.0, 0.125, 0.25, 0.5, 1.0]);
        assert_eq!(p.measured_q(5).unwrap(), 1.5);
    }

    #[test]
    fn q2_two_bands() {
        assert!((edge_ratio(2.0) - 5.0 / 3.0).abs() < 1e-15);
        let p = BandPlan::constant_q(2, 2.0).unwrap();
        assert!((p.edges()[1] - 0.6).abs() < 1e-15);
        assert_eq!(p.edges()[2], 1.0);
    }

    #[test]
    fn measured_q_matches_design_above_lowest_band() {
        let p = BandPlan::constant_q(5, 2.0).unwrap();
        for b in 2..=5 {
            assert!((p.measured_q(b).unwrap() - 2.0).abs() < 1e-12);
        }
        assert_eq!(p.measured_q(1).unwrap(), 0.5);
    }

    #[test]
    fn uniform_edges() {
        assert_eq!(
            BandPlan::uniform(4).unwrap().edges(),
            &[0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert_eq!(BandPlan::uniform(1).unwrap().edges(), &[0.0, 1.0]);
        assert_eq!(BandPlan::uniform(2).unwrap().measured_q(1).unwrap(), 0.5);
        assert!(BandPlan::uniform(0).is_err());
    }

    #[test]
    fn domain_errors() {
        assert!(BandPlan::constant_q(3, 0.5).is_err());
        assert!(BandPlan::constant_q(0, 2.0).is_err());
        let p = BandPlan::uniform(2).unwrap();
        assert!(p.measured_q(0).is_err());
        assert!(p.measured_q(3).is_err());
        assert!(BandPlan::explicit(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(BandPlan::explicit(vec![0.1, 1.0]).is_err());
    }

    #[test]
    fn hz_conversion() {
        let p = BandPlan::constant_q(2, 1.5).unwrap();
        assert_eq!(p.edges_hz(16_000), vec![0.0, 4000.0, 8000.0]);
    }
}

//! Flat key/value run configuration, stored as TOML.

use std::path::Path;

use msae_core::masking::GainFloor;
use msae_core::metrics::PmseParams;
use msae_core::msae::MsaeConfig;
use msae_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub branches: usize,
    pub quality_factor: f64,
    pub base_window_ms: f64,
    pub overcompleteness: f64,
    pub frame_len: usize,
    pub floor_db: f64,
    pub stft_win: usize,
    pub pmse_beta: f64,
    pub pmse_mu: f64,
    pub activity_prior: f64,
    pub sample_rate: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            branches: 5,
            quality_factor: 2.0,
            base_window_ms: 2.5,
            overcompleteness: 1.5,
            frame_len: msae_core::signal_io::DEFAULT_FRAME_LEN,
            floor_db: -50.0,
            stft_win: msae_core::targets::DEFAULT_WIN_LEN,
            pmse_beta: 0.97,
            pmse_mu: 255.0,
            activity_prior: 0.75,
            sample_rate: msae_core::signal_io::DEFAULT_SAMPLE_RATE,
        }
    }
}

impl RunConfig {
    /// `"default"` gives the built-in configuration; anything else is a file path.
    pub fn load(spec: &str) -> Result<Self> {
        if spec == "default" {
            return Ok(Self::default());
        }
        let text = std::fs::read_to_string(spec)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{spec}: {e}")))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{spec}: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat struct of scalars always serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }

    pub fn msae(&self) -> Result<MsaeConfig> {
        MsaeConfig::from_tuple(
            self.branches,
            self.quality_factor,
            self.base_window_ms,
            self.overcompleteness,
            self.sample_rate,
        )
    }

    pub fn floor(&self) -> Result<GainFloor> {
        GainFloor::from_db(self.floor_db)
    }

    pub fn pmse_params(&self) -> Result<PmseParams> {
        let p = PmseParams {
            beta: self.pmse_beta,
            mu: self.pmse_mu,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks every field and returns the filterbank it describes.
    pub fn validate(&self) -> Result<MsaeConfig> {
        let cfg = self.msae()?;
        cfg.check_length(self.frame_len)?;
        self.floor()?;
        self.pmse_params()?;
        if !(0.0..=1.0).contains(&self.activity_prior) {
            return Err(Error::Config(format!(
                "activity_prior must lie in [0, 1], got {}",
                self.activity_prior
            )));
        }
        if self.stft_win < 2 || self.stft_win % 2 != 0 {
            return Err(Error::Config(format!(
                "stft_win must be even and at least 2, got {}",
                self.stft_win
            )));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        let cfg = RunConfig::default().validate().unwrap();
        assert_eq!(cfg.base_window(), 40);
        assert_eq!(cfg.required_multiple(), 640);
    }

    #[test]
    fn save_then_load_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        let cfg = RunConfig {
            quality_factor: 1.0 / 3.0 + 1.0,
            floor_db: -17.123456789012345,
            pmse_mu: 0.1,
            ..RunConfig::default()
        };
        cfg.save(&p).unwrap();
        assert_eq!(RunConfig::load(p.to_str().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn partial_files_fill_in_defaults() {
        let cfg = RunConfig::from_toml("branches = 3\nfloor_db = -20.0\n").unwrap();
        assert_eq!(cfg.branches, 3);
        assert_eq!(cfg.floor_db, -20.0);
        assert_eq!(cfg.frame_len, 20_480);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        assert!(matches!(
            RunConfig::from_toml("brnches = 3"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RunConfig::from_toml("branches = \"x\""),
            Err(Error::Config(_))
        ));
        let bad = RunConfig {
            frame_len: 20_000,
            ..RunConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = RunConfig {
            activity_prior: 1.5,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}

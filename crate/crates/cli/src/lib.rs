//! Command-line surface for the multiscale filterbank: band design, analysis,
//! reconstruction, oracle-mask enhancement, target generation, evaluation and
//! a small synthetic mixer.

pub mod commands;
pub mod config;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use msae_core::signal_io::WavEncoding;
use msae_core::{Error, Result};

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "msae",
    version,
    about = "Multiscale constant-Q filterbank tools"
)]
pub struct Cli {
    /// Worker threads for frame-parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

/// Configuration source plus per-field overrides.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// `default` or a path to a TOML run configuration.
    #[arg(long, default_value = "default")]
    pub config: String,
    #[arg(long)]
    pub branches: Option<usize>,
    #[arg(long = "q")]
    pub quality_factor: Option<f64>,
    #[arg(long)]
    pub base_window_ms: Option<f64>,
    #[arg(long)]
    pub overcompleteness: Option<f64>,
    #[arg(long)]
    pub frame_len: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub floor_db: Option<f64>,
    /// STFT window length for target generation.
    #[arg(long = "win")]
    pub stft_win: Option<usize>,
    #[arg(long = "beta")]
    pub pmse_beta: Option<f64>,
    #[arg(long = "mu")]
    pub pmse_mu: Option<f64>,
    #[arg(long = "prior")]
    pub activity_prior: Option<f64>,
    #[arg(long)]
    pub sample_rate: Option<u32>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = RunConfig::load(&self.config)?;
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        take!(
            branches,
            quality_factor,
            base_window_ms,
            overcompleteness,
            frame_len,
            floor_db,
            stft_win,
            pmse_beta,
            pmse_mu,
            activity_prior,
            sample_rate
        );
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Encoding {
    #[default]
    Pcm16,
    Float32,
}

impl From<Encoding> for WavEncoding {
    fn from(e: Encoding) -> Self {
        match e {
            Encoding::Pcm16 => WavEncoding::Pcm16,
            Encoding::Float32 => WavEncoding::Float32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MaskKind {
    Wiener,
    /// Ideal ratio of amplitudes.
    Iram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpecFormat {
    Csv,
    Pgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseKind {
    White,
    Pink,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the band edges of a configuration as JSON.
    DesignBands {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Export the embedding magnitude of every processing frame.
    Analyze {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the format implied by the output extension.
        #[arg(long)]
        format: Option<SpecFormat>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run the autoencoder path and report the reconstruction error.
    Reconstruct {
        input: PathBuf,
        output: PathBuf,
        /// Also print the segmental SNR of the reconstruction.
        #[arg(long)]
        report: bool,
        #[arg(long, value_enum, default_value_t)]
        encoding: Encoding,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Enhance with an oracle mask computed from the clean target.
    EnhanceOracle {
        #[arg(long)]
        noisy: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum, default_value = "wiener")]
        mask: MaskKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        encoding: Encoding,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Build a Wiener-filtered training target from clean and reverberant speech.
    MakeTarget {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        reverb: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        encoding: Encoding,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Compare an estimate against a reference; prints JSON.
    Eval {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        est: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Write a synthetic clean/noisy pair at a requested SNR.
    Mix {
        /// Clean input; a seeded speech-shaped signal is generated when absent.
        #[arg(long)]
        clean: Option<PathBuf>,
        #[arg(long)]
        clean_out: Option<PathBuf>,
        #[arg(long)]
        noisy_out: PathBuf,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        snr_db: f64,
        #[arg(long, value_enum, default_value = "white")]
        noise: NoiseKind,
        #[arg(long, default_value_t = 4.0)]
        seconds: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// RMS of the generated clean signal.
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        #[arg(long, value_enum, default_value_t)]
        encoding: Encoding,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

/// Runs a parsed invocation, writing reports to `out`.
pub fn run(cli: Cli, out: &mut (dyn Write + Send)) -> Result<()> {
    let go = |out: &mut (dyn Write + Send)| commands::dispatch(cli.command, out);
    match cli.threads {
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            pool.install(|| go(out))
        }
        None => go(out),
    }
}

/// One line, `key=value` fields, message JSON-quoted.
pub fn error_line(e: &Error) -> String {
    let msg = serde_json::to_string(&e.to_string()).unwrap_or_default();
    format!("error: kind={} message={msg}", e.kind())
}

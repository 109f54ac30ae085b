//! Multiscale constant-Q analysis/synthesis filterbank and mask-based
//! speech enhancement.
//!
//! The encoder splits the spectrum into `B` bands, analyzes each with a
//! windowed DFT whose window doubles for every band further down, and stacks
//! the results at a common frame rate. The decoder inverts that path. Masks in
//! `[0, 1]` applied between the two give enhancement; a unit mask gives the
//! autoencoder path.

pub mod bands;
pub mod error;
pub mod masking;
pub mod metrics;
pub mod msae;
pub mod signal_io;
pub mod synth;
pub mod targets;
pub mod tensor;
pub mod xform;

pub use bands::BandPlan;
pub use error::{Error, Result};
pub use masking::{enhance, GainFloor, MaskSource, MaskTensor};
pub use msae::{decode, encode, EmbeddingTensor, MsaeConfig};
pub use signal_io::{read_wav, write_wav, Waveform};
pub use tensor::ChannelTensor;

//! Landmark-based audio fingerprinting.
//!
//! Songs are learned by hashing pairs of spectrogram peaks into 64-bit
//! digests stored in a flat-file index; unknown clips are recognized by
//! looking up their digests and voting over aligned offset differences.
//!
//! The pipeline, bottom up:
//!
//! * [`audio`]: WAV decoding, slicing, tone synthesis.
//! * [`dsp`]: radix-2 FFT, naive DFT, Hann-windowed STFT in dB.
//! * [`peaks`]: local-maximum peak picking over a square neighborhood.
//! * [`fingerprint`]: peak pairing and SHA-1 based pair hashing.
//! * [`store`]: on-disk song manifest and hash index.
//! * [`matcher`]: offset-histogram voting.
//! * [`augment`]: noise mixing and distortion for robustness runs.
//! * [`eval`]: accuracy, timing and storage experiments.
//! * [`cli`]: the `afp` command line.

pub mod audio;
pub mod augment;
pub mod cli;
pub mod dsp;
mod error;
pub mod eval;
pub mod fingerprint;
pub mod matcher;
pub mod peaks;
pub mod store;

pub use audio::{AudioClip, SamplingPolicy};
pub use error::{Error, Result};
pub use fingerprint::{Digest, Fingerprint, FingerprintConfig};
pub use matcher::{recognize, RecognitionResult};
pub use peaks::{Peak, PeakParams};
pub use store::{StorageReport, Store};

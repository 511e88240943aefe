//! Background noise and distortion for robustness experiments.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{AudioClip, Error, Result};

/// One degradation applied to a query clip.
#[derive(Clone, PartialEq)]
pub enum AugmentSpec {
    /// Seeded uniform white noise at the given SNR.
    WhiteNoise { snr_db: f64, seed: u64 },
    /// A window of a user-supplied noise bed, chosen by `seed`, at the
    /// given SNR.
    MixedClip {
        bed: Arc<AudioClip>,
        snr_db: f64,
        seed: u64,
    },
    Gain { gain_factor: f64 },
    HardClip { clip_threshold: f64 },
}

impl AugmentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::WhiteNoise { .. } => "white_noise",
            Self::MixedClip { .. } => "mixed_clip",
            Self::Gain { .. } => "gain",
            Self::HardClip { .. } => "hard_clip",
        }
    }

    /// Same spec with its noise seed replaced; distortions are unchanged.
    pub fn reseeded(&self, seed: u64) -> Self {
        match self {
            Self::WhiteNoise { snr_db, .. } => Self::WhiteNoise {
                snr_db: *snr_db,
                seed,
            },
            Self::MixedClip { bed, snr_db, .. } => Self::MixedClip {
                bed: Arc::clone(bed),
                snr_db: *snr_db,
                seed,
            },
            other => other.clone(),
        }
    }
}

impl fmt::Display for AugmentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::WhiteNoise { snr_db, seed } => write!(f, "white_noise snr_db={snr_db} seed={seed}"),
            Self::MixedClip { bed, snr_db, seed } => write!(
                f,
                "mixed_clip bed_seconds={:.3} snr_db={snr_db} seed={seed}",
                bed.duration_seconds()
            ),
            Self::Gain { gain_factor } => write!(f, "gain factor={gain_factor}"),
            Self::HardClip { clip_threshold } => write!(f, "hard_clip threshold={clip_threshold}"),
        }
    }
}

impl fmt::Debug for AugmentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AugmentSpec({self})")
    }
}

/// Noise gain that puts `noise` at `snr_db` below `signal`, both measured
/// as mean square over the first `signal.len()` samples.
pub fn noise_scale(signal: &[f64], noise: &[f64], snr_db: f64) -> Result<f64> {
    let n = signal.len();
    let p_signal = signal.iter().map(|s| s * s).sum::<f64>() / n as f64;
    let p_noise = noise[..n].iter().map(|s| s * s).sum::<f64>() / n as f64;
    if p_signal == 0.0 {
        return Err(Error::SilentSignal);
    }
    if p_noise == 0.0 {
        return Err(Error::SilentNoise);
    }
    Ok((p_signal / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt())
}

/// `clamp(signal + alpha * noise, -1, 1)` with `alpha` solving the SNR
/// equation exactly. The noise is truncated to the clip length.
pub fn mix_noise(clip: &AudioClip, noise: &AudioClip, snr_db: f64) -> Result<AudioClip> {
    if clip.sample_rate_hz() != noise.sample_rate_hz() {
        return Err(Error::RateMismatch {
            clip: noise.sample_rate_hz(),
            expected: clip.sample_rate_hz(),
        });
    }
    if noise.len() < clip.len() {
        return Err(Error::InvalidArgument(format!(
            "noise has {} samples, clip needs {}",
            noise.len(),
            clip.len()
        )));
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument(format!("snr_db {snr_db} is not finite")));
    }
    let alpha = noise_scale(clip.samples(), noise.samples(), snr_db)?;
    let mixed = clip
        .samples()
        .iter()
        .zip(noise.samples())
        .map(|(s, n)| (s + alpha * n).clamp(-1.0, 1.0))
        .collect();
    AudioClip::new(mixed, clip.sample_rate_hz())
}

/// I.i.d. uniform samples on `[-0.5, 0.5]` from a seeded ChaCha stream.
pub fn white_noise(duration_seconds: f64, rate_hz: u32, seed: u64) -> Result<AudioClip> {
    let n = (duration_seconds * f64::from(rate_hz)).round() as usize;
    if !(duration_seconds > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "duration {duration_seconds}s yields no samples"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n).map(|_| rng.gen_range(-0.5..=0.5)).collect();
    AudioClip::new(samples, rate_hz)
}

/// Gain or hard clipping; noise kinds are rejected.
pub fn distort(clip: &AudioClip, spec: &AugmentSpec) -> Result<AudioClip> {
    let samples: Vec<f64> = match *spec {
        AugmentSpec::Gain { gain_factor } => {
            if !(gain_factor > 0.0 && gain_factor.is_finite()) {
                return Err(Error::BadSpec(format!("gain factor {gain_factor}")));
            }
            clip.samples()
                .iter()
                .map(|s| (s * gain_factor).clamp(-1.0, 1.0))
                .collect()
        }
        AugmentSpec::HardClip { clip_threshold } => {
            if !(clip_threshold > 0.0 && clip_threshold <= 1.0) {
                return Err(Error::BadSpec(format!("clip threshold {clip_threshold}")));
            }
            clip.samples()
                .iter()
                .map(|s| (s.clamp(-clip_threshold, clip_threshold) / clip_threshold).clamp(-1.0, 1.0))
                .collect()
        }
        _ => {
            return Err(Error::BadSpec(format!(
                "{} is not a distortion",
                spec.kind()
            )))
        }
    };
    AudioClip::new(samples, clip.sample_rate_hz())
}

/// Applies any spec kind to `clip`.
pub fn apply(clip: &AudioClip, spec: &AugmentSpec) -> Result<AudioClip> {
    match spec {
        AugmentSpec::WhiteNoise { snr_db, seed } => {
            let rate = clip.sample_rate_hz();
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let noise: Vec<f64> = (0..clip.len()).map(|_| rng.gen_range(-0.5..=0.5)).collect();
            mix_noise(clip, &AudioClip::new(noise, rate)?, *snr_db)
        }
        AugmentSpec::MixedClip { bed, snr_db, seed } => {
            if bed.len() < clip.len() {
                return Err(Error::InvalidArgument(format!(
                    "noise bed of {:.3}s is shorter than the {:.3}s clip",
                    bed.duration_seconds(),
                    clip.duration_seconds()
                )));
            }
            let start = ChaCha8Rng::seed_from_u64(*seed).gen_range(0..=bed.len() - clip.len());
            let window = AudioClip::new(
                bed.samples()[start..start + clip.len()].to_vec(),
                bed.sample_rate_hz(),
            )?;
            mix_noise(clip, &window, *snr_db)
        }
        AugmentSpec::Gain { .. } | AugmentSpec::HardClip { .. } => distort(clip, spec),
    }
}

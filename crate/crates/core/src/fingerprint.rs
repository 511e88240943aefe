//! Constellation pairing and pair hashing.

use std::fmt;

use sha1::{Digest as _, Sha1};

use crate::audio::DEFAULT_SAMPLE_RATE;
use crate::dsp::stft;
use crate::peaks::{extract_peaks, Peak, PeakParams};
use crate::{AudioClip, Error, Result};

/// 64-bit fingerprint hash: the first 8 bytes of a SHA-1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digest(pub [u8; 8]);

impl Digest {
    pub const LEN: usize = 8;

    pub fn as_bytes(&self) -> &[u8; 8] {
        &self.0
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

/// An anchor peak joined to a later target peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstellationPair {
    pub f1: usize,
    pub f2: usize,
    pub delta_t: usize,
    pub anchor_frame: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fingerprint {
    pub digest: Digest,
    /// Frame index of the anchor peak.
    pub anchor_offset: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerprintConfig {
    pub sample_rate_hz: u32,
    pub window_size: usize,
    pub hop_size: usize,
    pub peaks: PeakParams,
    pub fan_out: usize,
    pub delta_t_min: usize,
    pub delta_t_max: usize,
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: DEFAULT_SAMPLE_RATE,
            window_size: 4096,
            hop_size: 2048,
            peaks: PeakParams::default(),
            fan_out: 15,
            delta_t_min: 1,
            delta_t_max: 200,
        }
    }
}

impl FingerprintConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate_hz == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if self.window_size < 2
            || !self.window_size.is_power_of_two()
            || self.hop_size == 0
            || self.hop_size > self.window_size
        {
            return Err(Error::BadWindow {
                window: self.window_size,
                hop: self.hop_size,
            });
        }
        if self.fan_out == 0 {
            return Err(Error::InvalidArgument("fan_out must be at least 1".into()));
        }
        if self.delta_t_min == 0 || self.delta_t_min > self.delta_t_max {
            return Err(Error::InvalidArgument(format!(
                "delta_t window [{}, {}] must satisfy 0 < min <= max",
                self.delta_t_min, self.delta_t_max
            )));
        }
        self.peaks.validate()
    }

    /// Seconds covered by one hop; converts frame offsets to time.
    pub fn seconds_per_frame(&self) -> f64 {
        self.hop_size as f64 / f64::from(self.sample_rate_hz)
    }

    /// Canonical one-line description, recorded in store manifests so that
    /// parameter drift between ingest and query can be detected.
    pub fn tag(&self) -> String {
        format!(
            "rate={} window={} hop={} radius={} amp_min_db={} fan_out={} dt_min={} dt_max={}",
            self.sample_rate_hz,
            self.window_size,
            self.hop_size,
            self.peaks.neighborhood_radius,
            self.peaks.amp_min_db,
            self.fan_out,
            self.delta_t_min,
            self.delta_t_max
        )
    }
}

/// Pairs each anchor with up to `fan_out` later peaks whose frame distance
/// lies in `[delta_t_min, delta_t_max]`, in `(frame, bin)` order.
///
/// `peaks` must already be sorted by `(frame, bin)`.
pub fn pair_peaks(peaks: &[Peak], config: &FingerprintConfig) -> Vec<ConstellationPair> {
    let mut pairs = Vec::with_capacity(peaks.len() * config.fan_out);
    for (i, anchor) in peaks.iter().enumerate() {
        let mut taken = 0;
        for target in &peaks[i + 1..] {
            if taken == config.fan_out {
                break;
            }
            let dt = target.frame - anchor.frame;
            if dt > config.delta_t_max {
                break;
            }
            if dt < config.delta_t_min {
                continue;
            }
            pairs.push(ConstellationPair {
                f1: anchor.bin,
                f2: target.bin,
                delta_t: dt,
                anchor_frame: anchor.frame,
            });
            taken += 1;
        }
    }
    pairs
}

/// First 8 bytes of SHA-1 over the ASCII string `"{f1}|{f2}|{delta_t}"`.
pub fn hash_pair(f1: usize, f2: usize, delta_t: usize) -> Digest {
    let mut hasher = Sha1::new();
    hasher.update(format!("{f1}|{f2}|{delta_t}").as_bytes());
    let full = hasher.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&full[..8]);
    Digest(out)
}

/// Full pipeline: STFT, peaks, pairs, hashes. Output follows pair order.
pub fn fingerprint_clip(clip: &AudioClip, config: &FingerprintConfig) -> Result<Vec<Fingerprint>> {
    Ok(fingerprint_clip_detailed(clip, config)?.fingerprints)
}

/// Intermediate products of [`fingerprint_clip`], for diagnostics.
#[derive(Debug, Clone)]
pub struct FingerprintRun {
    pub frames: usize,
    pub peaks: Vec<Peak>,
    pub fingerprints: Vec<Fingerprint>,
}

pub fn fingerprint_clip_detailed(
    clip: &AudioClip,
    config: &FingerprintConfig,
) -> Result<FingerprintRun> {
    config.validate()?;
    if clip.sample_rate_hz() != config.sample_rate_hz {
        return Err(Error::RateMismatch {
            clip: clip.sample_rate_hz(),
            expected: config.sample_rate_hz,
        });
    }
    let spec = stft(clip, config.window_size, config.hop_size)?;
    let peaks = extract_peaks(&spec, &config.peaks)?;
    let fingerprints = pair_peaks(&peaks, config)
        .into_iter()
        .map(|p| Fingerprint {
            digest: hash_pair(p.f1, p.f2, p.delta_t),
            anchor_offset: p.anchor_frame as u32,
        })
        .collect();
    Ok(FingerprintRun {
        frames: spec.frames(),
        peaks,
        fingerprints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn peak(frame: usize, bin: usize) -> Peak {
        Peak {
            frame,
            bin,
            amplitude_db: 0.0,
        }
    }

    #[test]
    fn single_peak_has_no_pairs() {
        assert!(pair_peaks(&[peak(3, 3)], &FingerprintConfig::default()).is_empty());
        assert!(pair_peaks(&[], &FingerprintConfig::default()).is_empty());
    }

    #[test]
    fn two_peaks_one_pair() {
        let pairs = pair_peaks(&[peak(5, 40), peak(10, 70)], &FingerprintConfig::default());
        assert_eq!(
            pairs,
            vec![ConstellationPair {
                f1: 40,
                f2: 70,
                delta_t: 5,
                anchor_frame: 5
            }]
        );
    }

    #[test]
    fn same_frame_peaks_are_skipped_not_counted() {
        let config = FingerprintConfig {
            fan_out: 1,
            ..Default::default()
        };
        let pairs = pair_peaks(&[peak(0, 1), peak(0, 2), peak(1, 3)], &config);
        assert_eq!(pairs.len(), 2);
        assert!(pairs.iter().all(|p| p.delta_t == 1 && p.f2 == 3));
    }

    #[test]
    fn known_digest() {
        // pinned from Python's hashlib so other bindings can check against it
        let d = hash_pair(93, 120, 17);
        assert_eq!(d, hash_pair(93, 120, 17));
        assert_eq!(d.to_string(), "f5a1e8e99fb2d573");
        assert_eq!(hash_pair(120, 93, 17).to_string(), "13fece0d3bd8949e");
    }

    #[test]
    fn config_validation() {
        assert!(FingerprintConfig::default().validate().is_ok());
        let bad = [
            FingerprintConfig {
                fan_out: 0,
                ..Default::default()
            },
            FingerprintConfig {
                delta_t_min: 0,
                ..Default::default()
            },
            FingerprintConfig {
                delta_t_min: 10,
                delta_t_max: 5,
                ..Default::default()
            },
            FingerprintConfig {
                window_size: 1000,
                ..Default::default()
            },
        ];
        for config in bad {
            assert!(config.validate().is_err(), "{config:?}");
        }
    }

    #[test]
    fn silent_clip_has_no_fingerprints() {
        let clip = AudioClip::new(vec![0.0; 44_100], 44_100).unwrap();
        assert!(fingerprint_clip(&clip, &FingerprintConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn pipeline_errors() {
        let config = FingerprintConfig::default();
        let clip = AudioClip::new(vec![0.0; 44_100], 22_050).unwrap();
        assert!(matches!(
            fingerprint_clip(&clip, &config),
            Err(Error::RateMismatch { .. })
        ));
        let clip = AudioClip::new(vec![0.0; 100], 44_100).unwrap();
        assert!(matches!(
            fingerprint_clip(&clip, &config),
            Err(Error::ClipTooShort { .. })
        ));
    }
}

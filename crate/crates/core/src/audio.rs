//! Mono PCM clips: WAV decode/encode, slicing and tone synthesis.

use std::f64::consts::PI;
use std::path::Path;

use crate::{Error, Result};

/// CD-quality rate used throughout the default configuration.
pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;

/// Normalized mono audio.
///
/// Samples are kept in `[-1.0, 1.0]` and the sequence is never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::InvalidArgument("clip has no samples".into()));
        }
        if let Some(bad) = samples.iter().find(|s| !(-1.0..=1.0).contains(*s)) {
            return Err(Error::InvalidArgument(format!(
                "sample {bad} outside [-1, 1]"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Builds a clip, clamping every sample into `[-1, 1]`. NaN maps to 0.
    pub fn from_clamped(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        let samples = samples
            .into_iter()
            .map(|s| if s.is_nan() { 0.0 } else { s.clamp(-1.0, 1.0) })
            .collect();
        Self::new(samples, sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn channel_count(&self) -> u16 {
        1
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    /// Mean of squares over the whole clip.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }
}

/// Minimum-rate requirement derived from the highest frequency of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingPolicy {
    pub required_rate_hz: u32,
    pub highest_frequency_hz: u32,
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        Self {
            required_rate_hz: DEFAULT_SAMPLE_RATE,
            highest_frequency_hz: 20_000,
        }
    }
}

impl SamplingPolicy {
    pub fn nyquist_rate_hz(&self) -> u64 {
        2 * u64::from(self.highest_frequency_hz)
    }
}

/// True when the clip's rate can represent every frequency up to
/// `policy.highest_frequency_hz` without aliasing.
pub fn validate_sampling(clip: &AudioClip, policy: &SamplingPolicy) -> bool {
    u64::from(clip.sample_rate_hz) >= policy.nyquist_rate_hz()
}

const WAVE_FORMAT_PCM: u16 = 1;
const WAVE_FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct FmtChunk {
    channels: u16,
    block_align: u16,
    sample_rate: u32,
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk> {
    if body.len() < 16 {
        return Err(Error::MalformedContainer(format!(
            "fmt chunk is {} bytes, need 16",
            body.len()
        )));
    }
    let mut format = le_u16(body, 0);
    let channels = le_u16(body, 2);
    let sample_rate = le_u32(body, 4);
    let block_align = le_u16(body, 12);
    let bits = le_u16(body, 14);

    if format == WAVE_FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) subformat GUID(16)
        if body.len() < 40 {
            return Err(Error::MalformedContainer(
                "extensible fmt chunk too short".into(),
            ));
        }
        format = le_u16(body, 24);
    }
    if format != WAVE_FORMAT_PCM {
        return Err(Error::UnsupportedEncoding(format!(
            "audio format {format}, only PCM (1) is supported"
        )));
    }
    if bits != 16 {
        return Err(Error::UnsupportedEncoding(format!(
            "{bits} bits per sample, only 16 is supported"
        )));
    }
    if channels == 0 || channels > 2 {
        return Err(Error::UnsupportedEncoding(format!(
            "{channels} channels, only mono and stereo are supported"
        )));
    }
    if sample_rate == 0 {
        return Err(Error::MalformedContainer("sample rate is zero".into()));
    }
    if block_align != channels * 2 {
        return Err(Error::MalformedContainer(format!(
            "block align {block_align} inconsistent with {channels} x 16-bit"
        )));
    }
    Ok(FmtChunk {
        channels,
        block_align,
        sample_rate,
    })
}

/// Decodes a RIFF/WAVE file holding 16-bit little-endian linear PCM.
///
/// Stereo is averaged down to mono and each int16 `v` maps to `v / 32768`.
pub fn decode_wav(raw: &[u8]) -> Result<AudioClip> {
    if raw.len() < 12 || &raw[0..4] != b"RIFF" || &raw[8..12] != b"WAVE" {
        return Err(Error::MalformedContainer("missing RIFF/WAVE magic".into()));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut pos = 12;
    while pos + 8 <= raw.len() {
        let id = &raw[pos..pos + 4];
        let size = le_u32(raw, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&end| end <= raw.len())
            .ok_or_else(|| {
                Error::MalformedContainer(format!(
                    "chunk {:?} claims {size} bytes past end of file",
                    String::from_utf8_lossy(id)
                ))
            })?;
        let body = &raw[body_start..body_end];

        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => {
                let fmt = fmt.ok_or_else(|| {
                    Error::MalformedContainer("data chunk precedes fmt chunk".into())
                })?;
                return decode_pcm16(body, &fmt);
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }
    Err(Error::MalformedContainer(if fmt.is_some() {
        "no data chunk".into()
    } else {
        "no fmt chunk".into()
    }))
}

fn decode_pcm16(data: &[u8], fmt: &FmtChunk) -> Result<AudioClip> {
    if data.is_empty() {
        return Err(Error::EmptyAudio);
    }
    let frame_bytes = usize::from(fmt.block_align);
    if data.len() % frame_bytes != 0 {
        return Err(Error::MalformedContainer(format!(
            "data chunk of {} bytes is not a whole number of {frame_bytes}-byte frames",
            data.len()
        )));
    }
    let channels = usize::from(fmt.channels);
    let samples = data
        .chunks_exact(frame_bytes)
        .map(|frame| {
            let sum: f64 = frame
                .chunks_exact(2)
                .map(|b| f64::from(i16::from_le_bytes([b[0], b[1]])))
                .sum();
            sum / channels as f64 / 32768.0
        })
        .collect();
    AudioClip::new(samples, fmt.sample_rate)
}

/// Encodes a clip as a mono 16-bit PCM WAV (44-byte canonical header).
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = (clip.len() * 2) as u32;
    let rate = clip.sample_rate_hz;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&WAVE_FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in clip.samples() {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    decode_wav(&std::fs::read(path)?)
}

pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<()> {
    std::fs::write(path, encode_wav(clip))?;
    Ok(())
}

/// Cuts `[round(start * rate), round(start * rate) + round(duration * rate))`.
pub fn slice_clip(clip: &AudioClip, start_seconds: f64, duration_seconds: f64) -> Result<AudioClip> {
    let out_of_range = || Error::OutOfRange {
        start_seconds,
        duration_seconds,
        clip_seconds: clip.duration_seconds(),
    };
    if !(start_seconds >= 0.0) || !(duration_seconds > 0.0) {
        return Err(out_of_range());
    }
    let rate = f64::from(clip.sample_rate_hz);
    let start = (start_seconds * rate).round() as usize;
    let count = (duration_seconds * rate).round() as usize;
    if count == 0 || start.checked_add(count).map_or(true, |end| end > clip.len()) {
        return Err(out_of_range());
    }
    Ok(AudioClip {
        samples: clip.samples[start..start + count].to_vec(),
        sample_rate_hz: clip.sample_rate_hz,
    })
}

/// `amplitude * sin(2 pi f n / rate)` for `round(duration * rate)` samples.
pub fn synthesize_tone(
    frequency_hz: f64,
    duration_seconds: f64,
    rate_hz: u32,
    amplitude: f64,
) -> Result<AudioClip> {
    if rate_hz == 0 {
        return Err(Error::InvalidArgument("sample rate must be positive".into()));
    }
    if !(frequency_hz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "frequency {frequency_hz} must be positive"
        )));
    }
    if frequency_hz >= f64::from(rate_hz) / 2.0 {
        return Err(Error::NyquistViolation {
            frequency_hz,
            rate_hz,
        });
    }
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "amplitude {amplitude} outside (0, 1]"
        )));
    }
    let n = (duration_seconds * f64::from(rate_hz)).round() as usize;
    if !(duration_seconds > 0.0) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "duration {duration_seconds}s yields no samples"
        )));
    }
    let step = 2.0 * PI * frequency_hz / f64::from(rate_hz);
    let samples = (0..n).map(|i| amplitude * (step * i as f64).sin()).collect();
    AudioClip::new(samples, rate_hz)
}

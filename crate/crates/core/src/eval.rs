//! Accuracy, timing and storage experiments.
//!
//! All randomness flows from one seed through ChaCha streams, so accuracy
//! and storage reports are byte-reproducible. Timing numbers are wall-clock
//! and are not.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::augment::{apply, AugmentSpec};
use crate::audio::slice_clip;
use crate::fingerprint::{fingerprint_clip, FingerprintConfig};
use crate::matcher::recognize;
use crate::store::{StorageReport, Store};
use crate::{AudioClip, Error, Result};

/// Reference-system figures; printed next to local
/// results, never asserted against.
pub mod reference {
    /// `(seconds, correct, trials)`.
    pub const ACCURACY: [(u32, u32, u32); 6] = [
        (1, 27, 45),
        (2, 43, 45),
        (3, 44, 45),
        (4, 44, 45),
        (5, 45, 45),
        (6, 45, 45),
    ];
    pub const TIMING_SLOPE: f64 = 1.364757;
    pub const TIMING_INTERCEPT: f64 = -0.034373;
    pub const MP3_MB: u32 = 339;
    pub const WAV_MB: u32 = 1885;
    pub const FINGERPRINT_MB: u32 = 377;

    pub fn storage_ratio() -> f64 {
        f64::from(FINGERPRINT_MB) / f64::from(WAV_MB)
    }
}

pub const DEFAULT_DURATIONS: [f64; 6] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
pub const DEFAULT_TRIALS: usize = 45;
pub const DEFAULT_TIMING_REPEATS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSong {
    pub name: String,
    pub clip: AudioClip,
}

fn midi_to_hz(note: f64) -> f64 {
    440.0 * 2f64.powf((note - 69.0) / 12.0)
}

/// Renders a pseudo-musical test signal: seeded chords of harmonic notes
/// with decaying envelopes over a sparse percussion track. Peak level is
/// normalized to 0.9.
pub fn synth_song(seed: u64, duration_seconds: f64, rate_hz: u32) -> Result<AudioClip> {
    let n = (duration_seconds * f64::from(rate_hz)).round() as usize;
    if n == 0 {
        return Err(Error::InvalidArgument(format!(
            "duration {duration_seconds}s yields no samples"
        )));
    }
    let rate = f64::from(rate_hz);
    let nyquist = rate / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0f64; n];

    let bpm: f64 = rng.gen_range(90.0..150.0);
    let step = 60.0 / bpm / 2.0;
    let root: f64 = rng.gen_range(45.0f64..60.0).round();
    let scale = [0.0, 2.0, 3.0, 5.0, 7.0, 8.0, 10.0, 12.0, 14.0, 15.0, 17.0, 19.0];

    let mut t = 0.0;
    while t < duration_seconds {
        let voices = rng.gen_range(1..=3);
        for _ in 0..voices {
            let octave = 12.0 * f64::from(rng.gen_range(0..3u8));
            let note = root + octave + scale[rng.gen_range(0..scale.len())];
            let f0 = midi_to_hz(note);
            let length = step * f64::from(rng.gen_range(1..=4u8));
            let decay = rng.gen_range(2.0..6.0);
            let amp = rng.gen_range(0.15..0.4);
            let harmonics = rng.gen_range(3..=10u32);
            let start = (t * rate) as usize;
            let end = ((t + length) * rate).min(n as f64) as usize;
            for h in 1..=harmonics {
                let fh = f0 * f64::from(h);
                if fh >= nyquist * 0.95 {
                    break;
                }
                let ah = amp / f64::from(h);
                let w = 2.0 * PI * fh / rate;
                for (i, s) in out[start..end].iter_mut().enumerate() {
                    let tt = i as f64 / rate;
                    // 5 ms attack keeps onsets click-free
                    let env = (tt / 0.005).min(1.0) * (-decay * tt).exp();
                    *s += ah * env * (w * i as f64).sin();
                }
            }
        }
        if rng.gen_bool(0.35) {
            let start = (t * rate) as usize;
            let end = ((t + 0.08) * rate).min(n as f64) as usize;
            let amp = rng.gen_range(0.1..0.3);
            for (i, s) in out[start..end].iter_mut().enumerate() {
                let env = (-(i as f64) / (0.015 * rate)).exp();
                *s += amp * env * rng.gen_range(-1.0..1.0);
            }
        }
        t += step;
    }

    let peak = out.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        let g = 0.9 / peak;
        out.iter_mut().for_each(|s| *s *= g);
    }
    AudioClip::from_clamped(out, rate_hz)
}

/// `count` synthesized songs named `synth-000`, `synth-001`, ...
pub fn desk_corpus(count: usize, seconds: f64, rate_hz: u32, seed: u64) -> Result<Vec<CorpusSong>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let song_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
            Ok(CorpusSong {
                name: format!("synth-{i:03}"),
                clip: synth_song(song_seed, seconds, rate_hz)?,
            })
        })
        .collect()
}

/// Fingerprints every song (in parallel) and inserts them in corpus order.
/// Returns the assigned song ids.
pub fn ingest(store: &mut Store, corpus: &[CorpusSong], config: &FingerprintConfig) -> Result<Vec<u32>> {
    let prints = corpus
        .par_iter()
        .map(|song| fingerprint_clip(&song.clip, config))
        .collect::<Result<Vec<_>>>()?;
    corpus
        .iter()
        .zip(prints)
        .map(|(song, fps)| store.insert_song(&song.name, &fps, song.clip.duration_seconds()))
        .collect()
}

/// How trial start points are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffsetPolicy {
    /// Starts on a hop boundary, so query frames coincide with stored ones.
    #[default]
    HopAligned,
    /// Any sample; exercises window-phase mismatch.
    AnySample,
}

#[derive(Debug, Clone)]
pub struct AccuracyParams {
    pub durations: Vec<f64>,
    pub trials_per_cell: usize,
    pub augment: Option<AugmentSpec>,
    pub offsets: OffsetPolicy,
    pub seed: u64,
    pub min_votes: u32,
    pub config: FingerprintConfig,
}

impl Default for AccuracyParams {
    fn default() -> Self {
        Self {
            durations: DEFAULT_DURATIONS.to_vec(),
            trials_per_cell: DEFAULT_TRIALS,
            augment: None,
            offsets: OffsetPolicy::HopAligned,
            seed: 0,
            min_votes: crate::matcher::DEFAULT_MIN_VOTES,
            config: FingerprintConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub duration_seconds: f64,
    pub trials: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub rows: Vec<AccuracyRow>,
    pub corpus: String,
    pub augment: Option<String>,
    pub offsets: OffsetPolicy,
    pub seed: u64,
    pub min_votes: u32,
}

impl AccuracyReport {
    pub fn accuracy_at(&self, seconds: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.duration_seconds == seconds)
            .map(|r| r.accuracy)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        out.push_str("# afp accuracy report\n");
        let _ = writeln!(out, "# corpus: {}", self.corpus);
        let _ = writeln!(
            out,
            "# augment: {}",
            self.augment.as_deref().unwrap_or("none")
        );
        let _ = writeln!(
            out,
            "# offsets: {}",
            match self.offsets {
                OffsetPolicy::HopAligned => "hop-aligned",
                OffsetPolicy::AnySample => "any-sample",
            }
        );
        let _ = writeln!(out, "# seed: {}", self.seed);
        let _ = writeln!(out, "# min_votes: {}", self.min_votes);
        out.push_str("duration_s\ttrials\tcorrect\taccuracy\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.6}",
                r.duration_seconds, r.trials, r.correct, r.accuracy
            );
        }
        out
    }

    /// Human-readable table with the reference figures alongside.
    pub fn summary(&self) -> String {
        let mut out = String::from("seconds  correct/trials  accuracy  reference\n");
        for r in &self.rows {
            let reference = reference::ACCURACY
                .iter()
                .find(|(s, _, _)| f64::from(*s) == r.duration_seconds)
                .map_or_else(
                    || "-".to_owned(),
                    |&(_, c, t)| format!("{c}/{t} ({:.2}%)", 100.0 * f64::from(c) / f64::from(t)),
                );
            let _ = writeln!(
                out,
                "{:>7}  {:>14}  {:>7.2}%  {}",
                r.duration_seconds,
                format!("{}/{}", r.correct, r.trials),
                100.0 * r.accuracy,
                reference
            );
        }
        out
    }
}

struct Trial {
    song: usize,
    start_sample: usize,
    duration_seconds: f64,
    noise_seed: u64,
}

fn corpus_descriptor(corpus: &[CorpusSong]) -> String {
    let total: f64 = corpus.iter().map(|s| s.clip.duration_seconds()).sum();
    format!("{} songs, {total:.3} s total", corpus.len())
}

/// Recognition accuracy per query duration.
///
/// For each duration, `trials_per_cell` trials each pick a song and a
/// start point from the seeded stream, slice, optionally degrade, and
/// recognize. A trial is correct when the winning song is the source.
pub fn run_accuracy(store: &Store, corpus: &[CorpusSong], params: &AccuracyParams) -> Result<AccuracyReport> {
    if store.is_empty() {
        return Err(Error::EmptyStore);
    }
    if corpus.is_empty() {
        return Err(Error::CorpusTooShort("corpus is empty".into()));
    }
    let config = &params.config;
    let ids = corpus
        .iter()
        .map(|s| {
            store
                .song_by_name(&s.name)
                .map(|r| r.song_id)
                .ok_or_else(|| Error::UnknownSong(s.name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;

    let rate = f64::from(config.sample_rate_hz);
    let mut durations = params.durations.clone();
    durations.sort_by(f64::total_cmp);
    durations.dedup();
    if durations.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidArgument("durations must be positive".into()));
    }
    let longest = durations.last().copied().unwrap_or(0.0);
    for song in corpus {
        if song.clip.len() < (longest * rate).round() as usize {
            return Err(Error::CorpusTooShort(format!(
                "{} lasts {:.3}s, shorter than the {longest}s query",
                song.name,
                song.clip.duration_seconds()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut plan = Vec::with_capacity(durations.len() * params.trials_per_cell);
    for &d in &durations {
        let need = (d * rate).round() as usize;
        for _ in 0..params.trials_per_cell {
            let song = rng.gen_range(0..corpus.len());
            let slack = corpus[song].clip.len() - need;
            let start_sample = match params.offsets {
                OffsetPolicy::HopAligned => rng.gen_range(0..=slack / config.hop_size) * config.hop_size,
                OffsetPolicy::AnySample => rng.gen_range(0..=slack),
            };
            plan.push(Trial {
                song,
                start_sample,
                duration_seconds: d,
                noise_seed: rng.gen(),
            });
        }
    }

    let outcomes = plan
        .par_iter()
        .map(|trial| {
            let clip = &corpus[trial.song].clip;
            let query = slice_clip(clip, trial.start_sample as f64 / rate, trial.duration_seconds)?;
            let query = match &params.augment {
                Some(spec) => apply(&query, &spec.reseeded(trial.noise_seed))?,
                None => query,
            };
            let result = recognize(&query, store, config, params.min_votes)?;
            Ok(result.matched && result.song_id == Some(ids[trial.song]))
        })
        .collect::<Result<Vec<bool>>>()?;

    let rows = durations
        .iter()
        .zip(outcomes.chunks(params.trials_per_cell.max(1)))
        .map(|(&d, cell)| {
            let correct = cell.iter().filter(|&&ok| ok).count();
            AccuracyRow {
                duration_seconds: d,
                trials: params.trials_per_cell,
                correct,
                accuracy: if params.trials_per_cell == 0 {
                    0.0
                } else {
                    correct as f64 / params.trials_per_cell as f64
                },
            }
        })
        .collect();

    Ok(AccuracyReport {
        rows,
        corpus: corpus_descriptor(corpus),
        augment: params.augment.as_ref().map(ToString::to_string),
        offsets: params.offsets,
        seed: params.seed,
        min_votes: params.min_votes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two (x, y) samples of equal length".into(),
        ));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("x values are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    /// `(record_time_seconds, median match_time_seconds)`.
    pub samples: Vec<(f64, f64)>,
    pub fit: LinearFit,
    pub repeats: usize,
}

impl TimingReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# afp timing report\n");
        let _ = writeln!(out, "# repeats: {} (median)", self.repeats);
        let _ = writeln!(
            out,
            "# fit: slope={:.6} intercept={:.6} r_squared={:.6}",
            self.fit.slope, self.fit.intercept, self.fit.r_squared
        );
        let _ = writeln!(
            out,
            "# reference fit: slope={} intercept={}",
            reference::TIMING_SLOPE,
            reference::TIMING_INTERCEPT
        );
        out.push_str("record_time_s\tmatch_time_s\n");
        for (x, y) in &self.samples {
            let _ = writeln!(out, "{x}\t{y:.6}");
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "time_to_match = {:.6} * record_time {} {:.6}  (R^2 = {:.4})\nreference:      {} * record_time - {}\n",
            self.fit.slope,
            if self.fit.intercept < 0.0 { '-' } else { '+' },
            self.fit.intercept.abs(),
            self.fit.r_squared,
            reference::TIMING_SLOPE,
            -reference::TIMING_INTERCEPT,
        )
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 0 {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

/// Wall-clock of [`recognize`] on leading slices of `song`, one record
/// time after another. Runs on the calling thread only.
pub fn run_timing(
    store: &Store,
    song: &AudioClip,
    record_times: &[f64],
    repeats: usize,
    config: &FingerprintConfig,
    min_votes: u32,
) -> Result<TimingReport> {
    let repeats = repeats.max(1);
    let longest = record_times.iter().copied().fold(0.0, f64::max);
    if song.duration_seconds() + 0.5 / f64::from(song.sample_rate_hz()) < longest {
        return Err(Error::SongTooShort(format!(
            "song lasts {:.3}s, record times reach {longest}s",
            song.duration_seconds()
        )));
    }
    let mut samples = Vec::with_capacity(record_times.len());
    for &t in record_times {
        let query = slice_clip(song, 0.0, t)?;
        // warm caches and the allocator before measuring
        recognize(&query, store, config, min_votes)?;
        let mut times = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let started = Instant::now();
            recognize(&query, store, config, min_votes)?;
            times.push(started.elapsed().as_secs_f64());
        }
        samples.push((t, median(times)));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    Ok(TimingReport {
        fit: fit_line(&xs, &ys)?,
        samples,
        repeats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageSummary {
    pub wav_bytes: u64,
    pub store: StorageReport,
    /// Index bytes over WAV bytes.
    pub ratio: f64,
}

impl StorageSummary {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# afp storage report\n");
        out.push_str("item\tvalue\n");
        out.push_str("mp3_bytes\tn/a\n");
        let _ = writeln!(out, "wav_bytes\t{}", self.wav_bytes);
        let _ = writeln!(out, "fingerprint_bytes\t{}", self.store.index_bytes);
        let _ = writeln!(out, "manifest_bytes\t{}", self.store.manifest_bytes);
        let _ = writeln!(out, "songs\t{}", self.store.song_count);
        let _ = writeln!(out, "entries\t{}", self.store.entry_count);
        let _ = writeln!(out, "fingerprint_wav_ratio\t{:.6}", self.ratio);
        let _ = writeln!(out, "reference_ratio\t{:.6}", reference::storage_ratio());
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "type          local bytes    reference MB\n\
             mp3           n/a            {}\n\
             wav           {:<14} {}\n\
             fingerprints  {:<14} {}\n\
             ratio         {:<14.4} {:.4}\n",
            reference::MP3_MB,
            self.wav_bytes,
            reference::WAV_MB,
            self.store.index_bytes,
            reference::FINGERPRINT_MB,
            self.ratio,
            reference::storage_ratio()
        )
    }
}

pub fn run_storage_report(store: &Store, corpus_wav_bytes: u64) -> Result<StorageSummary> {
    if corpus_wav_bytes == 0 {
        return Err(Error::InvalidArgument("WAV byte total must be positive".into()));
    }
    let stats = store.stats();
    Ok(StorageSummary {
        wav_bytes: corpus_wav_bytes,
        store: stats,
        ratio: stats.index_bytes as f64 / corpus_wav_bytes as f64,
    })
}

//! Independent reference implementations and fixtures shared by the
//! integration tests. Nothing here calls into the code paths it checks.

#![allow(dead_code)]

use afp::dsp::Spectrogram;
use afp::eval::{desk_corpus, ingest, CorpusSong};
use afp::fingerprint::ConstellationPair;
use afp::{FingerprintConfig, Peak, Store};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

/// Peaks by exhaustive scan: a cell qualifies when it clears the threshold,
/// no neighbor is larger, and no equal neighbor precedes it in
/// `(frame, bin)` order.
pub fn brute_force_peaks(rows: &[Vec<f64>], radius: usize, amp_min_db: f64) -> Vec<(usize, usize)> {
    let frames = rows.len() as isize;
    let bins = rows[0].len() as isize;
    let r = radius as isize;
    let mut out = Vec::new();
    for t in 0..frames {
        for f in 0..bins {
            let v = rows[t as usize][f as usize];
            if v < amp_min_db {
                continue;
            }
            let mut ok = true;
            'scan: for dt in -r..=r {
                for df in -r..=r {
                    let (tt, ff) = (t + dt, f + df);
                    if tt < 0 || ff < 0 || tt >= frames || ff >= bins || (dt == 0 && df == 0) {
                        continue;
                    }
                    let u = rows[tt as usize][ff as usize];
                    if u > v || (u == v && (tt, ff) < (t, f)) {
                        ok = false;
                        break 'scan;
                    }
                }
            }
            if ok {
                out.push((t as usize, f as usize));
            }
        }
    }
    out
}

/// All ordered pairs `i < j`, filtered by the frame window, truncated to
/// `fan_out` per anchor.
pub fn brute_force_pairs(peaks: &[Peak], config: &FingerprintConfig) -> Vec<ConstellationPair> {
    let mut out = Vec::new();
    for i in 0..peaks.len() {
        let mut mine: Vec<ConstellationPair> = Vec::new();
        for j in 0..peaks.len() {
            if j <= i {
                continue;
            }
            let (a, b) = (peaks[i], peaks[j]);
            if b.frame < a.frame {
                continue;
            }
            let dt = b.frame - a.frame;
            if dt >= config.delta_t_min && dt <= config.delta_t_max {
                mine.push(ConstellationPair {
                    f1: a.bin,
                    f2: b.bin,
                    delta_t: dt,
                    anchor_frame: a.frame,
                });
            }
        }
        mine.truncate(config.fan_out);
        out.extend(mine);
    }
    out
}

/// Random `frames x bins` dB matrix. With `levels = Some(k)` values are
/// drawn from `k` discrete steps, which forces plateaus.
pub fn random_matrix(rng: &mut ChaCha8Rng, frames: usize, bins: usize, levels: Option<u32>) -> Vec<Vec<f64>> {
    (0..frames)
        .map(|_| {
            (0..bins)
                .map(|_| match levels {
                    Some(k) => -100.0 + 100.0 * f64::from(rng.gen_range(0..k)) / f64::from(k),
                    None => rng.gen_range(-100.0..0.0),
                })
                .collect()
        })
        .collect()
}

pub fn spectrogram(rows: Vec<Vec<f64>>) -> Spectrogram {
    Spectrogram::from_rows(rows, 1, 1).unwrap()
}

pub struct DeskFixture {
    pub dir: tempfile::TempDir,
    pub store: Store,
    pub corpus: Vec<CorpusSong>,
    pub config: FingerprintConfig,
}

/// `songs` synthesized songs of `seconds` each, fingerprinted into a fresh
/// store with the default configuration.
pub fn desk_fixture(songs: usize, seconds: f64, seed: u64) -> DeskFixture {
    let config = FingerprintConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let mut store = Store::create(dir.path().join("store")).unwrap();
    let corpus = desk_corpus(songs, seconds, config.sample_rate_hz, seed).unwrap();
    ingest(&mut store, &corpus, &config).unwrap();
    DeskFixture {
        dir,
        store,
        corpus,
        config,
    }
}

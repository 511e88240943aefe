//! Fourier transforms and log-power spectrograms.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::{AudioClip, Error, Result};

/// Power floor applied before taking logs; 10 * log10(1e-10) = -100 dB.
pub const POWER_FLOOR: f64 = 1e-10;
pub const DB_FLOOR: f64 = -100.0;

/// Direct O(N^2) evaluation of `X[k] = sum_n x[n] e^{-j 2 pi k n / N}`.
///
/// Kept as the reference the FFT is checked against.
pub fn dft_naive(x: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    // e^{-j 2 pi m / N} for m in 0..N; k*n is reduced mod N before lookup
    let roots: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 / n as f64))
        .collect();
    let out = (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &xi) in x.iter().enumerate() {
                acc += xi * roots[(k * i) % n];
            }
            acc
        })
        .collect();
    Ok(out)
}

/// Iterative radix-2 decimation-in-time FFT.
pub fn fft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut buf = x.to_vec();
    fft_in_place(&mut buf)?;
    Ok(buf)
}

pub fn fft_in_place(buf: &mut [Complex64]) -> Result<()> {
    let n = buf.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::NonPowerOfTwoLength(n));
    }
    let twiddles = twiddles(n);
    transform(buf, &twiddles);
    Ok(())
}

/// `e^{-j 2 pi k / n}` for `k < n/2`, each computed directly.
fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n / 2)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
        .collect()
}

fn transform(buf: &mut [Complex64], twiddles: &[Complex64]) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            buf.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for block in buf.chunks_exact_mut(len) {
            let (lo, hi) = block.split_at_mut(half);
            for k in 0..half {
                let t = hi[k] * twiddles[k * stride];
                hi[k] = lo[k] - t;
                lo[k] += t;
            }
        }
        len <<= 1;
    }
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Time-frequency matrix of power in dB, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Vec<f64>,
    frames: usize,
    bins: usize,
    window_size: usize,
    hop_size: usize,
    sample_rate_hz: u32,
}

impl Spectrogram {
    /// Wraps an arbitrary `[frame][bin]` matrix, e.g. for peak-picking
    /// experiments that do not start from audio. The window size is
    /// inferred as `2 * (bins - 1)`.
    pub fn from_rows(rows: Vec<Vec<f64>>, hop_size: usize, sample_rate_hz: u32) -> Result<Self> {
        let frames = rows.len();
        let bins = rows.first().map_or(0, Vec::len);
        if frames == 0 || bins == 0 {
            return Err(Error::EmptySpectrogram);
        }
        if rows.iter().any(|r| r.len() != bins) {
            return Err(Error::InvalidArgument("ragged spectrogram rows".into()));
        }
        Ok(Self {
            data: rows.into_iter().flatten().collect(),
            frames,
            bins,
            window_size: 2 * (bins - 1),
            hop_size,
            sample_rate_hz,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn hop_size(&self) -> usize {
        self.hop_size
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn get(&self, frame: usize, bin: usize) -> f64 {
        self.data[frame * self.bins + bin]
    }

    pub fn frame(&self, frame: usize) -> &[f64] {
        &self.data[frame * self.bins..(frame + 1) * self.bins]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.bins)
    }

    pub fn bin_frequency_hz(&self, bin: usize) -> f64 {
        bin as f64 * f64::from(self.sample_rate_hz) / self.window_size as f64
    }

    pub fn frame_seconds(&self, frame: usize) -> f64 {
        (frame * self.hop_size) as f64 / f64::from(self.sample_rate_hz)
    }
}

/// Number of whole frames an `n`-sample signal yields; trailing samples
/// shorter than a window are dropped.
pub fn frame_count(n: usize, window_size: usize, hop_size: usize) -> usize {
    if n < window_size {
        0
    } else {
        (n - window_size) / hop_size + 1
    }
}

/// Hann-windowed short-time Fourier transform in dB, non-negative bins only.
pub fn stft(clip: &AudioClip, window_size: usize, hop_size: usize) -> Result<Spectrogram> {
    if window_size < 2 || !window_size.is_power_of_two() || hop_size == 0 || hop_size > window_size
    {
        return Err(Error::BadWindow {
            window: window_size,
            hop: hop_size,
        });
    }
    let samples = clip.samples();
    if samples.len() < window_size {
        return Err(Error::ClipTooShort {
            samples: samples.len(),
            window: window_size,
        });
    }

    let frames = frame_count(samples.len(), window_size, hop_size);
    let bins = window_size / 2 + 1;
    let window = hann(window_size);
    let twiddles = twiddles(window_size);

    let mut data = vec![0.0; frames * bins];
    data.par_chunks_exact_mut(bins)
        .enumerate()
        .for_each_init(
            || vec![Complex64::new(0.0, 0.0); window_size],
            |buf, (t, row)| {
                let start = t * hop_size;
                for ((b, &s), &w) in buf
                    .iter_mut()
                    .zip(&samples[start..start + window_size])
                    .zip(&window)
                {
                    *b = Complex64::new(s * w, 0.0);
                }
                transform(buf, &twiddles);
                for (cell, x) in row.iter_mut().zip(buf.iter()) {
                    *cell = 10.0 * x.norm_sqr().max(POWER_FLOOR).log10();
                }
            },
        );

    Ok(Spectrogram {
        data,
        frames,
        bins,
        window_size,
        hop_size,
        sample_rate_hz: clip.sample_rate_hz(),
    })
}

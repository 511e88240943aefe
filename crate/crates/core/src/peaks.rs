//! Spectrogram peak picking.
//!
//! A cell is a peak when it clears the absolute dB threshold and is a
//! maximum of its square neighborhood. Equal-valued neighbors (plateaus)
//! are resolved in favor of the lexicographically smallest `(frame, bin)`.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::dsp::Spectrogram;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub frame: usize,
    pub bin: usize,
    pub amplitude_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakParams {
    /// Chebyshev radius in cells; the neighborhood spans `2r + 1` frames
    /// by `2r + 1` bins.
    pub neighborhood_radius: usize,
    pub amp_min_db: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        Self {
            neighborhood_radius: 10,
            amp_min_db: -60.0,
        }
    }
}

impl PeakParams {
    pub fn validate(&self) -> Result<()> {
        if self.neighborhood_radius == 0 {
            return Err(Error::InvalidArgument(
                "neighborhood radius must be at least 1".into(),
            ));
        }
        if !self.amp_min_db.is_finite() {
            return Err(Error::InvalidArgument("amp_min_db must be finite".into()));
        }
        Ok(())
    }
}

/// Max over `values[i - r ..= i + r]` (clipped) for every `i`, reading and
/// writing with the given strides. Monotonic deque, O(n).
fn sliding_max(
    values: &[f64],
    offset: usize,
    stride: usize,
    len: usize,
    radius: usize,
    out: &mut [f64],
    deque: &mut VecDeque<usize>,
) {
    deque.clear();
    let at = |i: usize| values[offset + i * stride];
    let mut next = 0;
    for i in 0..len {
        let hi = (i + radius).min(len - 1);
        while next <= hi {
            let v = at(next);
            while deque.back().is_some_and(|&j| at(j) <= v) {
                deque.pop_back();
            }
            deque.push_back(next);
            next += 1;
        }
        while deque.front().is_some_and(|&j| j + radius < i) {
            deque.pop_front();
        }
        out[offset + i * stride] = at(*deque.front().expect("window is never empty"));
    }
}

/// Neighborhood maximum of every cell, frame-major like the spectrogram.
fn neighborhood_max(spec: &Spectrogram, radius: usize) -> Vec<f64> {
    let (frames, bins) = (spec.frames(), spec.bins());
    let src: Vec<f64> = spec.rows().flatten().copied().collect();

    let mut along_bins = vec![0.0; frames * bins];
    along_bins
        .par_chunks_exact_mut(bins)
        .zip(src.par_chunks_exact(bins))
        .for_each_init(VecDeque::new, |deque, (out, row)| {
            sliding_max(row, 0, 1, bins, radius, out, deque);
        });

    let mut result = vec![0.0; frames * bins];
    let mut deque = VecDeque::new();
    for bin in 0..bins {
        sliding_max(&along_bins, bin, bins, frames, radius, &mut result, &mut deque);
    }
    result
}

/// True when no cell before `(frame, bin)` in lexicographic order within
/// its neighborhood carries exactly the same value.
fn wins_plateau(spec: &Spectrogram, frame: usize, bin: usize, radius: usize) -> bool {
    let value = spec.get(frame, bin);
    let b_lo = bin.saturating_sub(radius);
    let b_hi = (bin + radius).min(spec.bins() - 1);
    for t in frame.saturating_sub(radius)..frame {
        if spec.frame(t)[b_lo..=b_hi].iter().any(|&v| v == value) {
            return false;
        }
    }
    !spec.frame(frame)[b_lo..bin].iter().any(|&v| v == value)
}

/// Local maxima above `params.amp_min_db`, sorted by `(frame, bin)`.
pub fn extract_peaks(spec: &Spectrogram, params: &PeakParams) -> Result<Vec<Peak>> {
    params.validate()?;
    if spec.frames() == 0 || spec.bins() == 0 {
        return Err(Error::EmptySpectrogram);
    }
    let radius = params.neighborhood_radius;
    let maxima = neighborhood_max(spec, radius);
    let bins = spec.bins();

    let peaks = (0..spec.frames())
        .into_par_iter()
        .flat_map_iter(|t| {
            let row = spec.frame(t);
            let row_max = &maxima[t * bins..(t + 1) * bins];
            row.iter()
                .zip(row_max)
                .enumerate()
                .filter(move |&(f, (&v, &m))| {
                    v >= params.amp_min_db && v == m && wins_plateau(spec, t, f, radius)
                })
                .map(move |(f, (&v, _))| Peak {
                    frame: t,
                    bin: f,
                    amplitude_db: v,
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(peaks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<f64>>) -> Spectrogram {
        Spectrogram::from_rows(rows, 1, 1).unwrap()
    }

    fn params(radius: usize, amp_min_db: f64) -> PeakParams {
        PeakParams {
            neighborhood_radius: radius,
            amp_min_db,
        }
    }

    #[test]
    fn isolated_maximum() {
        let mut rows = vec![vec![-100.0; 21]; 21];
        rows[10][10] = -10.0;
        let peaks = extract_peaks(&matrix(rows), &PeakParams::default()).unwrap();
        assert_eq!(
            peaks,
            vec![Peak {
                frame: 10,
                bin: 10,
                amplitude_db: -10.0
            }]
        );
    }

    #[test]
    fn uniform_below_threshold_has_no_peaks() {
        let spec = matrix(vec![vec![-70.0; 30]; 30]);
        assert!(extract_peaks(&spec, &PeakParams::default()).unwrap().is_empty());
    }

    #[test]
    fn uniform_above_threshold_keeps_plateau_minima_only() {
        // with radius 2 on a 7x7 plateau, (0,0) wins its block; the next
        // winners are the first cells whose neighborhoods exclude it
        let spec = matrix(vec![vec![-20.0; 7]; 7]);
        let peaks = extract_peaks(&spec, &params(2, -60.0)).unwrap();
        let cells: Vec<_> = peaks.iter().map(|p| (p.frame, p.bin)).collect();
        assert_eq!(cells, vec![(0, 0)]);

        let spec = matrix(vec![vec![-20.0; 1]; 7]);
        let cells: Vec<_> = extract_peaks(&spec, &params(2, -60.0))
            .unwrap()
            .iter()
            .map(|p| (p.frame, p.bin))
            .collect();
        // (0,0) only: every later cell sees an earlier equal cell within 2
        assert_eq!(cells, vec![(0, 0)]);
    }

    #[test]
    fn edges_use_clipped_neighborhoods() {
        let mut rows = vec![vec![-50.0; 5]; 5];
        rows[0][4] = -1.0;
        rows[4][0] = -2.0;
        let cells: Vec<_> = extract_peaks(&matrix(rows), &params(1, -60.0))
            .unwrap()
            .iter()
            .map(|p| (p.frame, p.bin))
            .collect();
        assert!(cells.contains(&(0, 4)));
        assert!(cells.contains(&(4, 0)));
    }

    #[test]
    fn rejects_zero_radius() {
        let spec = matrix(vec![vec![0.0; 3]; 3]);
        assert!(extract_peaks(&spec, &params(0, -60.0)).is_err());
    }

    #[test]
    fn sliding_max_matches_naive() {
        let values: Vec<f64> = (0..37).map(|i| ((i * 7919) % 23) as f64).collect();
        for radius in 1..6 {
            let mut out = vec![0.0; values.len()];
            sliding_max(&values, 0, 1, values.len(), radius, &mut out, &mut VecDeque::new());
            for i in 0..values.len() {
                let lo = i.saturating_sub(radius);
                let hi = (i + radius).min(values.len() - 1);
                let expect = values[lo..=hi].iter().cloned().fold(f64::MIN, f64::max);
                assert_eq!(out[i], expect);
            }
        }
    }
}

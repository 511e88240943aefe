//! Offset-aligned hash voting.
//!
//! Every query fingerprint that hits the index casts one vote for the
//! bucket `(song_id, db_offset - query_offset)`. Hits from the true source
//! pile up in a single delta; chance collisions scatter.

use std::collections::BTreeMap;

use crate::fingerprint::{fingerprint_clip, FingerprintConfig};
use crate::store::Store;
use crate::{AudioClip, Result};

pub const DEFAULT_MIN_VOTES: u32 = 5;

/// A query fingerprint joined to one stored entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignedMatch {
    pub query_offset: u32,
    pub song_id: u32,
    pub db_offset: u32,
}

impl AlignedMatch {
    pub fn delta(&self) -> i64 {
        i64::from(self.db_offset) - i64::from(self.query_offset)
    }
}

/// Vote counts per song and per alignment delta. Ordered maps keep every
/// traversal deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AlignmentHistogram {
    songs: BTreeMap<u32, BTreeMap<i64, u32>>,
}

impl AlignmentHistogram {
    pub fn is_empty(&self) -> bool {
        self.songs.is_empty()
    }

    pub fn add(&mut self, m: &AlignedMatch) {
        *self
            .songs
            .entry(m.song_id)
            .or_default()
            .entry(m.delta())
            .or_default() += 1;
    }

    pub fn song(&self, song_id: u32) -> Option<&BTreeMap<i64, u32>> {
        self.songs.get(&song_id)
    }

    pub fn songs(&self) -> impl Iterator<Item = (u32, &BTreeMap<i64, u32>)> {
        self.songs.iter().map(|(&id, deltas)| (id, deltas))
    }

    pub fn total_votes(&self) -> u64 {
        self.songs
            .values()
            .flat_map(|d| d.values())
            .map(|&c| u64::from(c))
            .sum()
    }

    /// Largest bucket; ties go to the smaller song id, then the smaller delta.
    pub fn peak(&self) -> Option<(u32, i64, u32)> {
        let mut best: Option<(u32, i64, u32)> = None;
        // ascending iteration plus strict `>` implements the tie-break
        for (&song, deltas) in &self.songs {
            for (&delta, &count) in deltas {
                if best.map_or(true, |(_, _, c)| count > c) {
                    best = Some((song, delta, count));
                }
            }
        }
        best
    }
}

pub fn build_histogram<'a>(matches: impl IntoIterator<Item = &'a AlignedMatch>) -> AlignmentHistogram {
    let mut hist = AlignmentHistogram::default();
    for m in matches {
        hist.add(m);
    }
    hist
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionResult {
    pub matched: bool,
    /// Best candidate, reported even when it falls short of `min_votes`.
    pub song_id: Option<u32>,
    pub song_name: Option<String>,
    /// Winning alignment in frames: database offset minus query offset.
    pub delta: i64,
    pub votes: u32,
    pub total_query_fingerprints: usize,
    pub confidence: f64,
    pub offset_seconds: f64,
}

/// Picks the winning bucket. `seconds_per_frame` converts the winning
/// delta to seconds (hop size over sample rate).
pub fn best_match(
    hist: &AlignmentHistogram,
    total_query_fingerprints: usize,
    min_votes: u32,
    seconds_per_frame: f64,
) -> RecognitionResult {
    let min_votes = min_votes.max(1);
    let (song_id, delta, votes) = match hist.peak() {
        Some((song, delta, votes)) => (Some(song), delta, votes),
        None => (None, 0, 0),
    };
    RecognitionResult {
        matched: votes >= min_votes,
        song_id,
        song_name: None,
        delta,
        votes,
        total_query_fingerprints,
        confidence: f64::from(votes) / total_query_fingerprints.max(1) as f64,
        offset_seconds: delta as f64 * seconds_per_frame,
    }
}

/// Everything [`recognize`] computed along the way.
#[derive(Debug, Clone)]
pub struct Recognition {
    pub result: RecognitionResult,
    pub histogram: AlignmentHistogram,
    pub lookup_hits: usize,
}

pub fn recognize(
    clip: &AudioClip,
    store: &Store,
    config: &FingerprintConfig,
    min_votes: u32,
) -> Result<RecognitionResult> {
    Ok(recognize_detailed(clip, store, config, min_votes)?.result)
}

pub fn recognize_detailed(
    clip: &AudioClip,
    store: &Store,
    config: &FingerprintConfig,
    min_votes: u32,
) -> Result<Recognition> {
    let fingerprints = fingerprint_clip(clip, config)?;
    let digests: Vec<_> = fingerprints.iter().map(|f| f.digest).collect();
    let hits = store.lookup(&digests);
    let matches: Vec<AlignedMatch> = hits
        .iter()
        .map(|h| AlignedMatch {
            query_offset: fingerprints[h.query_index].anchor_offset,
            song_id: h.song_id,
            db_offset: h.db_offset,
        })
        .collect();
    let histogram = build_histogram(&matches);
    let mut result = best_match(
        &histogram,
        fingerprints.len(),
        min_votes,
        config.seconds_per_frame(),
    );
    result.song_name = result
        .song_id
        .and_then(|id| store.song(id))
        .map(|s| s.name.clone());
    Ok(Recognition {
        result,
        histogram,
        lookup_hits: hits.len(),
    })
}

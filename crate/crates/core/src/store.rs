//! Flat-file fingerprint store.
//!
//! A store is a directory with two files:
//!
//! * `songs.tsv`: UTF-8 manifest, one `song_id\tname\tfingerprint_count\tduration_seconds`
//!   row per song. Lines starting with `#` are comments; the ingest
//!   configuration is kept in a `# config: ...` line.
//! * `index.afp`: 16-byte header (`"AFP1"`, u32 LE version 1, u64 LE entry
//!   count) followed by 16-byte records (8-byte digest, u32 LE song id,
//!   u32 LE offset) sorted by `(digest, song_id, offset)`.
//!
//! Both files are rewritten whole through a temporary file and a rename.
//! The full index is held in memory while the store is open.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};

use crate::fingerprint::{Digest, Fingerprint};
use crate::{Error, Result};

pub const INDEX_FILE: &str = "index.afp";
pub const MANIFEST_FILE: &str = "songs.tsv";
pub const INDEX_MAGIC: &[u8; 4] = b"AFP1";
pub const INDEX_VERSION: u32 = 1;
pub const INDEX_HEADER_BYTES: u64 = 16;
pub const INDEX_RECORD_BYTES: u64 = 16;

const MANIFEST_BANNER: &str = "# afp manifest v1";
const CONFIG_PREFIX: &str = "# config: ";

#[derive(Debug, Clone, PartialEq)]
pub struct SongRecord {
    pub song_id: u32,
    pub name: String,
    pub fingerprint_count: u64,
    pub duration_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexEntry {
    pub digest: Digest,
    pub song_id: u32,
    pub offset: u32,
}

impl IndexEntry {
    fn to_bytes(self) -> [u8; 16] {
        let mut out = [0u8; 16];
        out[..8].copy_from_slice(&self.digest.0);
        out[8..12].copy_from_slice(&self.song_id.to_le_bytes());
        out[12..].copy_from_slice(&self.offset.to_le_bytes());
        out
    }

    fn from_bytes(b: &[u8]) -> Self {
        let mut digest = [0u8; 8];
        digest.copy_from_slice(&b[..8]);
        Self {
            digest: Digest(digest),
            song_id: u32::from_le_bytes([b[8], b[9], b[10], b[11]]),
            offset: u32::from_le_bytes([b[12], b[13], b[14], b[15]]),
        }
    }
}

/// One stored entry matching a query digest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LookupHit {
    /// Position of the digest in the query sequence.
    pub query_index: usize,
    pub song_id: u32,
    pub db_offset: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StorageReport {
    pub song_count: usize,
    pub entry_count: u64,
    pub index_bytes: u64,
    pub manifest_bytes: u64,
}

impl StorageReport {
    pub fn total_bytes(&self) -> u64 {
        self.index_bytes + self.manifest_bytes
    }
}

pub fn index_bytes_for(entries: u64) -> u64 {
    INDEX_HEADER_BYTES + INDEX_RECORD_BYTES * entries
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    songs: Vec<SongRecord>,
    config_tag: Option<String>,
    entries: Vec<IndexEntry>,
    buckets: HashMap<Digest, Range<usize>>,
    manifest_bytes: u64,
}

impl Store {
    /// Creates an empty store in `path`, which must be absent or an empty
    /// directory.
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let root = path.as_ref().to_path_buf();
        if root.exists() {
            let empty_dir = root.is_dir() && fs::read_dir(&root)?.next().is_none();
            if !empty_dir {
                return Err(Error::AlreadyExists(root));
            }
        } else {
            fs::create_dir_all(&root)?;
        }
        let mut store = Self {
            root,
            songs: Vec::new(),
            config_tag: None,
            entries: Vec::new(),
            buckets: HashMap::new(),
            manifest_bytes: 0,
        };
        store.write_index()?;
        store.write_manifest()?;
        Ok(store)
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let root = path.as_ref().to_path_buf();
        let index_path = root.join(INDEX_FILE);
        let manifest_path = root.join(MANIFEST_FILE);
        if !index_path.is_file() || !manifest_path.is_file() {
            return Err(Error::NotAStore(root));
        }

        let manifest = fs::read(&manifest_path)?;
        let manifest_bytes = manifest.len() as u64;
        let manifest = String::from_utf8(manifest)
            .map_err(|_| Error::CorruptIndex(format!("{MANIFEST_FILE} is not UTF-8")))?;
        let (songs, config_tag) = parse_manifest(&manifest)?;

        let entries = parse_index(&fs::read(&index_path)?)?;
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for e in &entries {
            *counts.entry(e.song_id).or_default() += 1;
        }
        for song in &songs {
            let stored = counts.remove(&song.song_id).unwrap_or(0);
            if stored != song.fingerprint_count {
                return Err(Error::CorruptIndex(format!(
                    "song {} lists {} fingerprints but the index holds {stored}",
                    song.song_id, song.fingerprint_count
                )));
            }
        }
        if let Some(orphan) = counts.keys().min() {
            return Err(Error::CorruptIndex(format!(
                "index references unknown song id {orphan}"
            )));
        }

        let buckets = build_buckets(&entries);
        Ok(Self {
            root,
            songs,
            config_tag,
            entries,
            buckets,
            manifest_bytes,
        })
    }

    /// Opens the store at `path`, creating it when nothing is there yet.
    pub fn open_or_create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let empty_dir = path.is_dir() && fs::read_dir(path)?.next().is_none();
        if !path.exists() || empty_dir {
            Self::create(path)
        } else {
            Self::open(path)
        }
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn index_path(&self) -> PathBuf {
        self.root.join(INDEX_FILE)
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }

    pub fn songs(&self) -> &[SongRecord] {
        &self.songs
    }

    pub fn song(&self, song_id: u32) -> Option<&SongRecord> {
        self.songs
            .binary_search_by_key(&song_id, |s| s.song_id)
            .ok()
            .map(|i| &self.songs[i])
    }

    pub fn song_by_name(&self, name: &str) -> Option<&SongRecord> {
        self.songs.iter().find(|s| s.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.songs.is_empty()
    }

    /// All index entries in on-disk order.
    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    /// Fingerprint configuration recorded at ingest time, if any.
    pub fn config_tag(&self) -> Option<&str> {
        self.config_tag.as_deref()
    }

    pub fn set_config_tag(&mut self, tag: impl Into<String>) -> Result<()> {
        let tag = tag.into();
        if tag.contains(['\n', '\r']) {
            return Err(Error::InvalidArgument("config tag must be one line".into()));
        }
        self.config_tag = Some(tag);
        self.write_manifest()
    }

    /// Registers a song and its fingerprints; returns the new song id.
    /// Ids start at 1 and are never reused.
    pub fn insert_song(
        &mut self,
        name: &str,
        fingerprints: &[Fingerprint],
        duration_seconds: f64,
    ) -> Result<u32> {
        if name.is_empty() {
            return Err(Error::InvalidArgument("song name must not be empty".into()));
        }
        if name.contains(['\t', '\n', '\r']) {
            return Err(Error::InvalidArgument(
                "song name must not contain tabs or line breaks".into(),
            ));
        }
        if !(duration_seconds.is_finite() && duration_seconds >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bad duration {duration_seconds}"
            )));
        }
        if self.song_by_name(name).is_some() {
            return Err(Error::DuplicateName(name.to_owned()));
        }
        if fingerprints.is_empty() {
            return Err(Error::EmptyFingerprints);
        }
        let song_id = self
            .songs
            .last()
            .map_or(Some(1), |s| s.song_id.checked_add(1))
            .ok_or_else(|| Error::InvalidArgument("song id space exhausted".into()))?;

        let mut fresh: Vec<IndexEntry> = fingerprints
            .iter()
            .map(|fp| IndexEntry {
                digest: fp.digest,
                song_id,
                offset: fp.anchor_offset,
            })
            .collect();
        fresh.sort_unstable();

        let previous = std::mem::take(&mut self.entries);
        self.entries = merge_sorted(previous, fresh);
        self.songs.push(SongRecord {
            song_id,
            name: name.to_owned(),
            fingerprint_count: fingerprints.len() as u64,
            duration_seconds,
        });

        // index first: an interrupted insert then fails open()'s count check
        // instead of silently losing entries
        self.write_index()?;
        self.write_manifest()?;
        self.buckets = build_buckets(&self.entries);
        Ok(song_id)
    }

    /// Exact-match lookup; every stored entry sharing a query digest is
    /// reported, in query order.
    pub fn lookup(&self, digests: &[Digest]) -> Vec<LookupHit> {
        let mut hits = Vec::new();
        for (query_index, digest) in digests.iter().enumerate() {
            if let Some(range) = self.buckets.get(digest) {
                hits.extend(self.entries[range.clone()].iter().map(|e| LookupHit {
                    query_index,
                    song_id: e.song_id,
                    db_offset: e.offset,
                }));
            }
        }
        hits
    }

    pub fn stats(&self) -> StorageReport {
        StorageReport {
            song_count: self.songs.len(),
            entry_count: self.entries.len() as u64,
            index_bytes: index_bytes_for(self.entries.len() as u64),
            manifest_bytes: self.manifest_bytes,
        }
    }

    fn write_index(&self) -> Result<()> {
        let mut buf = Vec::with_capacity(index_bytes_for(self.entries.len() as u64) as usize);
        buf.extend_from_slice(INDEX_MAGIC);
        buf.extend_from_slice(&INDEX_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for e in &self.entries {
            buf.extend_from_slice(&e.to_bytes());
        }
        replace_file(&self.root, INDEX_FILE, &buf)
    }

    fn write_manifest(&mut self) -> Result<()> {
        let text = render_manifest(&self.songs, self.config_tag.as_deref());
        replace_file(&self.root, MANIFEST_FILE, text.as_bytes())?;
        self.manifest_bytes = text.len() as u64;
        Ok(())
    }
}

fn merge_sorted(a: Vec<IndexEntry>, b: Vec<IndexEntry>) -> Vec<IndexEntry> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut a = a.into_iter().peekable();
    let mut b = b.into_iter().peekable();
    loop {
        let take_a = match (a.peek(), b.peek()) {
            (Some(x), Some(y)) => x <= y,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        out.extend(if take_a { a.next() } else { b.next() });
    }
    out
}

fn build_buckets(entries: &[IndexEntry]) -> HashMap<Digest, Range<usize>> {
    let mut buckets = HashMap::new();
    let mut start = 0;
    while start < entries.len() {
        let digest = entries[start].digest;
        let len = entries[start..]
            .iter()
            .take_while(|e| e.digest == digest)
            .count();
        buckets.insert(digest, start..start + len);
        start += len;
    }
    buckets
}

fn replace_file(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))?;
    // persist the rename; not every platform lets a directory be synced
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
    Ok(())
}

fn render_manifest(songs: &[SongRecord], config_tag: Option<&str>) -> String {
    let mut out = String::new();
    out.push_str(MANIFEST_BANNER);
    out.push('\n');
    if let Some(tag) = config_tag {
        out.push_str(CONFIG_PREFIX);
        out.push_str(tag);
        out.push('\n');
    }
    for s in songs {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.3}\n",
            s.song_id, s.name, s.fingerprint_count, s.duration_seconds
        ));
    }
    out
}

fn parse_manifest(text: &str) -> Result<(Vec<SongRecord>, Option<String>)> {
    let mut songs: Vec<SongRecord> = Vec::new();
    let mut config = None;
    for (lineno, line) in text.lines().enumerate() {
        if let Some(tag) = line.strip_prefix(CONFIG_PREFIX) {
            config = Some(tag.to_owned());
            continue;
        }
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let bad = |what: &str| {
            Error::CorruptIndex(format!("{MANIFEST_FILE} line {}: {what}", lineno + 1))
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 tab-separated fields"));
        }
        let song = SongRecord {
            song_id: fields[0].parse().map_err(|_| bad("bad song id"))?,
            name: fields[1].to_owned(),
            fingerprint_count: fields[2].parse().map_err(|_| bad("bad fingerprint count"))?,
            duration_seconds: fields[3].parse().map_err(|_| bad("bad duration"))?,
        };
        if song.name.is_empty() {
            return Err(bad("empty song name"));
        }
        if songs.last().is_some_and(|prev| prev.song_id >= song.song_id) {
            return Err(bad("song ids not strictly increasing"));
        }
        if songs.iter().any(|s| s.name == song.name) {
            return Err(bad("duplicate song name"));
        }
        songs.push(song);
    }
    Ok((songs, config))
}

fn parse_index(raw: &[u8]) -> Result<Vec<IndexEntry>> {
    if raw.len() < INDEX_HEADER_BYTES as usize {
        return Err(Error::CorruptIndex("index header truncated".into()));
    }
    if &raw[..4] != INDEX_MAGIC {
        return Err(Error::CorruptIndex("bad index magic".into()));
    }
    let version = u32::from_le_bytes([raw[4], raw[5], raw[6], raw[7]]);
    if version != INDEX_VERSION {
        return Err(Error::CorruptIndex(format!(
            "unsupported index version {version}"
        )));
    }
    let mut count = [0u8; 8];
    count.copy_from_slice(&raw[8..16]);
    let count = u64::from_le_bytes(count);
    let expected = count
        .checked_mul(INDEX_RECORD_BYTES)
        .and_then(|b| b.checked_add(INDEX_HEADER_BYTES));
    if expected != Some(raw.len() as u64) {
        return Err(Error::CorruptIndex(format!(
            "index holds {} bytes but header declares {count} entries",
            raw.len()
        )));
    }
    let entries: Vec<IndexEntry> = raw[INDEX_HEADER_BYTES as usize..]
        .chunks_exact(INDEX_RECORD_BYTES as usize)
        .map(IndexEntry::from_bytes)
        .collect();
    if entries.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::CorruptIndex("index records out of order".into()));
    }
    Ok(entries)
}

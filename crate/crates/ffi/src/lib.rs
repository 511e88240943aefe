//! C ABI for the fingerprinting engine.
//!
//! Every function returns an [`AfpStatus`]. On failure a description is kept
//! per thread and can be read with [`afp_last_error_message`]. Stores are
//! opaque: create or open one, pass the handle around, release it with
//! [`afp_store_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use afp::audio::{decode_wav, read_wav};
use afp::fingerprint::{fingerprint_clip, hash_pair};
use afp::matcher::recognize;
use afp::{AudioClip, Error, FingerprintConfig, Store};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AfpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Decode = 4,
    DuplicateName = 5,
    NotAStore = 6,
    CorruptIndex = 7,
    AlreadyExists = 8,
    InvalidInput = 9,
    RateMismatch = 10,
    ClipTooShort = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

/// Opaque store handle.
pub struct AfpStore {
    inner: Store,
    config: FingerprintConfig,
}

/// Outcome of a recognition call. `song_id` is 0 when the store had no
/// candidate at all.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AfpMatch {
    pub matched: bool,
    pub song_id: u32,
    pub votes: u32,
    pub total_query_fingerprints: u64,
    pub delta_frames: i64,
    pub offset_seconds: f64,
    pub confidence: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AfpStats {
    pub song_count: u64,
    pub entry_count: u64,
    pub index_bytes: u64,
    pub manifest_bytes: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> AfpStatus {
    match e {
        Error::Io(_) => AfpStatus::Io,
        Error::MalformedContainer(_) | Error::UnsupportedEncoding(_) => AfpStatus::Decode,
        Error::DuplicateName(_) => AfpStatus::DuplicateName,
        Error::NotAStore(_) => AfpStatus::NotAStore,
        Error::CorruptIndex(_) => AfpStatus::CorruptIndex,
        Error::AlreadyExists(_) => AfpStatus::AlreadyExists,
        Error::RateMismatch { .. } => AfpStatus::RateMismatch,
        Error::ClipTooShort { .. } => AfpStatus::ClipTooShort,
        _ => AfpStatus::InvalidInput,
    }
}

struct Failure(AfpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AfpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            AfpStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside afp".into());
            AfpStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(AfpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(AfpStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn store_mut<'a>(p: *mut AfpStore) -> Result<&'a mut AfpStore, Failure> {
    p.as_mut().ok_or_else(|| null("store"))
}

unsafe fn store_ref<'a>(p: *const AfpStore) -> Result<&'a AfpStore, Failure> {
    p.as_ref().ok_or_else(|| null("store"))
}

unsafe fn samples_clip(samples: *const f64, len: usize, rate: u32) -> Result<AudioClip, Failure> {
    if samples.is_null() && len > 0 {
        return Err(null("samples"));
    }
    let data = if len == 0 {
        Vec::new()
    } else {
        std::slice::from_raw_parts(samples, len).to_vec()
    };
    Ok(AudioClip::new(data, rate)?)
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn wrap(inner: Store, out: *mut *mut AfpStore) -> Result<(), Failure> {
    let handle = Box::new(AfpStore {
        inner,
        config: FingerprintConfig::default(),
    });
    unsafe { write_out(out, Box::into_raw(handle)) }
}

/// Creates an empty store directory. Fails if one already exists there.
#[no_mangle]
pub unsafe extern "C" fn afp_store_create(path: *const c_char, out: *mut *mut AfpStore) -> AfpStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        wrap(Store::create(path)?, out)
    })
}

#[no_mangle]
pub unsafe extern "C" fn afp_store_open(path: *const c_char, out: *mut *mut AfpStore) -> AfpStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        wrap(Store::open(path)?, out)
    })
}

/// Releases a handle. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn afp_store_free(store: *mut AfpStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

fn add_clip(store: &mut AfpStore, name: &str, clip: &AudioClip, out_id: *mut u32) -> Result<(), Failure> {
    let fingerprints = fingerprint_clip(clip, &store.config)?;
    if store.inner.config_tag().is_none() {
        store.inner.set_config_tag(store.config.tag())?;
    }
    let id = store.inner.insert_song(name, &fingerprints, clip.duration_seconds())?;
    if !out_id.is_null() {
        unsafe { out_id.write(id) };
    }
    Ok(())
}

/// Fingerprints a 16-bit PCM WAV file and registers it under `name`.
/// `out_song_id` may be null.
#[no_mangle]
pub unsafe extern "C" fn afp_store_add_wav(
    store: *mut AfpStore,
    name: *const c_char,
    wav_path: *const c_char,
    out_song_id: *mut u32,
) -> AfpStatus {
    guard(|| {
        let store = store_mut(store)?;
        let name = str_arg(name, "name")?;
        let clip = read_wav(str_arg(wav_path, "wav_path")?)?;
        add_clip(store, name, &clip, out_song_id)
    })
}

/// Mono samples in [-1, 1] at `sample_rate_hz`.
#[no_mangle]
pub unsafe extern "C" fn afp_store_add_samples(
    store: *mut AfpStore,
    name: *const c_char,
    samples: *const f64,
    len: usize,
    sample_rate_hz: u32,
    out_song_id: *mut u32,
) -> AfpStatus {
    guard(|| {
        let store = store_mut(store)?;
        let name = str_arg(name, "name")?;
        let clip = samples_clip(samples, len, sample_rate_hz)?;
        add_clip(store, name, &clip, out_song_id)
    })
}

fn run_recognize(store: &AfpStore, clip: &AudioClip, min_votes: u32, out: *mut AfpMatch) -> Result<(), Failure> {
    let r = recognize(clip, &store.inner, &store.config, min_votes)?;
    let m = AfpMatch {
        matched: r.matched,
        song_id: r.song_id.unwrap_or(0),
        votes: r.votes,
        total_query_fingerprints: r.total_query_fingerprints as u64,
        delta_frames: r.delta,
        offset_seconds: r.offset_seconds,
        confidence: r.confidence,
    };
    unsafe { write_out(out, m) }
}

/// `min_votes` of 0 selects the library default.
#[no_mangle]
pub unsafe extern "C" fn afp_recognize_samples(
    store: *const AfpStore,
    samples: *const f64,
    len: usize,
    sample_rate_hz: u32,
    min_votes: u32,
    out: *mut AfpMatch,
) -> AfpStatus {
    guard(|| {
        let store = store_ref(store)?;
        let clip = samples_clip(samples, len, sample_rate_hz)?;
        run_recognize(store, &clip, votes_or_default(min_votes), out)
    })
}

/// Recognizes a WAV file held in memory.
#[no_mangle]
pub unsafe extern "C" fn afp_recognize_wav(
    store: *const AfpStore,
    wav_bytes: *const u8,
    len: usize,
    min_votes: u32,
    out: *mut AfpMatch,
) -> AfpStatus {
    guard(|| {
        let store = store_ref(store)?;
        if wav_bytes.is_null() {
            return Err(null("wav_bytes"));
        }
        let clip = decode_wav(std::slice::from_raw_parts(wav_bytes, len))?;
        run_recognize(store, &clip, votes_or_default(min_votes), out)
    })
}

fn votes_or_default(v: u32) -> u32 {
    if v == 0 {
        afp::matcher::DEFAULT_MIN_VOTES
    } else {
        v
    }
}

#[no_mangle]
pub unsafe extern "C" fn afp_store_stats(store: *const AfpStore, out: *mut AfpStats) -> AfpStatus {
    guard(|| {
        let s = store_ref(store)?.inner.stats();
        write_out(
            out,
            AfpStats {
                song_count: s.song_count as u64,
                entry_count: s.entry_count,
                index_bytes: s.index_bytes,
                manifest_bytes: s.manifest_bytes,
            },
        )
    })
}

/// Copies the NUL-terminated name of `song_id` into `buf`. When `buf_len`
/// is too small the call fails with `BufferTooSmall` and `out_needed`
/// (if non-null) receives the required size including the terminator.
#[no_mangle]
pub unsafe extern "C" fn afp_store_song_name(
    store: *const AfpStore,
    song_id: u32,
    buf: *mut c_char,
    buf_len: usize,
    out_needed: *mut usize,
) -> AfpStatus {
    guard(|| {
        let store = store_ref(store)?;
        let song = store
            .inner
            .song(song_id)
            .ok_or_else(|| Failure(AfpStatus::InvalidInput, format!("no song with id {song_id}")))?;
        let bytes = song.name.as_bytes();
        let needed = bytes.len() + 1;
        if !out_needed.is_null() {
            out_needed.write(needed);
        }
        if buf.is_null() || buf_len < needed {
            return Err(Failure(
                AfpStatus::BufferTooSmall,
                format!("name needs {needed} bytes, buffer has {buf_len}"),
            ));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
        *buf.add(bytes.len()) = 0;
        Ok(())
    })
}

/// Writes the 8-byte digest of a peak pair.
#[no_mangle]
pub unsafe extern "C" fn afp_hash_pair(f1: u32, f2: u32, delta_t: u32, out: *mut u8) -> AfpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let d = hash_pair(f1 as usize, f2 as usize, delta_t as usize);
        ptr::copy_nonoverlapping(d.as_bytes().as_ptr(), out, 8);
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn afp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn afp_status_str(status: AfpStatus) -> *const c_char {
    let s: &'static CStr = match status {
        AfpStatus::Ok => c"ok",
        AfpStatus::NullPointer => c"null pointer",
        AfpStatus::InvalidUtf8 => c"invalid utf-8",
        AfpStatus::Io => c"i/o error",
        AfpStatus::Decode => c"cannot decode audio",
        AfpStatus::DuplicateName => c"duplicate song name",
        AfpStatus::NotAStore => c"not a store",
        AfpStatus::CorruptIndex => c"corrupt index",
        AfpStatus::AlreadyExists => c"already exists",
        AfpStatus::InvalidInput => c"invalid input",
        AfpStatus::RateMismatch => c"sample rate mismatch",
        AfpStatus::ClipTooShort => c"clip too short",
        AfpStatus::BufferTooSmall => c"buffer too small",
        AfpStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

#[no_mangle]
pub extern "C" fn afp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

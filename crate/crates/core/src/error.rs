use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed WAV container: {0}")]
    MalformedContainer(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("WAV data chunk is empty")]
    EmptyAudio,
    #[error("slice [{start_seconds}s, +{duration_seconds}s) exceeds clip of {clip_seconds}s")]
    OutOfRange {
        start_seconds: f64,
        duration_seconds: f64,
        clip_seconds: f64,
    },
    #[error("frequency {frequency_hz} Hz is at or above the Nyquist limit for {rate_hz} Hz")]
    NyquistViolation { frequency_hz: f64, rate_hz: u32 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("transform input is empty")]
    EmptyInput,
    #[error("FFT length {0} is not a power of two >= 2")]
    NonPowerOfTwoLength(usize),
    #[error("clip has {samples} samples, fewer than one window of {window}")]
    ClipTooShort { samples: usize, window: usize },
    #[error("bad STFT window: size {window}, hop {hop}")]
    BadWindow { window: usize, hop: usize },
    #[error("spectrogram is empty")]
    EmptySpectrogram,

    #[error("clip rate {clip} Hz does not match configured rate {expected} Hz")]
    RateMismatch { clip: u32, expected: u32 },

    #[error("store already exists at {0}")]
    AlreadyExists(PathBuf),
    #[error("not a fingerprint store: {0}")]
    NotAStore(PathBuf),
    #[error("corrupt store: {0}")]
    CorruptIndex(String),
    #[error("a song named {0:?} is already registered")]
    DuplicateName(String),
    #[error("no fingerprints to insert")]
    EmptyFingerprints,
    #[error("unknown song {0:?}")]
    UnknownSong(String),

    #[error("signal has zero power")]
    SilentSignal,
    #[error("noise has zero power")]
    SilentNoise,
    #[error("augmentation not applicable here: {0}")]
    BadSpec(String),

    #[error("corpus too short: {0}")]
    CorpusTooShort(String),
    #[error("store has no songs")]
    EmptyStore,
    #[error("song too short: {0}")]
    SongTooShort(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

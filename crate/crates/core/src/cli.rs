//! The `afp` command line.
//!
//! Exit codes: 0 success or match, 1 no match (`recognize` only), 2 I/O or
//! input error, 3 conflict with existing store contents.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::audio::{read_wav, slice_clip, write_wav};
use crate::augment::AugmentSpec;
use crate::eval::{self, AccuracyParams, CorpusSong, OffsetPolicy};
use crate::fingerprint::{fingerprint_clip, FingerprintConfig};
use crate::matcher::{recognize, DEFAULT_MIN_VOTES};
use crate::peaks::PeakParams;
use crate::store::Store;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_MATCH: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONFLICT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "afp", version, about = "Landmark audio fingerprinting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fingerprint a WAV file and add it to the store.
    Add(AddArgs),
    /// Identify a WAV clip against the store.
    Recognize(RecognizeArgs),
    /// Run an evaluation experiment.
    Eval(EvalArgs),
    /// Print per-song fingerprint counts and storage totals.
    Stats(StatsArgs),
    /// Write a seeded synthetic test corpus as WAV files.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Tsv,
}

#[derive(Debug, Args)]
pub struct FingerprintArgs {
    /// Sample rate the store is built for; clips at other rates are rejected.
    #[arg(long, default_value_t = 44_100)]
    pub rate: u32,
    #[arg(long, default_value_t = 4096)]
    pub window: usize,
    #[arg(long, default_value_t = 2048)]
    pub hop: usize,
    /// Peak neighborhood radius in frames/bins.
    #[arg(long, default_value_t = 10)]
    pub radius: usize,
    #[arg(long, default_value_t = -60.0, allow_negative_numbers = true)]
    pub amp_min_db: f64,
    #[arg(long, default_value_t = 15)]
    pub fan_out: usize,
    #[arg(long, default_value_t = 1)]
    pub dt_min: usize,
    #[arg(long, default_value_t = 200)]
    pub dt_max: usize,
}

impl FingerprintArgs {
    pub fn config(&self) -> FingerprintConfig {
        FingerprintConfig {
            sample_rate_hz: self.rate,
            window_size: self.window,
            hop_size: self.hop,
            peaks: PeakParams {
                neighborhood_radius: self.radius,
                amp_min_db: self.amp_min_db,
            },
            fan_out: self.fan_out,
            delta_t_min: self.dt_min,
            delta_t_max: self.dt_max,
        }
    }
}

#[derive(Debug, Args)]
pub struct AddArgs {
    #[arg(long)]
    pub store: PathBuf,
    pub wav: PathBuf,
    /// Song name; defaults to the file stem.
    #[arg(long)]
    pub name: Option<String>,
    /// Create the store if it does not exist yet.
    #[arg(long)]
    pub create: bool,
    #[command(flatten)]
    pub fingerprint: FingerprintArgs,
}

#[derive(Debug, Args)]
pub struct RecognizeArgs {
    #[arg(long)]
    pub store: PathBuf,
    pub wav: PathBuf,
    /// Start of the query window in seconds.
    #[arg(long = "from")]
    pub from_seconds: Option<f64>,
    /// Length of the query window in seconds.
    #[arg(long = "dur")]
    pub duration_seconds: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MIN_VOTES)]
    pub min_votes: u32,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[command(flatten)]
    pub fingerprint: FingerprintArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(subcommand)]
    pub experiment: Experiment,
}

#[derive(Debug, Subcommand)]
pub enum Experiment {
    /// Recognition accuracy per query duration.
    Accuracy(AccuracyArgs),
    /// Match time against record time, with a linear fit.
    Timing(TimingArgs),
    /// Fingerprint bytes against WAV bytes.
    Storage(StorageArgs),
}

#[derive(Debug, Args)]
pub struct AccuracyArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// Directory of the stored songs' WAV files, named `<song name>.wav`.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = eval::DEFAULT_DURATIONS)]
    pub durations: Vec<f64>,
    #[arg(long, default_value_t = eval::DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MIN_VOTES)]
    pub min_votes: u32,
    /// Mix seeded white noise at this SNR (dB).
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["gain", "hard_clip"])]
    pub noise_snr: Option<f64>,
    /// Use windows of this WAV file as noise instead of white noise.
    #[arg(long, requires = "noise_snr")]
    pub noise_bed: Option<PathBuf>,
    #[arg(long, conflicts_with = "hard_clip")]
    pub gain: Option<f64>,
    #[arg(long)]
    pub hard_clip: Option<f64>,
    /// Draw start points at any sample instead of hop boundaries.
    #[arg(long)]
    pub any_offset: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub fingerprint: FingerprintArgs,
}

#[derive(Debug, Args)]
pub struct TimingArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// WAV file of a stored song to cut queries from.
    #[arg(long)]
    pub wav: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0])]
    pub record_times: Vec<f64>,
    #[arg(long, default_value_t = eval::DEFAULT_TIMING_REPEATS)]
    pub repeats: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_VOTES)]
    pub min_votes: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub fingerprint: FingerprintArgs,
}

#[derive(Debug, Args)]
pub struct StorageArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// Total size of the source WAV files.
    #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
    pub wav_bytes: Option<u64>,
    /// Directory of source WAV files to measure.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub songs: usize,
    #[arg(long, default_value_t = 30.0)]
    pub seconds: f64,
    #[arg(long, default_value_t = 44_100)]
    pub rate: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(rendered.as_bytes());
            } else {
                let _ = out.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::DuplicateName(_) | Error::AlreadyExists(_) => EXIT_CONFLICT,
        _ => EXIT_INPUT,
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Add(a) => cmd_add(&a, out, err),
        Command::Recognize(a) => cmd_recognize(&a, out, err),
        Command::Eval(e) => match e.experiment {
            Experiment::Accuracy(a) => cmd_eval_accuracy(&a, out, err),
            Experiment::Timing(a) => cmd_eval_timing(&a, out, err),
            Experiment::Storage(a) => cmd_eval_storage(&a, out, err),
        },
        Command::Stats(a) => cmd_stats(&a, out),
        Command::Synth(a) => cmd_synth(&a, out),
    }
}

fn warn_on_drift(store: &Store, config: &FingerprintConfig, err: &mut dyn Write) {
    if let Some(tag) = store.config_tag() {
        if tag != config.tag() {
            let _ = writeln!(
                err,
                "warning: store was built with [{tag}] but this run uses [{}]",
                config.tag()
            );
        }
    }
}

fn emit(report: &str, target: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match target {
        Some(path) => fs::write(path, report)?,
        None => out.write_all(report.as_bytes())?,
    }
    Ok(())
}

fn file_stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| Error::InvalidArgument(format!("cannot derive a name from {}", path.display())))
}

fn cmd_add(args: &AddArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let config = args.fingerprint.config();
    config.validate()?;
    let mut store = if args.create {
        Store::open_or_create(&args.store)?
    } else {
        Store::open(&args.store)?
    };
    let name = match &args.name {
        Some(n) => n.clone(),
        None => file_stem(&args.wav)?,
    };
    if store.song_by_name(&name).is_some() {
        return Err(Error::DuplicateName(name));
    }
    let clip = read_wav(&args.wav)?;
    let fingerprints = fingerprint_clip(&clip, &config)?;
    match store.config_tag() {
        None => store.set_config_tag(config.tag())?,
        Some(_) => warn_on_drift(&store, &config, err),
    }
    let song_id = store.insert_song(&name, &fingerprints, clip.duration_seconds())?;
    writeln!(out, "song_id={song_id} fingerprints={}", fingerprints.len())?;
    Ok(EXIT_OK)
}

fn cmd_recognize(args: &RecognizeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let config = args.fingerprint.config();
    let store = Store::open(&args.store)?;
    warn_on_drift(&store, &config, err);
    let mut clip = read_wav(&args.wav)?;
    if args.from_seconds.is_some() || args.duration_seconds.is_some() {
        let from = args.from_seconds.unwrap_or(0.0);
        let dur = args
            .duration_seconds
            .unwrap_or_else(|| clip.duration_seconds() - from);
        clip = slice_clip(&clip, from, dur)?;
    }
    let r = recognize(&clip, &store, &config, args.min_votes)?;
    match args.format {
        Format::Tsv => {
            writeln!(
                out,
                "matched\tsong_id\tname\tvotes\ttotal_fingerprints\tconfidence\toffset_seconds"
            )?;
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.3}",
                r.matched,
                r.song_id.map_or_else(String::new, |id| id.to_string()),
                r.song_name.as_deref().unwrap_or(""),
                r.votes,
                r.total_query_fingerprints,
                r.confidence,
                r.offset_seconds
            )?;
        }
        Format::Text if r.matched => {
            writeln!(
                out,
                "match: {}\nsong_id={} votes={} fingerprints={} confidence={:.4} offset_seconds={:.3}",
                r.song_name.as_deref().unwrap_or("?"),
                r.song_id.unwrap_or(0),
                r.votes,
                r.total_query_fingerprints,
                r.confidence,
                r.offset_seconds
            )?;
        }
        Format::Text => {
            writeln!(
                out,
                "no match (best votes={}, need {})",
                r.votes, args.min_votes
            )?;
        }
    }
    Ok(if r.matched { EXIT_OK } else { EXIT_NO_MATCH })
}

/// WAV files in `dir`, sorted by file name, with their byte sizes.
fn list_wavs(dir: &Path) -> Result<Vec<(PathBuf, u64)>> {
    let mut wavs = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let is_wav = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav && path.is_file() {
            let size = fs::metadata(&path)?.len();
            wavs.push((path, size));
        }
    }
    wavs.sort();
    Ok(wavs)
}

fn load_corpus(dir: &Path) -> Result<Vec<CorpusSong>> {
    list_wavs(dir)?
        .into_iter()
        .map(|(path, _)| {
            Ok(CorpusSong {
                name: file_stem(&path)?,
                clip: read_wav(&path)?,
            })
        })
        .collect()
}

fn cmd_eval_accuracy(args: &AccuracyArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let config = args.fingerprint.config();
    config.validate()?;
    let store = Store::open(&args.store)?;
    warn_on_drift(&store, &config, err);
    let corpus = load_corpus(&args.corpus)?;

    let augment = match (args.noise_snr, &args.noise_bed, args.gain, args.hard_clip) {
        (Some(snr_db), Some(bed), _, _) => Some(AugmentSpec::MixedClip {
            bed: Arc::new(read_wav(bed)?),
            snr_db,
            seed: args.seed,
        }),
        (Some(snr_db), None, _, _) => Some(AugmentSpec::WhiteNoise {
            snr_db,
            seed: args.seed,
        }),
        (None, _, Some(gain_factor), _) => Some(AugmentSpec::Gain { gain_factor }),
        (None, _, None, Some(clip_threshold)) => Some(AugmentSpec::HardClip { clip_threshold }),
        _ => None,
    };
    let params = AccuracyParams {
        durations: args.durations.clone(),
        trials_per_cell: args.trials,
        augment,
        offsets: if args.any_offset {
            OffsetPolicy::AnySample
        } else {
            OffsetPolicy::HopAligned
        },
        seed: args.seed,
        min_votes: args.min_votes,
        config,
    };
    let report = eval::run_accuracy(&store, &corpus, &params)?;
    emit(&report.to_tsv(), args.out.as_deref(), out)?;
    let _ = err.write_all(report.summary().as_bytes());
    Ok(EXIT_OK)
}

fn cmd_eval_timing(args: &TimingArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let config = args.fingerprint.config();
    config.validate()?;
    let store = Store::open(&args.store)?;
    warn_on_drift(&store, &config, err);
    let song = read_wav(&args.wav)?;
    let report = eval::run_timing(
        &store,
        &song,
        &args.record_times,
        args.repeats,
        &config,
        args.min_votes,
    )?;
    emit(&report.to_tsv(), args.out.as_deref(), out)?;
    let _ = err.write_all(report.summary().as_bytes());
    Ok(EXIT_OK)
}

fn cmd_eval_storage(args: &StorageArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let store = Store::open(&args.store)?;
    let wav_bytes = match (args.wav_bytes, &args.corpus) {
        (Some(b), _) => b,
        (None, Some(dir)) => list_wavs(dir)?.iter().map(|(_, size)| size).sum(),
        (None, None) => unreachable!("clap requires one of --wav-bytes / --corpus"),
    };
    let report = eval::run_storage_report(&store, wav_bytes)?;
    emit(&report.to_tsv(), args.out.as_deref(), out)?;
    let _ = err.write_all(report.summary().as_bytes());
    Ok(EXIT_OK)
}

fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> Result<i32> {
    let store = Store::open(&args.store)?;
    let stats = store.stats();
    match args.format {
        Format::Tsv => {
            writeln!(out, "song_id\tname\tfingerprints\tduration_s")?;
            for s in store.songs() {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{:.3}",
                    s.song_id, s.name, s.fingerprint_count, s.duration_seconds
                )?;
            }
            writeln!(
                out,
                "# songs={} entries={} index_bytes={} manifest_bytes={}",
                stats.song_count, stats.entry_count, stats.index_bytes, stats.manifest_bytes
            )?;
        }
        Format::Text => {
            if let Some(tag) = store.config_tag() {
                writeln!(out, "config: {tag}")?;
            }
            for s in store.songs() {
                writeln!(
                    out,
                    "{:>6}  {:<32} {:>10} fingerprints  {:>9.3} s",
                    s.song_id, s.name, s.fingerprint_count, s.duration_seconds
                )?;
            }
            writeln!(
                out,
                "songs={} entries={} index_bytes={} manifest_bytes={}",
                stats.song_count, stats.entry_count, stats.index_bytes, stats.manifest_bytes
            )?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<i32> {
    fs::create_dir_all(&args.out)?;
    let corpus = eval::desk_corpus(args.songs, args.seconds, args.rate, args.seed)?;
    for song in &corpus {
        let path = args.out.join(format!("{}.wav", song.name));
        write_wav(&path, &song.clip)?;
        writeln!(out, "{}", path.display())?;
    }
    Ok(EXIT_OK)
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use afp::audio::write_wav;
use afp::eval::synth_song;
use afp::fingerprint::fingerprint_clip;
use afp::{FingerprintConfig, Store};

fn afp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afp")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Desk {
    _dir: tempfile::TempDir,
    store: PathBuf,
    corpus: PathBuf,
}

/// Two 30 s songs written as WAVs and added through the CLI.
fn desk() -> Desk {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let store = dir.path().join("db");
    let o = afp(&["synth", "--out", s(&corpus), "--songs", "2", "--seconds", "30", "--seed", "5"]);
    assert!(o.status.success());
    for (i, name) in ["synth-000", "synth-001"].iter().enumerate() {
        let wav = corpus.join(format!("{name}.wav"));
        let o = afp(&["add", "--store", s(&store), "--create", s(&wav)]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).starts_with(&format!("song_id={} fingerprints=", i + 1)));
    }
    Desk {
        _dir: dir,
        store,
        corpus,
    }
}

#[test]
fn add_recognize_and_stats() {
    let d = desk();
    let wav = d.corpus.join("synth-001.wav");

    let dup = afp(&["add", "--store", s(&d.store), s(&wav)]);
    assert_eq!(dup.status.code(), Some(3));

    let o = afp(&["recognize", "--store", s(&d.store), s(&wav), "--from", "10", "--dur", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("match: synth-001\n"), "{text}");
    let offset: f64 = text
        .split_whitespace()
        .find_map(|w| w.strip_prefix("offset_seconds="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((offset - 10.0).abs() <= 2048.0 / 44_100.0, "offset {offset}");

    let o = afp(&["recognize", "--store", s(&d.store), s(&wav), "--dur", "5", "--format", "tsv"]);
    let lines: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 2);
    let cols: Vec<&str> = lines[1].split('\t').collect();
    assert_eq!(&cols[..3], &["true", "2", "synth-001"]);

    let o = afp(&["stats", "--store", s(&d.store), "--format", "tsv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    let per_song: u64 = rows.iter().map(|r| r.split('\t').nth(2).unwrap().parse::<u64>().unwrap()).sum();
    let store = Store::open(&d.store).unwrap();
    assert_eq!(per_song, store.stats().entry_count);
    assert!(text.contains(&format!("index_bytes={}", 16 + 16 * per_song)));
}

#[test]
fn cli_and_library_agree() {
    let d = desk();
    let wav = d.corpus.join("synth-000.wav");
    let clip = afp::audio::read_wav(&wav).unwrap();
    let expected = fingerprint_clip(&clip, &FingerprintConfig::default()).unwrap();
    let store = Store::open(&d.store).unwrap();
    assert_eq!(store.song_by_name("synth-000").unwrap().fingerprint_count as usize, expected.len());
    assert_eq!(store.config_tag(), Some(FingerprintConfig::default().tag().as_str()));
}

#[test]
fn eval_subcommands() {
    let d = desk();
    let o = afp(&[
        "eval", "accuracy", "--store", s(&d.store), "--corpus", s(&d.corpus), "--trials", "3", "--seed", "42",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(text, stdout(&afp(&[
        "eval", "accuracy", "--store", s(&d.store), "--corpus", s(&d.corpus), "--trials", "3", "--seed", "42",
    ])));

    let o = afp(&["eval", "storage", "--store", s(&d.store), "--corpus", s(&d.corpus)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("mp3_bytes\tn/a"));
    let wav_bytes: u64 = std::fs::read_dir(&d.corpus).unwrap().map(|e| e.unwrap().metadata().unwrap().len()).sum();
    assert!(text.contains(&format!("wav_bytes\t{wav_bytes}")));

    let wav = d.corpus.join("synth-000.wav");
    let o = afp(&[
        "eval", "timing", "--store", s(&d.store), "--wav", s(&wav), "--record-times", "1,2,4", "--repeats", "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn empty_store_behaviour() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db");
    Store::create(&db).unwrap();
    let wav = dir.path().join("q.wav");
    write_wav(&wav, &synth_song(9, 6.0, 44_100).unwrap()).unwrap();

    let o = afp(&["recognize", "--store", s(&db), s(&wav)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("no match"));

    let o = afp(&["stats", "--store", s(&db)]);
    assert!(stdout(&o).contains("songs=0 entries=0 index_bytes=16"));

    let o = afp(&["eval", "storage", "--store", s(&db), "--wav-bytes", "1000"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("fingerprint_bytes\t16"));

    let o = afp(&["eval", "accuracy", "--store", s(&db), "--corpus", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("bogus.wav");
    std::fs::write(&bogus, b"definitely not RIFF").unwrap();
    let db = dir.path().join("db");

    let o = afp(&["add", "--store", s(&db), "--create", s(&bogus)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    assert_eq!(afp(&["recognize", "--store", s(&db), s(&bogus)]).status.code(), Some(2));
    assert_eq!(afp(&["stats", "--store", s(dir.path()), "--bogus"]).status.code(), Some(2));
    assert_eq!(afp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(afp(&["--help"]).status.code(), Some(0));
}

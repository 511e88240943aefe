use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use afp::audio::{encode_wav, slice_clip, write_wav};
use afp::eval::synth_song;
use afp_ffi::*;

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = afp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn store_roundtrip_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("db");
    let song_a = synth_song(1, 15.0, 44_100).unwrap();
    let song_b = synth_song(2, 15.0, 44_100).unwrap();
    let wav = dir.path().join("b.wav");
    write_wav(&wav, &song_b).unwrap();

    unsafe {
        let mut store = ptr::null_mut();
        assert_eq!(afp_store_create(cstr(&root).as_ptr(), &mut store), AfpStatus::Ok);
        assert!(!store.is_null());

        let mut id = 0;
        let name = CString::new("alpha").unwrap();
        let st = afp_store_add_samples(store, name.as_ptr(), song_a.samples().as_ptr(), song_a.len(), 44_100, &mut id);
        assert_eq!(st, AfpStatus::Ok);
        assert_eq!(id, 1);
        let name_b = CString::new("beta").unwrap();
        assert_eq!(afp_store_add_wav(store, name_b.as_ptr(), cstr(&wav).as_ptr(), &mut id), AfpStatus::Ok);
        assert_eq!(id, 2);
        assert_eq!(
            afp_store_add_wav(store, name_b.as_ptr(), cstr(&wav).as_ptr(), ptr::null_mut()),
            AfpStatus::DuplicateName
        );
        assert!(last_error().contains("beta"));

        let mut stats = AfpStats::default();
        assert_eq!(afp_store_stats(store, &mut stats), AfpStatus::Ok);
        assert_eq!(stats.song_count, 2);
        assert_eq!(stats.index_bytes, 16 + 16 * stats.entry_count);
        afp_store_free(store);

        let mut reopened = ptr::null_mut();
        assert_eq!(afp_store_open(cstr(&root).as_ptr(), &mut reopened), AfpStatus::Ok);
        let query = slice_clip(&song_b, 2048.0 * 40.0 / 44_100.0, 5.0).unwrap();
        let bytes = encode_wav(&query);
        let mut m = AfpMatch::default();
        assert_eq!(afp_recognize_wav(reopened, bytes.as_ptr(), bytes.len(), 0, &mut m), AfpStatus::Ok);
        assert!(m.matched);
        assert_eq!(m.song_id, 2);
        assert_eq!(m.delta_frames, 40);
        assert!(m.votes >= 5 && m.confidence > 0.0);

        let mut direct = AfpMatch::default();
        let st = afp_recognize_samples(reopened, query.samples().as_ptr(), query.len(), 44_100, 0, &mut direct);
        assert_eq!(st, AfpStatus::Ok);
        assert_eq!(direct.song_id, 2);

        let mut needed = 0;
        let mut small = [0 as std::ffi::c_char; 3];
        assert_eq!(
            afp_store_song_name(reopened, 2, small.as_mut_ptr(), small.len(), &mut needed),
            AfpStatus::BufferTooSmall
        );
        assert_eq!(needed, 5);
        let mut buf = [0 as std::ffi::c_char; 16];
        assert_eq!(afp_store_song_name(reopened, 2, buf.as_mut_ptr(), buf.len(), ptr::null_mut()), AfpStatus::Ok);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "beta");
        assert_eq!(
            afp_store_song_name(reopened, 9, buf.as_mut_ptr(), buf.len(), ptr::null_mut()),
            AfpStatus::InvalidInput
        );
        afp_store_free(reopened);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut store = ptr::null_mut();
        assert_eq!(afp_store_open(ptr::null(), &mut store), AfpStatus::NullPointer);
        assert_eq!(afp_store_open(cstr(dir.path()).as_ptr(), &mut store), AfpStatus::NotAStore);
        assert!(store.is_null());
        assert_eq!(afp_store_create(cstr(dir.path()).as_ptr(), &mut store), AfpStatus::Ok);
        let mut other = ptr::null_mut();
        assert_eq!(afp_store_create(cstr(dir.path()).as_ptr(), &mut other), AfpStatus::AlreadyExists);

        let garbage = b"RIFX not a wave";
        let mut m = AfpMatch::default();
        assert_eq!(afp_recognize_wav(store, garbage.as_ptr(), garbage.len(), 0, &mut m), AfpStatus::Decode);

        let short = vec![0.1; 1000];
        assert_eq!(
            afp_recognize_samples(store, short.as_ptr(), short.len(), 44_100, 0, &mut m),
            AfpStatus::ClipTooShort
        );
        let tone = synth_song(3, 2.0, 22_050).unwrap();
        assert_eq!(
            afp_recognize_samples(store, tone.samples().as_ptr(), tone.len(), 22_050, 0, &mut m),
            AfpStatus::RateMismatch
        );
        let loud = vec![1.5; 8192];
        assert_eq!(
            afp_recognize_samples(store, loud.as_ptr(), loud.len(), 44_100, 0, &mut m),
            AfpStatus::InvalidInput
        );
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(
            afp_store_add_samples(store, bad.as_ptr().cast(), loud.as_ptr(), 0, 44_100, ptr::null_mut()),
            AfpStatus::InvalidUtf8
        );

        let quiet = synth_song(4, 5.0, 44_100).unwrap();
        assert_eq!(
            afp_recognize_samples(store, quiet.samples().as_ptr(), quiet.len(), 44_100, 0, &mut m),
            AfpStatus::Ok
        );
        assert!(!m.matched);
        assert_eq!((m.song_id, m.votes), (0, 0));
        assert!(afp_last_error_message().is_null());
        afp_store_free(store);
        afp_store_free(ptr::null_mut());
    }
}

#[test]
fn hash_and_strings() {
    let mut d = [0u8; 8];
    unsafe {
        assert_eq!(afp_hash_pair(93, 120, 17, d.as_mut_ptr()), AfpStatus::Ok);
        assert_eq!(afp_hash_pair(1, 2, 3, ptr::null_mut()), AfpStatus::NullPointer);
        assert_eq!(CStr::from_ptr(afp_status_str(AfpStatus::Decode)).to_str().unwrap(), "cannot decode audio");
        assert_eq!(CStr::from_ptr(afp_version()).to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
    let hex: String = d.iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(hex, "f5a1e8e99fb2d573");
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/afp.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["afp_store_create", "afp_recognize_wav", "afp_last_error_message", "AFP_STATUS_PANIC"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("cc not found; skipping compile check");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"afp.h\"\n\
         int main(void) {\n\
           AfpStore *s = 0;\n\
           AfpMatch m;\n\
           if (afp_store_open(\"db\", &s) != AFP_STATUS_OK) return (int)AFP_STATUS_NOT_A_STORE;\n\
           afp_recognize_samples(s, 0, 0, 44100, 0, &m);\n\
           afp_store_free(s);\n\
           return m.matched ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    for std in ["-std=c99", "-std=c11"] {
        let out = Command::new("cc")
            .args([std, "-Wall", "-Werror", "-pedantic", "-fsyntax-only", "-I"])
            .arg(header.parent().unwrap())
            .arg(&src)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

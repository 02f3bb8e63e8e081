use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use springer_lab_ffi::*;

const TACNODE: &str = "[field]\np = 3\nhermitian = true\n\n[[branch]]\nn = 1\ngamma = [[1, 0, 1]]\n\n[[branch]]\nn = 1\ngamma = [[1, 0, 1], [2, 0, 1]]\n";

fn datum(src: &str) -> *mut SlDatum {
    let c = CString::new(src).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { sl_datum_from_toml(c.as_ptr(), &mut d) }, SlStatus::Ok);
    assert!(!d.is_null());
    d
}

fn last_error() -> String {
    let p = sl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn invariants_through_the_handle() {
    let d = datum(TACNODE);
    let (mut k, mut delta) = (0usize, 0i64);
    unsafe {
        assert_eq!(sl_datum_branch_count(d, &mut k), SlStatus::Ok);
        assert_eq!(sl_datum_delta(d, &mut delta), SlStatus::Ok);
    }
    assert_eq!((k, delta), (2, 2));

    let mut buf = [0i64; 1];
    let mut written = 0usize;
    let s = unsafe { sl_datum_conductor(d, buf.as_mut_ptr(), buf.len(), &mut written) };
    assert_eq!(s, SlStatus::BufferTooSmall);
    assert_eq!(written, 2);
    let mut buf = [0i64; 2];
    assert_eq!(unsafe { sl_datum_conductor(d, buf.as_mut_ptr(), 2, &mut written) }, SlStatus::Ok);
    assert_eq!(buf, [2, 2]);
    unsafe { sl_datum_free(d) };
}

#[test]
fn verify_fl_report() {
    let d = datum(TACNODE);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { sl_report_json(d, SlCommand::VerifyFl, &mut out) }, SlStatus::Ok);
    let json = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe {
        sl_string_free(out);
        sl_datum_free(d);
    }
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["schema_version"], sl_schema_version());
    assert_eq!(v["fundamental_lemma"][0]["o_kappa"], 9);
    assert_eq!(v["fundamental_lemma"][0]["rhs"], 9);
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut d = ptr::null_mut();
    let bad = CString::new("[field]\np = 3\nhermitian = true\n\n[[branch]]\nn = 1\ngamma = [[1, 1, 0]]\n").unwrap();
    assert_eq!(unsafe { sl_datum_from_toml(bad.as_ptr(), &mut d) }, SlStatus::Config);
    assert!(d.is_null());
    assert!(last_error().contains("7:"), "{}", last_error());

    let smooth = datum("[field]\np = 3\n\n[[branch]]\nn = 1\ngamma = [[1, 1, 0]]\n");
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { sl_report_json(smooth, SlCommand::Orbital, &mut out) }, SlStatus::Config);
    assert!(out.is_null());
    assert!(last_error().contains("hermitian"));
    unsafe { sl_datum_free(smooth) };

    assert_eq!(unsafe { sl_datum_from_toml(ptr::null(), &mut d) }, SlStatus::NullArgument);
    let bytes = [0xffu8, 0];
    assert_eq!(unsafe { sl_datum_from_toml(bytes.as_ptr().cast(), &mut d) }, SlStatus::InvalidUtf8);
}

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/abi-*
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libspringer_lab_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let exe = std::env::temp_dir().join(format!("springer-lab-c-{}", std::process::id()));
    let status = Command::new("cc")
        .arg(crate_dir.join("tests/c_program.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    let _ = std::fs::remove_file(&exe);
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

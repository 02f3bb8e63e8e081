//! C interface to `springer_lab`.
//!
//! Every function returns an [`SlStatus`]; on failure the message is kept
//! per thread and read with [`sl_last_error`]. Strings handed out by the
//! library are released with [`sl_string_free`], handles with
//! [`sl_datum_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use springer_lab::config::ExperimentConfig;
use springer_lab::report::{self, Command};
use springer_lab::spectral::SpectralDatum;
use springer_lab::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    /// Malformed configuration or invalid datum.
    Config = 2,
    /// Precision ceiling or enumeration budget reached.
    Precision = 3,
    /// A checked identity or invariant failed.
    Identity = 4,
    NullArgument = 5,
    InvalidUtf8 = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlCommand {
    Invariants = 0,
    Enumerate = 1,
    Orbital = 2,
    Strata = 3,
    VerifyFl = 4,
}

impl From<SlCommand> for Command {
    fn from(c: SlCommand) -> Command {
        match c {
            SlCommand::Invariants => Command::Invariants,
            SlCommand::Enumerate => Command::Enumerate,
            SlCommand::Orbital => Command::Orbital,
            SlCommand::Strata => Command::Strata,
            SlCommand::VerifyFl => Command::VerifyFl,
        }
    }
}

/// A parsed configuration together with its datum.
pub struct SlDatum {
    config: ExperimentConfig,
    datum: SpectralDatum,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SlStatus {
    match e.exit_code() {
        2 => SlStatus::Config,
        3 => SlStatus::Precision,
        _ => SlStatus::Identity,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SlStatus, String)>) -> SlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside springer_lab".into());
            SlStatus::Panic
        }
    }
}

fn lib(e: Error) -> (SlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SlStatus, String) {
    (SlStatus::NullArgument, format!("{what} is null"))
}

/// Parse a TOML configuration and build its datum.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_datum_from_toml(toml: *const c_char, out: *mut *mut SlDatum) -> SlStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let src = CStr::from_ptr(toml).to_str().map_err(|e| (SlStatus::InvalidUtf8, e.to_string()))?;
        let config = ExperimentConfig::parse(src, "ffi").map_err(lib)?;
        let datum = config.datum().map_err(lib)?;
        *out = Box::into_raw(Box::new(SlDatum { config, datum }));
        Ok(())
    })
}

/// # Safety
/// `d` must come from [`sl_datum_from_toml`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sl_datum_free(d: *mut SlDatum) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_datum_branch_count(d: *const SlDatum, out: *mut usize) -> SlStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("datum"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = d.datum.len();
        Ok(())
    })
}

/// delta computed from the order itself.
///
/// # Safety
/// `d` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_datum_delta(d: *const SlDatum, out: *mut i64) -> SlStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("datum"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = d.datum.delta_direct().map_err(lib)?;
        Ok(())
    })
}

/// Conductor exponents, one per branch. `written` receives the branch count
/// even when `len` is too small.
///
/// # Safety
/// `buf` must hold `len` values; `d` and `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_datum_conductor(d: *const SlDatum, buf: *mut i64, len: usize, written: *mut usize) -> SlStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("datum"))?;
        let written = written.as_mut().ok_or_else(|| null("written"))?;
        let c = d.datum.conductor_direct().map_err(lib)?;
        *written = c.len();
        if len < c.len() {
            return Err((SlStatus::BufferTooSmall, format!("need {} slots, got {len}", c.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(c.as_ptr(), buf, c.len());
        Ok(())
    })
}

/// Run a command and return its JSON report. A report whose checks failed
/// is still returned, together with [`SlStatus::Identity`].
///
/// # Safety
/// `d` must be a live handle and `out` a valid pointer; free the result
/// with [`sl_string_free`].
#[no_mangle]
pub unsafe extern "C" fn sl_report_json(d: *const SlDatum, command: SlCommand, out: *mut *mut c_char) -> SlStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("datum"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let rep = report::build(&d.config, command.into()).map_err(lib)?;
        *out = CString::new(rep.to_json()).expect("JSON has no NUL").into_raw();
        if rep.verdict.ok {
            Ok(())
        } else {
            Err((SlStatus::Identity, rep.verdict.failures.join("; ")))
        }
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Report schema version.
#[no_mangle]
pub extern "C" fn sl_schema_version() -> u32 {
    report::SCHEMA_VERSION
}

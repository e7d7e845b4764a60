//! C interface to weylscan.
//!
//! Every fallible call returns a [`WsStatus`]. On failure the message is
//! kept per thread and can be read with [`ws_last_error`]. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use weylscan::cli::{self, CommandKind, RunConfig};
use weylscan::error::Error;
use weylscan::lfunc::{central_value, exponent_scan, load_maass, LFunctionSpec, ScanResult};
use weylscan::report::Verdict;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    NoConvergence = 4,
    Precondition = 5,
    Parse = 6,
    Io = 7,
    Panic = 8,
}

/// An L-function: coefficients plus gamma data.
pub struct WsLFunction(LFunctionSpec);

/// The records of one exponent scan.
pub struct WsScan(ScanResult);

/// Output of one CLI-equivalent run.
pub struct WsRun {
    text: CString,
    pass: usize,
    fail: usize,
    inconclusive: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WsComplex {
    pub re: f64,
    pub im: f64,
    pub abs_error: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WsScanRecord {
    pub t: f64,
    pub modulus: f64,
    pub afe_length: usize,
    pub consistency_gap: f64,
    pub convexity_ratio: f64,
    pub weyl_ratio: f64,
    pub accepted: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WsVerdictCounts {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> WsStatus {
    match e {
        Error::InvalidArgument(_) | Error::NotCoprime { .. } | Error::ModulusMismatch { .. } | Error::Config(_) => {
            WsStatus::InvalidArgument
        }
        Error::OutOfRange(_) | Error::GammaPole(_) | Error::InsufficientCoefficients { .. } => WsStatus::OutOfRange,
        Error::NoConvergence { .. } => WsStatus::NoConvergence,
        Error::Parse { .. } => WsStatus::Parse,
        Error::Io(_) => WsStatus::Io,
        _ => WsStatus::Precondition,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (WsStatus, String)>) -> WsStatus {
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(Ok(())) => WsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            WsStatus::Panic
        }
    }
}

fn lib(e: Error) -> (WsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (WsStatus, String) {
    (WsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (WsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (WsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ws_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ws_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Kloosterman sum S(m, n; c).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_kloosterman(m: i64, n: i64, c: u64, out: *mut WsComplex) -> WsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let v = weylscan::expsums::kloosterman(m, n, c).map_err(lib)?;
        *out = WsComplex { re: v.re, im: v.im, abs_error: 0.0 };
        Ok(())
    })
}

/// Coefficients of Δ up to `n_max`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_lfunction_delta(n_max: usize, out: *mut *mut WsLFunction) -> WsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if n_max == 0 {
            return Err((WsStatus::InvalidArgument, "n_max must be positive".into()));
        }
        *out = Box::into_raw(Box::new(WsLFunction(LFunctionSpec::delta(n_max))));
        Ok(())
    })
}

/// A Maass form read from a coefficient file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_lfunction_load_maass(path: *const c_char, out: *mut *mut WsLFunction) -> WsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let spec = load_maass(Path::new(path)).map_err(lib)?;
        *out = Box::into_raw(Box::new(WsLFunction(spec)));
        Ok(())
    })
}

/// # Safety
/// `h` must come from a `ws_lfunction_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ws_lfunction_free(h: *mut WsLFunction) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// L(1/2 + it) through the approximate functional equation with the given
/// balance parameter.
///
/// # Safety
/// `h` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_central_value(h: *const WsLFunction, t: f64, balance: f64, out: *mut WsComplex) -> WsStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = central_value(&h.0, t, balance).map_err(lib)?;
        *out = WsComplex {
            re: v.value.re,
            im: v.value.im,
            abs_error: v.abs_error,
        };
        Ok(())
    })
}

/// |L(1/2 + it)| on t_min, t_min + step, ..., t_max.
///
/// # Safety
/// `h` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_scan_run(
    h: *const WsLFunction,
    t_min: f64,
    t_max: f64,
    step: f64,
    out: *mut *mut WsScan,
) -> WsStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let res = exponent_scan(&h.0, t_min, t_max, step).map_err(lib)?;
        *out = Box::into_raw(Box::new(WsScan(res)));
        Ok(())
    })
}

/// Number of records, or 0 for NULL.
///
/// # Safety
/// `s` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ws_scan_len(s: *const WsScan) -> usize {
    s.as_ref().map_or(0, |s| s.0.records.len())
}

/// # Safety
/// `s` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_scan_record(s: *const WsScan, index: usize, out: *mut WsScanRecord) -> WsStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("handle"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = s.0.records.get(index).ok_or_else(|| {
            (
                WsStatus::OutOfRange,
                format!("index {index} beyond {} records", s.0.records.len()),
            )
        })?;
        *out = WsScanRecord {
            t: r.t,
            modulus: r.modulus,
            afe_length: r.afe_length,
            consistency_gap: r.consistency_gap,
            convexity_ratio: r.convexity_ratio,
            weyl_ratio: r.weyl_ratio,
            accepted: r.accepted,
        };
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`ws_scan_run`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ws_scan_free(s: *mut WsScan) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Run a command as the command-line tool would, with `config` holding
/// `key = value` lines (may be NULL). The output is kept in the handle.
///
/// # Safety
/// `command` and a non-NULL `config` must be NUL-terminated strings and
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ws_run(command: *const c_char, config: *const c_char, out: *mut *mut WsRun) -> WsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = str_arg(command, "command")?;
        let cmd = CommandKind::parse(name)
            .ok_or_else(|| (WsStatus::InvalidArgument, format!("unknown command {name:?}")))?;
        let text = if config.is_null() { "" } else { str_arg(config, "config")? };
        let invalid = |e: cli::ConfigError| (WsStatus::InvalidArgument, e.to_string());
        let entries = cli::parse_config_text(text).map_err(invalid)?;
        let cfg = RunConfig::resolve(cmd, &entries, &[]).map_err(invalid)?;
        let run = cli::run(&cfg).map_err(lib)?;
        let text = CString::new(run.text).map_err(|_| (WsStatus::Panic, "output contains NUL".to_string()))?;
        *out = Box::into_raw(Box::new(WsRun {
            text,
            pass: run.report.count(Verdict::Pass),
            fail: run.report.count(Verdict::Fail),
            inconclusive: run.report.count(Verdict::Inconclusive),
        }));
        Ok(())
    })
}

/// Rendered output; valid while the handle lives.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ws_run_output(r: *const WsRun) -> *const c_char {
    r.as_ref().map_or(ptr::null(), |r| r.text.as_ptr())
}

/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ws_run_counts(r: *const WsRun) -> WsVerdictCounts {
    r.as_ref().map_or(WsVerdictCounts::default(), |r| WsVerdictCounts {
        pass: r.pass,
        fail: r.fail,
        inconclusive: r.inconclusive,
    })
}

/// # Safety
/// `r` must come from [`ws_run`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ws_run_free(r: *mut WsRun) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(ws_last_error()).to_string_lossy().into_owned() }
    }

    #[test]
    fn kloosterman_and_errors() {
        let mut v = WsComplex::default();
        assert_eq!(unsafe { ws_kloosterman(1, 1, 7, &mut v) }, WsStatus::Ok);
        let direct = weylscan::expsums::kloosterman(1, 1, 7).unwrap();
        assert_eq!((v.re, v.im), (direct.re, direct.im));
        assert_eq!(unsafe { ws_kloosterman(1, 1, 0, &mut v) }, WsStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        assert_eq!(unsafe { ws_kloosterman(1, 1, 7, ptr::null_mut()) }, WsStatus::NullPointer);
        assert_eq!(last_error(), "out is null");
    }

    #[test]
    fn lfunction_handles() {
        let mut h = ptr::null_mut();
        assert_eq!(unsafe { ws_lfunction_delta(2000, &mut h) }, WsStatus::Ok);
        let mut a = WsComplex::default();
        let mut b = WsComplex::default();
        unsafe {
            assert_eq!(ws_central_value(h, 20.0, 1.0, &mut a), WsStatus::Ok);
            assert_eq!(ws_central_value(h, 20.0, 2.0, &mut b), WsStatus::Ok);
        }
        assert!((a.re - b.re).abs() + (a.im - b.im).abs() < 1e-8);
        let mut s = ptr::null_mut();
        unsafe {
            assert_eq!(ws_scan_run(h, 10.0, 12.0, 0.5, &mut s), WsStatus::Ok);
            assert_eq!(ws_scan_len(s), 5);
            let mut r = WsScanRecord::default();
            assert_eq!(ws_scan_record(s, 4, &mut r), WsStatus::Ok);
            assert_eq!(r.t, 12.0);
            assert_eq!(ws_scan_record(s, 5, &mut r), WsStatus::OutOfRange);
            ws_scan_free(s);
            ws_lfunction_free(h);
            ws_lfunction_free(ptr::null_mut());
        }
        let missing = CString::new("/nonexistent/coefficients.txt").unwrap();
        assert_eq!(unsafe { ws_lfunction_load_maass(missing.as_ptr(), &mut h) }, WsStatus::Io);
    }

    #[test]
    fn run_matches_library() {
        let cmd = CString::new("petersson").unwrap();
        let cfg = CString::new("k = 12\ngrid = 3\n").unwrap();
        let mut r = ptr::null_mut();
        assert_eq!(unsafe { ws_run(cmd.as_ptr(), cfg.as_ptr(), &mut r) }, WsStatus::Ok);
        let counts = unsafe { ws_run_counts(r) };
        assert_eq!((counts.pass, counts.fail), (1, 0));
        let text = unsafe { CStr::from_ptr(ws_run_output(r)) }.to_str().unwrap().to_string();
        assert!(text.contains("\"k\": \"12\""));
        unsafe { ws_run_free(r) };
        let bad = CString::new("k = 12\nbogus = 1\n").unwrap();
        assert_eq!(unsafe { ws_run(cmd.as_ptr(), bad.as_ptr(), &mut r) }, WsStatus::InvalidArgument);
        assert_eq!(last_error(), "line 2: unknown key `bogus` for `petersson`");
    }
}

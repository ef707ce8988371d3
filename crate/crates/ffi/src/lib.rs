//! C ABI over the blow-up gain, time dilation and signal-class validators.
//!
//! Every fallible call returns a `PT_*` status code and writes its result
//! through an out-pointer. On failure the message is kept per thread and can
//! be read with [`pt_last_error_message`]. Handles are opaque and must be
//! released with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use pt_hybrid::switching::{
    bu_adt_bound, load_signal, validate_bu_aat, validate_bu_adt, AatParams, AdtParams,
    ModePartition, Piece, SwitchingSignal, ValidationReport,
};
use pt_hybrid::{BlowUpParams, Error};

pub const PT_OK: i32 = 0;
pub const PT_ERR_NULL: i32 = 1;
pub const PT_ERR_INVALID: i32 = 2;
pub const PT_ERR_DOMAIN: i32 = 3;
pub const PT_ERR_IO: i32 = 4;
pub const PT_ERR_PARSE: i32 = 5;
pub const PT_ERR_PANIC: i32 = 6;
pub const PT_ERR_OTHER: i32 = 7;

/// Blow-up gain parameters `(T, k, μ0)`.
pub struct PtBlowUp(BlowUpParams);

/// A piecewise-constant switching signal with its mode partition.
pub struct PtSignal(SwitchingSignal);

/// Outcome of a signal-class check. Witness times are NaN when absent.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtValidation {
    pub pass: bool,
    pub min_slack: f64,
    pub witness_t1: f64,
    pub witness_t2: f64,
}

impl From<ValidationReport> for PtValidation {
    fn from(r: ValidationReport) -> Self {
        Self {
            pass: r.pass,
            min_slack: r.min_slack,
            witness_t1: r.witness_t1.unwrap_or(f64::NAN),
            witness_t2: r.witness_t2.unwrap_or(f64::NAN),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> i32 {
    match e {
        Error::InvalidParams(_)
        | Error::InvalidDwell { .. }
        | Error::InfeasiblePolicy(_)
        | Error::UnknownScenario(_)
        | Error::Build(_) => PT_ERR_INVALID,
        Error::Domain(_) => PT_ERR_DOMAIN,
        Error::Io(_) => PT_ERR_IO,
        Error::Parse(_) => PT_ERR_PARSE,
        _ => PT_ERR_OTHER,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (i32, String)>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PT_OK,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            PT_ERR_PANIC
        }
    }
}

fn lift<T>(r: pt_hybrid::Result<T>) -> Result<T, (i32, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (i32, String) {
    (PT_ERR_NULL, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (i32, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), (i32, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn modes<'a>(p: *const usize, n: usize, what: &str) -> Result<&'a [usize], (i32, String)> {
    if n == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(null(what))
    } else {
        Ok(slice::from_raw_parts(p, n))
    }
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn pt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf`.
///
/// Returns the message length in bytes without the terminator, or 0 when
/// there is none. At most `len − 1` bytes are copied and the result is always
/// nul-terminated when `len > 0`.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pt_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Clears the calling thread's last error.
#[no_mangle]
pub extern "C" fn pt_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Creates gain parameters; `T > 0`, `k ≥ 1`, `μ0 ≥ 1`.
///
/// # Safety
/// `out` must be a valid pointer to write a handle into.
#[no_mangle]
pub unsafe extern "C" fn pt_blowup_new(
    t_scale: f64,
    k: f64,
    mu0: f64,
    out: *mut *mut PtBlowUp,
) -> i32 {
    guard(|| {
        let p = lift(BlowUpParams::new(t_scale, k, mu0))?;
        write_out(out, Box::into_raw(Box::new(PtBlowUp(p))), "out")
    })
}

/// # Safety
/// `h` must be null or a handle from [`pt_blowup_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pt_blowup_free(h: *mut PtBlowUp) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Terminal time `Υ = T·μ0^(−1/k)`.
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pt_blowup_terminal_time(h: *const PtBlowUp, out: *mut f64) -> i32 {
    guard(|| {
        let p = &deref(h, "handle")?.0;
        write_out(out, p.terminal_time(), "out")
    })
}

/// Gain `μ(t)` for `0 ≤ t < Υ`.
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pt_blowup_gain(h: *const PtBlowUp, t: f64, out: *mut f64) -> i32 {
    guard(|| {
        let p = &deref(h, "handle")?.0;
        write_out(out, lift(p.gain(t))?, "out")
    })
}

/// Dilated time `s(t)`.
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pt_blowup_dilate(h: *const PtBlowUp, t: f64, out: *mut f64) -> i32 {
    guard(|| {
        let p = &deref(h, "handle")?.0;
        write_out(out, lift(p.dilate(t))?, "out")
    })
}

/// Original time `t(s)`, the inverse of [`pt_blowup_dilate`].
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pt_blowup_contract(h: *const PtBlowUp, s: f64, out: *mut f64) -> i32 {
    guard(|| {
        let p = &deref(h, "handle")?.0;
        write_out(out, lift(p.contract(s))?, "out")
    })
}

/// Switch budget `ω_k(μ(t2), μ(t1))/τ_d + N0` on the window `(t1, t2]`.
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pt_bu_adt_bound(
    h: *const PtBlowUp,
    tau_d: f64,
    n0: f64,
    t1: f64,
    t2: f64,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let p = &deref(h, "handle")?.0;
        let adt = lift(AdtParams::new(tau_d, n0))?;
        write_out(out, lift(bu_adt_bound(p, &adt, t1, t2))?, "out")
    })
}

/// Builds a signal from `len` pieces: piece `i` starts at `starts[i]` in mode
/// `modes[i]`. The first start must be 0 and starts must increase.
///
/// # Safety
/// `starts` and `modes` must hold `len` elements; `stable` and `unstable`
/// must hold `n_stable` and `n_unstable` elements (either may be null when
/// its count is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_signal_new(
    starts: *const f64,
    mode_ids: *const usize,
    len: usize,
    end_time: f64,
    stable: *const usize,
    n_stable: usize,
    unstable: *const usize,
    n_unstable: usize,
    out: *mut *mut PtSignal,
) -> i32 {
    guard(|| {
        if len == 0 {
            return Err((PT_ERR_INVALID, "a signal needs at least one piece".into()));
        }
        if starts.is_null() || mode_ids.is_null() {
            return Err(null("starts or modes"));
        }
        let s = slice::from_raw_parts(starts, len);
        let m = slice::from_raw_parts(mode_ids, len);
        let pieces = s
            .iter()
            .zip(m)
            .map(|(&start, &mode)| Piece { start, mode })
            .collect();
        let partition = ModePartition {
            stable: modes(stable, n_stable, "stable")?.to_vec(),
            unstable: modes(unstable, n_unstable, "unstable")?.to_vec(),
        };
        let sig = lift(SwitchingSignal::new(pieces, end_time, partition))?;
        write_out(out, Box::into_raw(Box::new(PtSignal(sig))), "out")
    })
}

/// Loads a signal CSV and its JSON sidecar.
///
/// # Safety
/// `path` must be a nul-terminated UTF-8 string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pt_signal_load(path: *const c_char, out: *mut *mut PtSignal) -> i32 {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|e| (PT_ERR_INVALID, format!("path is not UTF-8: {e}")))?;
        let sig = load_signal(Path::new(p)).map_err(|e| (status_of(&e), format!("{p}: {e}")))?;
        write_out(out, Box::into_raw(Box::new(PtSignal(sig))), "out")
    })
}

/// # Safety
/// `h` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pt_signal_free(h: *mut PtSignal) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of switches.
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pt_signal_switch_count(h: *const PtSignal, out: *mut usize) -> i32 {
    guard(|| {
        let s = &deref(h, "handle")?.0;
        write_out(out, s.switch_count(), "out")
    })
}

/// Checks the signal against the blow-up dwell-time class.
///
/// # Safety
/// `gain` and `signal` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pt_validate_bu_adt(
    gain: *const PtBlowUp,
    signal: *const PtSignal,
    tau_d: f64,
    n0: f64,
    out: *mut PtValidation,
) -> i32 {
    guard(|| {
        let p = &deref(gain, "gain")?.0;
        let s = &deref(signal, "signal")?.0;
        let adt = lift(AdtParams::new(tau_d, n0))?;
        write_out(out, lift(validate_bu_adt(s, p, &adt))?.into(), "out")
    })
}

/// Checks the unstable-mode activation budget.
///
/// # Safety
/// `gain` and `signal` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pt_validate_bu_aat(
    gain: *const PtBlowUp,
    signal: *const PtSignal,
    tau_a: f64,
    t0: f64,
    out: *mut PtValidation,
) -> i32 {
    guard(|| {
        let p = &deref(gain, "gain")?.0;
        let s = &deref(signal, "signal")?.0;
        let aat = lift(AatParams::new(tau_a, t0))?;
        write_out(out, lift(validate_bu_aat(s, p, &aat))?.into(), "out")
    })
}

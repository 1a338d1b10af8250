//! C interface to the `crr` checker.
//!
//! Models and verdicts are opaque handles created by the library and
//! released with their `_free` functions. Every fallible call returns a
//! [`CrrStatus`]; on failure, [`crr_last_error_message`] describes the most
//! recent error on the calling thread. Strings returned by the library are
//! released with [`crr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::{Duration, Instant};

use crr::bench::bmc;
use crr::crr::{mc_crr, CheckReport, CrrConfig, CrrStats, Verdict};
use crr::model::{counter_aig, parse_aiger, CounterSpec, Encoding, TransitionSystem};
use crr::sat::DEFAULT_CONFLICT_LIMIT;
use crr::Error;

/// A loaded transition system.
pub struct CrrModel {
    ts: TransitionSystem,
}

/// The result of a check.
pub struct CrrVerdict {
    report: CheckReport,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrrVerdictKind {
    Counterexample = 0,
    HoldsBounded = 1,
    HoldsByLoop = 2,
    ResourceOut = 3,
}

/// Check settings. Zero means "no limit" for `conflict_limit`, `wall_ms`
/// and `pqe_max_queries`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrrOptions {
    pub seed: u64,
    pub conflict_limit: u64,
    pub wall_ms: u64,
    pub pqe_max_queries: u64,
    pub expand_clauses: bool,
}

impl CrrOptions {
    fn config(&self) -> CrrConfig {
        let nonzero = |v: u64| (v != 0).then_some(v);
        CrrConfig {
            seed: self.seed,
            conflict_limit: nonzero(self.conflict_limit).unwrap_or(DEFAULT_CONFLICT_LIMIT),
            deadline: nonzero(self.wall_ms).map(|ms| Instant::now() + Duration::from_millis(ms)),
            pqe_max_queries: nonzero(self.pqe_max_queries),
            expand_clauses: self.expand_clauses,
            record: false,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: CrrStatus, msg: impl Into<String>) -> CrrStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> CrrStatus {
    let status = match e {
        Error::Io(_) => CrrStatus::Io,
        Error::Parse { .. } | Error::Structural(_) | Error::CyclicCircuit(_) => CrrStatus::Parse,
        _ => CrrStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into `Internal`.
fn guard(f: impl FnOnce() -> CrrStatus) -> CrrStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(CrrStatus::Internal, "internal error"))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, CrrStatus> {
    if s.is_null() {
        return Err(fail(CrrStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(CrrStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn put_model(out: *mut *mut CrrModel, ts: crr::Result<TransitionSystem>) -> CrrStatus {
    match ts {
        Ok(ts) => {
            *out = Box::into_raw(Box::new(CrrModel { ts }));
            CrrStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Options with a fixed seed and no limits.
#[no_mangle]
pub extern "C" fn crr_options_default() -> CrrOptions {
    CrrOptions {
        seed: 0,
        conflict_limit: 0,
        wall_ms: 0,
        pqe_max_queries: 0,
        expand_clauses: false,
    }
}

/// Loads an ASCII AIGER file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crr_model_from_aiger_file(path: *const c_char, out: *mut *mut CrrModel) -> CrrStatus {
    guard(|| {
        if out.is_null() {
            return fail(CrrStatus::NullPointer, "out is null");
        }
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let ts = std::fs::read(path)
            .map_err(Error::from)
            .and_then(|b| parse_aiger(&b))
            .and_then(|a| TransitionSystem::from_aig(&a));
        put_model(out, ts)
    })
}

/// Parses an ASCII AIGER model from memory.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crr_model_from_aiger_str(text: *const c_char, out: *mut *mut CrrModel) -> CrrStatus {
    guard(|| {
        if out.is_null() {
            return fail(CrrStatus::NullPointer, "out is null");
        }
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        put_model(out, parse_aiger(text.as_bytes()).and_then(|a| TransitionSystem::from_aig(&a)))
    })
}

/// Builds the `k`-bit counter failing at value `d`, with the standard
/// encoding or, when `permuted` is set, the encoding shuffled by `perm_seed`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crr_model_counter(
    k: u32,
    d: u64,
    permuted: bool,
    perm_seed: u64,
    out: *mut *mut CrrModel,
) -> CrrStatus {
    guard(|| {
        if out.is_null() {
            return fail(CrrStatus::NullPointer, "out is null");
        }
        let encoding = if permuted {
            Encoding::Permuted(perm_seed)
        } else {
            Encoding::Standard
        };
        let ts = CounterSpec::new(k, d, encoding)
            .and_then(|s| counter_aig(&s))
            .and_then(|a| TransitionSystem::from_aig(&a));
        put_model(out, ts)
    })
}

/// Number of latches, or 0 for a null model.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn crr_model_num_latches(model: *const CrrModel) -> usize {
    model.as_ref().map_or(0, |m| m.ts.num_latches())
}

/// Number of primary inputs, or 0 for a null model.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn crr_model_num_inputs(model: *const CrrModel) -> usize {
    model.as_ref().map_or(0, |m| m.ts.num_inputs())
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crr_model_free(model: *mut CrrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn run_check(
    model: *const CrrModel,
    n: usize,
    options: *const CrrOptions,
    out: *mut *mut CrrVerdict,
    check: impl FnOnce(&TransitionSystem, usize, CrrConfig) -> crr::Result<CheckReport>,
) -> CrrStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(CrrStatus::NullPointer, "model is null");
        };
        if out.is_null() {
            return fail(CrrStatus::NullPointer, "out is null");
        }
        let opts = options.as_ref().copied().unwrap_or_else(|| crr_options_default());
        match check(&m.ts, n, opts.config()) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(CrrVerdict { report }));
                CrrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Checks the property for `n` transitions. `options` may be null.
///
/// # Safety
/// `model` must be a live model handle, `options` null or valid, and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crr_check(
    model: *const CrrModel,
    n: usize,
    options: *const CrrOptions,
    out: *mut *mut CrrVerdict,
) -> CrrStatus {
    run_check(model, n, options, out, mc_crr)
}

/// Bounded model checking for `n` transitions. `options` may be null.
///
/// # Safety
/// As for [`crr_check`].
#[no_mangle]
pub unsafe extern "C" fn crr_bmc(
    model: *const CrrModel,
    n: usize,
    options: *const CrrOptions,
    out: *mut *mut CrrVerdict,
) -> CrrStatus {
    run_check(model, n, options, out, |ts, n, cfg| {
        let verdict = bmc(ts, n, cfg.solver_config()).or_else(Verdict::from_error)?;
        Ok(CheckReport {
            verdict,
            bound: n,
            stats: CrrStats::default(),
        })
    })
}

/// # Safety
/// `verdict` must be a live verdict handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crr_verdict_kind(verdict: *const CrrVerdict, out: *mut CrrVerdictKind) -> CrrStatus {
    let (Some(v), false) = (verdict.as_ref(), out.is_null()) else {
        return fail(CrrStatus::NullPointer, "argument is null");
    };
    *out = match v.report.verdict {
        Verdict::Counterexample(_) => CrrVerdictKind::Counterexample,
        Verdict::HoldsBounded(_) => CrrVerdictKind::HoldsBounded,
        Verdict::HoldsByLoop(_) => CrrVerdictKind::HoldsByLoop,
        Verdict::ResourceOut { .. } => CrrVerdictKind::ResourceOut,
    };
    CrrStatus::Ok
}

/// Transitions in the counterexample; 0 when there is none.
///
/// # Safety
/// `verdict` must be null or a live verdict handle.
#[no_mangle]
pub unsafe extern "C" fn crr_verdict_trace_len(verdict: *const CrrVerdict) -> usize {
    verdict
        .as_ref()
        .and_then(|v| v.report.verdict.trace())
        .map_or(0, |t| t.len())
}

/// The loop index of a `HoldsByLoop` verdict; `InvalidArgument` otherwise.
///
/// # Safety
/// `verdict` must be a live verdict handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crr_verdict_loop_index(verdict: *const CrrVerdict, out: *mut usize) -> CrrStatus {
    let (Some(v), false) = (verdict.as_ref(), out.is_null()) else {
        return fail(CrrStatus::NullPointer, "argument is null");
    };
    match v.report.verdict {
        Verdict::HoldsByLoop(i) => {
            *out = i;
            CrrStatus::Ok
        }
        _ => fail(CrrStatus::InvalidArgument, "verdict is not holds_by_loop"),
    }
}

/// The verdict as JSON; free the string with [`crr_string_free`].
///
/// # Safety
/// `verdict` must be a live verdict handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn crr_verdict_to_json(verdict: *const CrrVerdict, out: *mut *mut c_char) -> CrrStatus {
    guard(|| {
        let (Some(v), false) = (verdict.as_ref(), out.is_null()) else {
            return fail(CrrStatus::NullPointer, "argument is null");
        };
        let json = v.report.to_json().to_string();
        *out = CString::new(json).expect("JSON has no NUL bytes").into_raw();
        CrrStatus::Ok
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `verdict` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn crr_verdict_free(verdict: *mut CrrVerdict) {
    if !verdict.is_null() {
        drop(Box::from_raw(verdict));
    }
}

/// The last error on this thread, or null. Valid until the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn crr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

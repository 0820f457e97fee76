//! C ABI over `coinweigh`.
//!
//! Every fallible call returns a [`CwStatus`]; on anything but `CW_STATUS_OK`
//! the message is available from [`cw_last_error_message`] on the same
//! thread. Handles are opaque and owned by the caller once returned; release
//! them with the matching `*_free` function. Strings returned by the library
//! are released with [`cw_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use coinweigh::analysis;
use coinweigh::channel::{self, MessageTriple, Session};
use coinweigh::verify;
use coinweigh::{
    decode_row, search, Block, Error, Half, ProblemInstance, Scale, ScaleOracle, SearchTrace,
    SubsetDescriptor,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInstance = 2,
    Descriptor = 3,
    Size = 4,
    CorruptedOracle = 5,
    Contract = 6,
    Domain = 7,
    Protocol = 8,
    Panic = 9,
}

impl From<&Error> for CwStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Instance(_) => Self::InvalidInstance,
            Error::Descriptor(_) => Self::Descriptor,
            Error::Size(_) => Self::Size,
            Error::CorruptedOracle(_) => Self::CorruptedOracle,
            Error::Contract(_) => Self::Contract,
            Error::Domain(_) => Self::Domain,
            Error::Protocol(_) => Self::Protocol,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Runs `f`, recording errors and turning panics into `CW_STATUS_PANIC`.
fn guard<F>(f: F) -> CwStatus
where
    F: FnOnce() -> Result<(), CwError>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            CwStatus::Ok
        }
        Ok(Err(CwError(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside coinweigh");
            CwStatus::Panic
        }
    }
}

struct CwError(CwStatus, String);

impl From<Error> for CwError {
    fn from(e: Error) -> Self {
        CwError(CwStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> CwError {
    CwError(CwStatus::NullPointer, format!("{what} is null"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, CwError> {
    // SAFETY: caller passes either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, CwError> {
    // SAFETY: caller passes either null or a valid pointer.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn in_triple(p: *const u64, what: &str) -> Result<[u64; 3], CwError> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees three readable u64 values.
    Ok(unsafe { [*p, *p.add(1), *p.add(2)] })
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], CwError> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `len` readable elements.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message for the last failing call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: `s` came from `CString::into_raw`.
        drop(unsafe { CString::from_raw(s) });
    }
}

// ---------------------------------------------------------------------------
// scale

/// Counting scale over a fixed instance.
pub struct CwOracle {
    inner: ScaleOracle,
}

/// # Safety
/// `forged` must point to three `uint64_t`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_oracle_new(
    m: u32,
    forged: *const u64,
    out: *mut *mut CwOracle,
) -> CwStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        let forged = unsafe { in_triple(forged, "forged") }?;
        let inner = ScaleOracle::new(ProblemInstance::new(m, forged)?);
        *out = Box::into_raw(Box::new(CwOracle { inner }));
        Ok(())
    })
}

/// # Safety
/// `oracle` must be null or a handle from [`cw_oracle_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_oracle_free(oracle: *mut CwOracle) {
    if !oracle.is_null() {
        // SAFETY: handle was created by `Box::into_raw`.
        drop(unsafe { Box::from_raw(oracle) });
    }
}

/// Weighings answered so far; 0 for a null handle.
///
/// # Safety
/// `oracle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_oracle_query_count(oracle: *const CwOracle) -> u64 {
    unsafe { oracle.as_ref() }.map_or(0, |o| o.inner.query_count())
}

/// Weighs the lower (`upper == false`) or upper half of `[base, base + len)`.
///
/// # Safety
/// `oracle` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_oracle_weigh_half(
    oracle: *mut CwOracle,
    base: u64,
    len: u64,
    upper: bool,
    out: *mut u8,
) -> CwStatus {
    guard(|| {
        let o = unsafe { out_ref(oracle, "oracle") }?;
        let out = unsafe { out_ref(out, "out") }?;
        let half = if upper { Half::Upper } else { Half::Lower };
        let d = SubsetDescriptor::interval_half(Block::new(base, len), half);
        *out = o.inner.weigh(&d)?.value();
        Ok(())
    })
}

/// Weighs an explicit coin list (instances with at most 2^12 coins).
///
/// # Safety
/// `coins` must hold `count` readable values; `oracle` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cw_oracle_weigh_coins(
    oracle: *mut CwOracle,
    coins: *const u64,
    count: usize,
    out: *mut u8,
) -> CwStatus {
    guard(|| {
        let o = unsafe { out_ref(oracle, "oracle") }?;
        let out = unsafe { out_ref(out, "out") }?;
        let coins = unsafe { in_slice(coins, count, "coins") }?.to_vec();
        *out = o
            .inner
            .weigh(&SubsetDescriptor::Explicit { coins })?
            .value();
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// search

/// Completed search trace.
pub struct CwTrace {
    inner: SearchTrace,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CwTraceSummary {
    pub m: u32,
    pub l1: u32,
    pub l2: u32,
    pub n: u32,
    pub l3: u32,
    pub total: u64,
    /// Ascending.
    pub recovered: [u64; 3],
}

/// Runs the three-stage search against `oracle`.
///
/// # Safety
/// `oracle` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_search(oracle: *mut CwOracle, out: *mut *mut CwTrace) -> CwStatus {
    guard(|| {
        let o = unsafe { out_ref(oracle, "oracle") }?;
        let out = unsafe { out_ref(out, "out") }?;
        let m = o.inner.m();
        let inner = search(&mut o.inner, m)?;
        *out = Box::into_raw(Box::new(CwTrace { inner }));
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_trace_summary(
    trace: *const CwTrace,
    out: *mut CwTraceSummary,
) -> CwStatus {
    guard(|| {
        let t = &unsafe { in_ref(trace, "trace") }?.inner;
        *unsafe { out_ref(out, "out") }? = CwTraceSummary {
            m: t.m,
            l1: t.l1,
            l2: t.l2,
            n: t.n(),
            l3: t.l3,
            total: t.total,
            recovered: t.recovered,
        };
        Ok(())
    })
}

/// JSON rendering of the trace; free with [`cw_string_free`].
///
/// # Safety
/// `trace` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_trace_to_json(
    trace: *const CwTrace,
    out: *mut *mut c_char,
) -> CwStatus {
    guard(|| {
        let t = unsafe { in_ref(trace, "trace") }?;
        *unsafe { out_ref(out, "out") }? = into_c_string(t.inner.to_json());
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a handle from [`cw_search`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cw_trace_free(trace: *mut CwTrace) {
    if !trace.is_null() {
        // SAFETY: handle was created by `Box::into_raw`.
        drop(unsafe { Box::from_raw(trace) });
    }
}

/// Decode-table lookup. Pass `second < 0` when the first reading is 0 or 3.
///
/// # Safety
/// `out` must point to three writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cw_decode_row(first: u8, second: i32, out: *mut u8) -> CwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let second = match second {
            s if s < 0 => None,
            s => Some(u8::try_from(s).map_err(|_| {
                CwError(
                    CwStatus::Contract,
                    format!("second reading {s} out of range"),
                )
            })?),
        };
        let digits = decode_row(first, second)?;
        // SAFETY: caller guarantees three writable bytes.
        unsafe { ptr::copy_nonoverlapping(digits.as_ptr(), out, 3) };
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// analysis and verification

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_mean_triple_sum(m: u32, out: *mut f64) -> CwStatus {
    guard(|| {
        *unsafe { out_ref(out, "out") }? = analysis::mean_triple_sum(m)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_mean_closed_form(m: u32, out: *mut f64) -> CwStatus {
    guard(|| {
        *unsafe { out_ref(out, "out") }? = analysis::mean_closed_form(m)?;
        Ok(())
    })
}

/// Limiting rate as a fraction (4/7).
///
/// # Safety
/// Both pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_asymptotic_rate(numer: *mut u64, denom: *mut u64) -> CwStatus {
    guard(|| {
        let r = analysis::asymptotic_rate();
        *unsafe { out_ref(numer, "numer") }? = *r.numer();
        *unsafe { out_ref(denom, "denom") }? = *r.denom();
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CwSweepSummary {
    pub m: u32,
    pub placements_checked: u64,
    pub failures: u64,
    pub total_weighings: u64,
    pub exact_mean_numer: u64,
    pub exact_mean_denom: u64,
    pub max_total: u64,
}

/// Exhaustive sweep over every placement, `2 <= m <= 7`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_exhaustive_verify(m: u32, out: *mut CwSweepSummary) -> CwStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        let r = verify::exhaustive_verify(m)?;
        *out = CwSweepSummary {
            m,
            placements_checked: r.placements_checked,
            failures: r.failures.len() as u64,
            total_weighings: r.total_weighings,
            exact_mean_numer: *r.exact_mean.numer(),
            exact_mean_denom: *r.exact_mean.denom(),
            max_total: r.max_total,
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CwMonteCarloSummary {
    pub m: u32,
    pub trials: u64,
    pub seed: u64,
    pub mean: f64,
    pub stddev: f64,
    pub stderr_: f64,
    pub failures: u64,
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_monte_carlo(
    m: u32,
    trials: u64,
    seed: u64,
    out: *mut CwMonteCarloSummary,
) -> CwStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        let r = verify::monte_carlo(m, trials, seed)?;
        *out = CwMonteCarloSummary {
            m,
            trials,
            seed,
            mean: r.mean,
            stddev: r.stddev,
            stderr_: r.stderr,
            failures: r.failures,
        };
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// adder channel

/// Finished feedback-code session.
pub struct CwSession {
    inner: Session,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CwSlot {
    /// 1 or 2.
    pub stage: u8,
    pub k: u32,
    pub inputs: [u8; 3],
    pub output: u8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CwSessionSummary {
    pub l: u32,
    pub total: u64,
    pub ambiguities: u64,
    pub messages: [u64; 3],
    pub decoded: [u64; 3],
}

/// Simulates one session for three 0-based `l`-bit messages.
///
/// # Safety
/// `messages` must point to three `uint64_t`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_channel_session(
    l: u32,
    messages: *const u64,
    out: *mut *mut CwSession,
) -> CwStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        let msgs = MessageTriple::new(l, unsafe { in_triple(messages, "messages") }?)?;
        let inner = channel::session(&msgs)?;
        *out = Box::into_raw(Box::new(CwSession { inner }));
        Ok(())
    })
}

/// # Safety
/// `session` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_session_summary(
    session: *const CwSession,
    out: *mut CwSessionSummary,
) -> CwStatus {
    guard(|| {
        let s = &unsafe { in_ref(session, "session") }?.inner;
        *unsafe { out_ref(out, "out") }? = CwSessionSummary {
            l: s.l,
            total: s.total as u64,
            ambiguities: (s.total - s.l as usize) as u64,
            messages: s.messages,
            decoded: s.decoded,
        };
        Ok(())
    })
}

/// Number of slots; 0 for a null handle.
///
/// # Safety
/// `session` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_session_slot_count(session: *const CwSession) -> usize {
    unsafe { session.as_ref() }.map_or(0, |s| s.inner.slots.len())
}

/// # Safety
/// `session` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_session_slot(
    session: *const CwSession,
    index: usize,
    out: *mut CwSlot,
) -> CwStatus {
    guard(|| {
        let s = &unsafe { in_ref(session, "session") }?.inner;
        let slot = s.slots.get(index).ok_or_else(|| {
            CwError(
                CwStatus::Domain,
                format!("slot {index} of {}", s.slots.len()),
            )
        })?;
        *unsafe { out_ref(out, "out") }? = CwSlot {
            stage: slot.stage,
            k: slot.k,
            inputs: slot.inputs,
            output: slot.output,
        };
        Ok(())
    })
}

/// JSON transcript; free with [`cw_string_free`].
///
/// # Safety
/// `session` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_session_to_json(
    session: *const CwSession,
    out: *mut *mut c_char,
) -> CwStatus {
    guard(|| {
        let s = unsafe { in_ref(session, "session") }?;
        *unsafe { out_ref(out, "out") }? = into_c_string(s.inner.to_json());
        Ok(())
    })
}

/// # Safety
/// `session` must be null or a handle from [`cw_channel_session`].
#[no_mangle]
pub unsafe extern "C" fn cw_session_free(session: *mut CwSession) {
    if !session.is_null() {
        // SAFETY: handle was created by `Box::into_raw`.
        drop(unsafe { Box::from_raw(session) });
    }
}

/// Decodes stage-1 outputs `y` (length `l`) and stage-2 outputs `y2` into
/// three 0-based messages.
///
/// # Safety
/// `y` and `y2` must hold `y_len` and `y2_len` bytes; `out` must point to
/// three writable `uint64_t`.
#[no_mangle]
pub unsafe extern "C" fn cw_channel_decode(
    l: u32,
    y: *const u8,
    y_len: usize,
    y2: *const u8,
    y2_len: usize,
    out: *mut u64,
) -> CwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let y = unsafe { in_slice(y, y_len, "y") }?;
        let y2 = unsafe { in_slice(y2, y2_len, "y2") }?;
        let decoded = channel::decode_transcript(l, y, y2)?;
        // SAFETY: caller guarantees three writable values.
        unsafe { ptr::copy_nonoverlapping(decoded.messages.as_ptr(), out, 3) };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CwChannelSweepSummary {
    pub l: u32,
    pub sessions: u64,
    pub failures: u64,
    pub law_violations: u64,
    pub mean_numer: u64,
    pub mean_denom: u64,
}

/// Runs every message triple for `1 <= l <= 6`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_channel_verify(l: u32, out: *mut CwChannelSweepSummary) -> CwStatus {
    guard(|| {
        let out = unsafe { out_ref(out, "out") }?;
        let r = channel::exhaustive_channel_verify(l)?;
        *out = CwChannelSweepSummary {
            l,
            sessions: r.sessions,
            failures: r.failures.len() as u64,
            law_violations: r.law_violations,
            mean_numer: *r.mean.numer(),
            mean_denom: *r.mean.denom(),
        };
        Ok(())
    })
}

//! C ABI over the two-party protocols.
//!
//! Matrices cross the boundary as row-major `double` buffers with explicit
//! shapes. Every call returns an [`S2pStatus`]; on failure the thread's last
//! error message describes the cause until the next failing call on that
//! thread. Sessions are opaque and must be released with
//! [`s2p_session_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use s2pmlp::protocols::{s2pdrl, s2php, s2pm, s2prip, s2prl, s2pscr, s2psm, SharePair};
use s2pmlp::{Error, RealMatrix, Session, SplitConfig};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum S2pStatus {
    Ok = 0,
    NullPointer = 1,
    Dimension = 2,
    NonFinite = 3,
    UnsupportedDimension = 4,
    TamperDetected = 5,
    SingularInput = 6,
    Range = 7,
    Usage = 8,
    ProtocolAbort = 9,
    Io = 10,
    Panic = 11,
}

/// Elementwise protocols taking an `rows x cols` input from each party.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum S2pElementwise {
    /// Shares of `A ⊙ B` for Alice's `A` and Bob's `B`.
    Hadamard = 0,
    /// Shares of `1 / (A + B)`, entrywise.
    Reciprocal = 1,
    /// Shares of `max(A + B, 0)`.
    Relu = 2,
    /// The 0/1 pattern of `A + B > 0`, learned in full by both parties.
    ReluDerivative = 3,
    /// Shares of the row softmax of `A + B`.
    Softmax = 4,
}

/// Opaque two-party session. Not safe to use from two threads at once.
pub struct S2pSession {
    inner: Session,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    // interior NULs would truncate the message; replace them
    let msg = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> S2pStatus {
    match e {
        Error::Dimension(_) => S2pStatus::Dimension,
        Error::NonFinite { .. } => S2pStatus::NonFinite,
        Error::UnsupportedDimension(_) => S2pStatus::UnsupportedDimension,
        Error::TamperDetected { .. } => S2pStatus::TamperDetected,
        Error::SingularInput { .. } => S2pStatus::SingularInput,
        Error::Range { .. } => S2pStatus::Range,
        Error::Usage(_) | Error::Format { .. } => S2pStatus::Usage,
        Error::ProtocolAbort(_) => S2pStatus::ProtocolAbort,
        Error::Io(_) | Error::Json(_) => S2pStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status and last-error message.
fn guarded(f: impl FnOnce() -> Result<(), (S2pStatus, String)>) -> S2pStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => S2pStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            S2pStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (S2pStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (S2pStatus, String) {
    (S2pStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `data` must be null or point to `rows * cols` readable doubles.
unsafe fn read_matrix(
    data: *const f64,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<RealMatrix, (S2pStatus, String)> {
    if data.is_null() {
        return Err(null(what));
    }
    let len = rows.checked_mul(cols).ok_or_else(|| {
        (
            S2pStatus::Dimension,
            format!("{what}: {rows} x {cols} overflows"),
        )
    })?;
    // SAFETY: non-null, and the caller guarantees `len` readable doubles
    let values = unsafe { std::slice::from_raw_parts(data, len) };
    RealMatrix::from_vec(rows, cols, values.to_vec()).map_err(lib_err)
}

/// # Safety
/// `out` must be null or point to `m.len()` writable doubles.
unsafe fn write_matrix(
    m: &RealMatrix,
    out: *mut f64,
    what: &str,
) -> Result<(), (S2pStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null, and the caller sized the buffer for this output
    unsafe { ptr::copy_nonoverlapping(m.as_slice().as_ptr(), out, m.len()) };
    Ok(())
}

/// # Safety
/// `session` must be null or a live handle from [`s2p_session_new`].
unsafe fn session_ref<'a>(session: *const S2pSession) -> Result<&'a Session, (S2pStatus, String)> {
    // SAFETY: the caller guarantees the handle is live
    unsafe { session.as_ref() }
        .map(|s| &s.inner)
        .ok_or_else(|| null("session"))
}

/// Message of the last failing call on this thread, or null if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn s2p_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Static, NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn s2p_status_name(status: S2pStatus) -> *const c_char {
    let name: &'static CStr = match status {
        S2pStatus::Ok => c"ok",
        S2pStatus::NullPointer => c"null pointer",
        S2pStatus::Dimension => c"dimension mismatch",
        S2pStatus::NonFinite => c"non-finite value",
        S2pStatus::UnsupportedDimension => c"unsupported dimension",
        S2pStatus::TamperDetected => c"tamper detected",
        S2pStatus::SingularInput => c"singular input",
        S2pStatus::Range => c"range error",
        S2pStatus::Usage => c"usage error",
        S2pStatus::ProtocolAbort => c"protocol aborted",
        S2pStatus::Io => c"io error",
        S2pStatus::Panic => c"internal panic",
    };
    name.as_ptr()
}

/// Creates a session. On success `*out` owns a handle for
/// [`s2p_session_free`]; on failure it is set to null.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn s2p_session_new(
    rho: usize,
    verify_rounds: usize,
    mask_scale: f64,
    seed: u64,
    out: *mut *mut S2pSession,
) -> S2pStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: non-null, writable per the contract
        unsafe { *out = ptr::null_mut() };
        let cfg = SplitConfig::new(rho, verify_rounds, mask_scale, seed).map_err(lib_err)?;
        let inner = Session::new(cfg).map_err(lib_err)?;
        // SAFETY: as above
        unsafe { *out = Box::into_raw(Box::new(S2pSession { inner })) };
        Ok(())
    })
}

/// Releases a session. Null is ignored.
///
/// # Safety
/// `session` must be null or a handle from [`s2p_session_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn s2p_session_free(session: *mut S2pSession) {
    if !session.is_null() {
        // SAFETY: the handle came from Box::into_raw and is freed once
        drop(unsafe { Box::from_raw(session) });
    }
}

/// Bytes sent by all parties so far; 0 for a null handle.
///
/// # Safety
/// `session` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn s2p_session_bytes_sent(session: *const S2pSession) -> u64 {
    // SAFETY: forwarded contract
    unsafe { session_ref(session) }.map_or(0, |s| s.metrics().bytes_sent)
}

/// Messages sent by all parties so far; 0 for a null handle.
///
/// # Safety
/// `session` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn s2p_session_rounds(session: *const S2pSession) -> u64 {
    // SAFETY: forwarded contract
    unsafe { session_ref(session) }.map_or(0, |s| s.metrics().rounds)
}

/// Shares of `A B` for Alice's `n x inner` matrix `A` and Bob's
/// `inner x m` matrix `B`. Each output buffer holds `n * m` doubles;
/// `out_alice + out_bob = A B`. `inner` must be at least 2.
///
/// # Safety
/// `session` must be a live handle; `a`, `b` and both outputs must point to
/// buffers of the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn s2p_matmul(
    session: *const S2pSession,
    a: *const f64,
    n: usize,
    inner: usize,
    b: *const f64,
    m: usize,
    out_alice: *mut f64,
    out_bob: *mut f64,
) -> S2pStatus {
    guarded(|| {
        // SAFETY: forwarded contract
        let s = unsafe { session_ref(session) }?;
        let a = unsafe { read_matrix(a, n, inner, "a") }?;
        let b = unsafe { read_matrix(b, inner, m, "b") }?;
        let (oa, ob) = s2pm(s, &a, &b).map_err(lib_err)?;
        unsafe { write_matrix(&oa.share, out_alice, "out_alice") }?;
        unsafe { write_matrix(&ob.share, out_bob, "out_bob") }
    })
}

/// Shares of the row inner products of two `rows x cols` matrices. Each
/// output buffer holds `rows` doubles.
///
/// # Safety
/// As for [`s2p_matmul`].
#[no_mangle]
pub unsafe extern "C" fn s2p_row_dot(
    session: *const S2pSession,
    a: *const f64,
    b: *const f64,
    rows: usize,
    cols: usize,
    out_alice: *mut f64,
    out_bob: *mut f64,
) -> S2pStatus {
    guarded(|| {
        // SAFETY: forwarded contract
        let s = unsafe { session_ref(session) }?;
        let a = unsafe { read_matrix(a, rows, cols, "a") }?;
        let b = unsafe { read_matrix(b, rows, cols, "b") }?;
        let (oa, ob) = s2prip(s, &a, &b).map_err(lib_err)?;
        unsafe { write_matrix(&oa.share, out_alice, "out_alice") }?;
        unsafe { write_matrix(&ob.share, out_bob, "out_bob") }
    })
}

/// Runs an elementwise protocol on Alice's `a` and Bob's `b`, both
/// `rows x cols`. Each output buffer holds `rows * cols` doubles.
///
/// # Safety
/// As for [`s2p_matmul`].
#[no_mangle]
pub unsafe extern "C" fn s2p_elementwise(
    session: *const S2pSession,
    op: S2pElementwise,
    a: *const f64,
    b: *const f64,
    rows: usize,
    cols: usize,
    out_alice: *mut f64,
    out_bob: *mut f64,
) -> S2pStatus {
    guarded(|| {
        // SAFETY: forwarded contract
        let s = unsafe { session_ref(session) }?;
        let a = unsafe { read_matrix(a, rows, cols, "a") }?;
        let b = unsafe { read_matrix(b, rows, cols, "b") }?;
        let pair = match op {
            S2pElementwise::Hadamard => s2php(s, &a, &b),
            S2pElementwise::Reciprocal => s2pscr(s, &a, &b),
            S2pElementwise::Relu => s2prl(s, &a, &b),
            S2pElementwise::ReluDerivative => {
                s2pdrl(s, &a, &b).and_then(|d| SharePair::new(d.alice, d.bob))
            }
            S2pElementwise::Softmax => s2psm(s, &a, &b),
        }
        .map_err(lib_err)?;
        unsafe { write_matrix(&pair.alice, out_alice, "out_alice") }?;
        unsafe { write_matrix(&pair.bob, out_bob, "out_bob") }
    })
}

//! C ABI over `polykt`.
//!
//! Every entry point returns a [`PktStatus`]; results travel through out
//! pointers. On failure the message is kept in a thread-local slot readable
//! with [`pkt_last_error_message`]. Constraint sets and estimators are opaque
//! handles owned by the caller and released with their `_free` function.
//! Buffers returned by the library must be released with [`pkt_buffer_free`]
//! or [`pkt_symbols_free`].
//!
//! Symbols are 0-based `uint32_t` values below the alphabet size.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use polykt::codec;
use polykt::constraints::{dirichlet_measure, BackendPreference, ConstraintSet, DirichletParams, IntegrationConfig};
use polykt::estimator::EstimatorState;
use polykt::redundancy;
use polykt::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PktStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    DimensionMismatch = 4,
    Infeasible = 5,
    ZeroMeasure = 6,
    Parse = 7,
    NonConvergence = 8,
    MassCollapse = 9,
    EnumerationGuard = 10,
    InvalidSymbol = 11,
    Codec = 12,
    Io = 13,
    Panic = 14,
}

impl From<&Error> for PktStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain { .. } => Self::Domain,
            Error::DimensionMismatch { .. } => Self::DimensionMismatch,
            Error::InvalidParameter(_) => Self::InvalidArgument,
            Error::Infeasible(_) => Self::Infeasible,
            Error::ZeroMeasure(_) => Self::ZeroMeasure,
            Error::Parse { .. } => Self::Parse,
            Error::NonConvergence { .. } => Self::NonConvergence,
            Error::MassCollapse { .. } => Self::MassCollapse,
            Error::EnumerationGuard { .. } => Self::EnumerationGuard,
            Error::InvalidSymbol { .. } => Self::InvalidSymbol,
            Error::Codec(_) => Self::Codec,
            Error::Io(_) => Self::Io,
        }
    }
}

/// Numerical settings; obtain defaults from [`pkt_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PktConfig {
    pub quadrature_max_m: usize,
    pub quad_tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub mass_floor: f64,
    /// Nonzero forces the Monte Carlo backend.
    pub force_monte_carlo: u8,
}

impl From<IntegrationConfig> for PktConfig {
    fn from(c: IntegrationConfig) -> Self {
        Self {
            quadrature_max_m: c.quadrature_max_m,
            quad_tol: c.quad_tol,
            samples: c.samples,
            seed: c.seed,
            mass_floor: c.mass_floor,
            force_monte_carlo: u8::from(c.backend == BackendPreference::MonteCarlo),
        }
    }
}

impl PktConfig {
    fn to_native(self) -> Result<IntegrationConfig, Failure> {
        let cfg = IntegrationConfig {
            quadrature_max_m: self.quadrature_max_m,
            quad_tol: self.quad_tol,
            samples: self.samples,
            seed: self.seed,
            mass_floor: self.mass_floor,
            backend: if self.force_monte_carlo != 0 { BackendPreference::MonteCarlo } else { BackendPreference::Auto },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Opaque constraint set.
pub struct PktConstraints(ConstraintSet);

/// Opaque sequential estimator.
pub struct PktEstimator(EstimatorState);

/// Byte buffer owned by the library.
#[repr(C)]
pub struct PktBuffer {
    pub data: *mut u8,
    pub len: usize,
}

/// Symbol buffer owned by the library.
#[repr(C)]
pub struct PktSymbols {
    pub data: *mut u32,
    pub len: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(PktStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(PktStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PktStatus::NullPointer, format!("{what} is null"))
}

fn set_last_error(msg: String) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> PktStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            PktStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
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
            PktStatus::Panic
        }
    }
}

unsafe fn input_slice<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(data, len))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null("handle"))
}

unsafe fn config(cfg: *const PktConfig) -> Result<IntegrationConfig, Failure> {
    match cfg.as_ref() {
        Some(c) => c.to_native(),
        None => Ok(IntegrationConfig::default()),
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap` bytes) and returns the full message length.
#[no_mangle]
pub unsafe extern "C" fn pkt_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Default numerical settings.
#[no_mangle]
pub extern "C" fn pkt_config_default() -> PktConfig {
    IntegrationConfig::default().into()
}

/// Whole simplex over `m` symbols.
#[no_mangle]
pub unsafe extern "C" fn pkt_constraints_full(m: usize, out: *mut *mut PktConstraints) -> PktStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let set = ConstraintSet::full(m)?;
        *out = Box::into_raw(Box::new(PktConstraints(set)));
        Ok(())
    })
}

/// Box `lower[i] <= θ_i <= upper[i]` on the first `len` coordinates
/// (alphabet size `len + 1`).
#[no_mangle]
pub unsafe extern "C" fn pkt_constraints_box(
    lower: *const f64,
    upper: *const f64,
    len: usize,
    out: *mut *mut PktConstraints,
) -> PktStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let lo = input_slice(lower, len, "lower")?.to_vec();
        let hi = input_slice(upper, len, "upper")?.to_vec();
        let set = ConstraintSet::boxed(lo, hi)?;
        *out = Box::into_raw(Box::new(PktConstraints(set)));
        Ok(())
    })
}

/// Parses a constraint configuration text (NUL-terminated UTF-8).
#[no_mangle]
pub unsafe extern "C" fn pkt_constraints_parse(text: *const c_char, out: *mut *mut PktConstraints) -> PktStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Failure(PktStatus::Parse, format!("configuration is not UTF-8: {e}")))?;
        let set: ConstraintSet = text.parse()?;
        *out = Box::into_raw(Box::new(PktConstraints(set)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pkt_constraints_alphabet_size(c: *const PktConstraints, out: *mut usize) -> PktStatus {
    guard(|| {
        *out_ref(out, "out")? = handle(c)?.0.alphabet_size();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pkt_constraints_free(c: *mut PktConstraints) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// `Dir(S; α)` with its standard error and natural logarithm.
/// `cfg` may be null for defaults; any out pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn pkt_dirichlet_measure(
    c: *const PktConstraints,
    cfg: *const PktConfig,
    alpha: *const f64,
    len: usize,
    value: *mut f64,
    std_error: *mut f64,
    log_value: *mut f64,
) -> PktStatus {
    guard(|| {
        let set = &handle(c)?.0;
        let cfg = config(cfg)?;
        let params = DirichletParams::new(input_slice(alpha, len, "alpha")?.to_vec())?;
        let est = dirichlet_measure(set, &params, &cfg)?;
        if let Some(v) = value.as_mut() {
            *v = est.value();
        }
        if let Some(v) = std_error.as_mut() {
            *v = est.std_error;
        }
        if let Some(v) = log_value.as_mut() {
            *v = est.log_value;
        }
        Ok(())
    })
}

/// New estimator with no observations; `cfg` may be null.
#[no_mangle]
pub unsafe extern "C" fn pkt_estimator_new(
    c: *const PktConstraints,
    cfg: *const PktConfig,
    seed: u64,
    out: *mut *mut PktEstimator,
) -> PktStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let set = handle(c)?.0.clone();
        let state = EstimatorState::new(set, config(cfg)?, seed)?;
        *out = Box::into_raw(Box::new(PktEstimator(state)));
        Ok(())
    })
}

/// Writes the next-symbol distribution into `probs[0..m]` and, when not
/// null, the standard errors into `std_errors[0..m]`.
#[no_mangle]
pub unsafe extern "C" fn pkt_estimator_predict(
    e: *const PktEstimator,
    probs: *mut f64,
    std_errors: *mut f64,
    m: usize,
) -> PktStatus {
    guard(|| {
        let state = &handle(e)?.0;
        let want = state.constraints().alphabet_size();
        if m != want {
            return Err(Error::DimensionMismatch { expected: want, got: m }.into());
        }
        if probs.is_null() {
            return Err(null("probs"));
        }
        let p = state.predict()?;
        slice::from_raw_parts_mut(probs, m).copy_from_slice(&p.probs);
        if !std_errors.is_null() {
            slice::from_raw_parts_mut(std_errors, m).copy_from_slice(&p.std_errors);
        }
        Ok(())
    })
}

/// Observes one symbol.
#[no_mangle]
pub unsafe extern "C" fn pkt_estimator_update(e: *mut PktEstimator, symbol: u32) -> PktStatus {
    guard(|| {
        let state = &mut e.as_mut().ok_or_else(|| null("handle"))?.0;
        state.update(symbol as usize)?;
        Ok(())
    })
}

/// Natural log of the mixture probability of everything observed so far.
#[no_mangle]
pub unsafe extern "C" fn pkt_estimator_log_mixture(e: *const PktEstimator, out: *mut f64) -> PktStatus {
    guard(|| {
        *out_ref(out, "out")? = handle(e)?.0.log_mixture();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pkt_estimator_free(e: *mut PktEstimator) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Compresses `n` symbols; the result must be released with [`pkt_buffer_free`].
#[no_mangle]
pub unsafe extern "C" fn pkt_encode(
    c: *const PktConstraints,
    cfg: *const PktConfig,
    symbols: *const u32,
    n: usize,
    seed: u64,
    out: *mut PktBuffer,
) -> PktStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let set = &handle(c)?.0;
        let cfg = config(cfg)?;
        let syms: Vec<usize> = input_slice(symbols, n, "symbols")?.iter().map(|&s| s as usize).collect();
        let buf = codec::encode(&syms, set, &cfg, seed)?;
        let mut boxed = buf.bytes.into_boxed_slice();
        *out = PktBuffer { data: boxed.as_mut_ptr(), len: boxed.len() };
        std::mem::forget(boxed);
        Ok(())
    })
}

/// Decompresses a stream produced by [`pkt_encode`] with the same
/// constraints and settings; release the result with [`pkt_symbols_free`].
#[no_mangle]
pub unsafe extern "C" fn pkt_decode(
    c: *const PktConstraints,
    cfg: *const PktConfig,
    bytes: *const u8,
    len: usize,
    out: *mut PktSymbols,
) -> PktStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let set = &handle(c)?.0;
        let cfg = config(cfg)?;
        let syms = codec::decode_bytes(input_slice(bytes, len, "bytes")?, set, &cfg)?;
        let mut boxed: Box<[u32]> = syms.into_iter().map(|s| s as u32).collect();
        *out = PktSymbols { data: boxed.as_mut_ptr(), len: boxed.len() };
        std::mem::forget(boxed);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pkt_buffer_free(buf: PktBuffer) {
    if !buf.data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(buf.data, buf.len)));
    }
}

#[no_mangle]
pub unsafe extern "C" fn pkt_symbols_free(buf: PktSymbols) {
    if !buf.data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(buf.data, buf.len)));
    }
}

/// Exact minimax (Shtarkov) redundancy in bits.
#[no_mangle]
pub unsafe extern "C" fn pkt_worst_case_exact(n: u64, c: *const PktConstraints, out: *mut f64) -> PktStatus {
    guard(|| {
        *out_ref(out, "out")? = redundancy::worst_case_exact(n, &handle(c)?.0)?;
        Ok(())
    })
}

/// Asymptotic worst-case redundancy in bits.
#[no_mangle]
pub unsafe extern "C" fn pkt_worst_case_asymptotic(
    n: u64,
    c: *const PktConstraints,
    cfg: *const PktConfig,
    out: *mut f64,
) -> PktStatus {
    guard(|| {
        *out_ref(out, "out")? = redundancy::worst_case_asymptotic(n, &handle(c)?.0, &config(cfg)?)?;
        Ok(())
    })
}

/// Asymptotic average-case redundancy in bits.
#[no_mangle]
pub unsafe extern "C" fn pkt_average_asymptotic(
    n: u64,
    c: *const PktConstraints,
    cfg: *const PktConfig,
    out: *mut f64,
) -> PktStatus {
    guard(|| {
        *out_ref(out, "out")? = redundancy::average_asymptotic(n, &handle(c)?.0, &config(cfg)?)?;
        Ok(())
    })
}

/// Exact average-case redundancy in bits; `std_error` may be null.
#[no_mangle]
pub unsafe extern "C" fn pkt_average_exact(
    n: u64,
    c: *const PktConstraints,
    cfg: *const PktConfig,
    out: *mut f64,
    std_error: *mut f64,
) -> PktStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let r = redundancy::average_exact(n, &handle(c)?.0, &config(cfg)?)?;
        *out = r.bits;
        if let Some(se) = std_error.as_mut() {
            *se = r.std_error_bits;
        }
        Ok(())
    })
}

//! C ABI over the `sonority` library.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `*_free`. Every fallible call returns a [`SonStatus`]; on failure
//! `son_last_error_message` describes the most recent error on the calling
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sonority::corpus::{self, Utterance};
use sonority::epoch::EpochTrain;
use sonority::pipeline::{self, ExtractConfig, UtteranceAnalysis};
use sonority::ztw::{HngdAnalyzer, HngdConfig};
use sonority::Error;

/// Number of values in one feature row (f1..f7).
pub const SON_FEATURE_DIMS: usize = 7;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SonStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    UnsupportedFormat = 4,
    TooShort = 5,
    OutOfBounds = 6,
    BufferTooSmall = 7,
    Numerical = 8,
    Panic = 9,
}

/// Audio at a known sampling rate.
pub struct SonUtterance(Utterance);

/// Strictly increasing epoch sample indices.
pub struct SonEpochs(EpochTrain);

/// Per-epoch raw features of one utterance.
pub struct SonFeatures(UtteranceAnalysis);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SonStatus {
    match err {
        Error::Io { .. } => SonStatus::Io,
        Error::UnsupportedFormat(_) | Error::UnsupportedRate(_) | Error::Wav(_) | Error::InvalidLabels(_) => {
            SonStatus::UnsupportedFormat
        }
        Error::EmptyAudio | Error::TooShort { .. } | Error::TooFewEpochs(_) => SonStatus::TooShort,
        Error::SegmentOutOfBounds { .. } => SonStatus::OutOfBounds,
        Error::SingularAutocorrelation
        | Error::TooFewPeaks(_)
        | Error::CoincidentPeakValley(_)
        | Error::ZeroPeak(_)
        | Error::ConstantDimension(_)
        | Error::DegenerateVariance { .. }
        | Error::SigmaBelowFloor(_) => SonStatus::Numerical,
        _ => SonStatus::InvalidArgument,
    }
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (SonStatus, String)>) -> SonStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SonStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SonStatus::Panic
        }
    }
}

fn lib<T>(r: sonority::Result<T>) -> Result<T, (SonStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SonStatus, String) {
    (SonStatus::NullPointer, format!("{what} is null"))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SonStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

fn analysis_rate(u: &Utterance) -> Result<(), (SonStatus, String)> {
    if u.fs == corpus::ANALYSIS_RATE {
        Ok(())
    } else {
        lib(Err(Error::UnsupportedRate(u.fs)))
    }
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), (SonStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn son_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn son_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy `len` samples at rate `fs` into a new utterance.
///
/// # Safety
/// `samples` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn son_utterance_from_samples(
    samples: *const f64,
    len: usize,
    fs: u32,
    out: *mut *mut SonUtterance,
) -> SonStatus {
    guard(|| {
        if samples.is_null() {
            return Err(null("samples"));
        }
        let v = std::slice::from_raw_parts(samples, len).to_vec();
        put(out, SonUtterance(lib(Utterance::new(v, fs))?))
    })
}

/// Read a WAV or SPHERE file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn son_utterance_load(path: *const c_char, out: *mut *mut SonUtterance) -> SonStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (SonStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        put(out, SonUtterance(lib(corpus::load_utterance(Path::new(p)))?))
    })
}

/// # Safety
/// `u` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn son_utterance_free(u: *mut SonUtterance) {
    if !u.is_null() {
        drop(Box::from_raw(u));
    }
}

/// Sample count, or 0 for a null handle.
///
/// # Safety
/// `u` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn son_utterance_len(u: *const SonUtterance) -> usize {
    u.as_ref().map_or(0, |u| u.0.len())
}

/// Sampling rate, or 0 for a null handle.
///
/// # Safety
/// `u` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn son_utterance_fs(u: *const SonUtterance) -> u32 {
    u.as_ref().map_or(0, |u| u.0.fs)
}

/// Convert `u` in place to the 8 kHz analysis rate.
///
/// # Safety
/// `u` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn son_utterance_resample_8k(u: *mut SonUtterance) -> SonStatus {
    guard(|| {
        let u = u.as_mut().ok_or_else(|| null("utterance"))?;
        u.0 = lib(corpus::resample_to_8k(u.0.clone()))?;
        Ok(())
    })
}

/// Detect and refine epochs with the default settings. The utterance must be
/// at 8 kHz.
///
/// # Safety
/// `u` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn son_detect_epochs(u: *const SonUtterance, out: *mut *mut SonEpochs) -> SonStatus {
    guard(|| {
        let u = get(u, "utterance")?;
        analysis_rate(&u.0)?;
        let (e, _) = lib(pipeline::detect(&u.0, &ExtractConfig::default()))?;
        put(out, SonEpochs(e))
    })
}

/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn son_epochs_len(e: *const SonEpochs) -> usize {
    e.as_ref().map_or(0, |e| e.0.len())
}

/// Sample index of epoch `i`.
///
/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn son_epochs_get(e: *const SonEpochs, i: usize, out: *mut usize) -> SonStatus {
    guard(|| {
        let e = get(e, "epochs")?;
        let &v =
            e.0.indices()
                .get(i)
                .ok_or_else(|| (SonStatus::OutOfBounds, format!("epoch {i} of {}", e.0.len())))?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = v;
        Ok(())
    })
}

/// # Safety
/// `e` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn son_epochs_free(e: *mut SonEpochs) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// HNGD spectrum at sample `epoch` with the default window and FFT size.
/// Writes `nfft/2 + 1` magnitudes to `buf`; `written` receives the count
/// needed even when the buffer is too small.
///
/// # Safety
/// `u` must be a live handle; `buf` must hold `cap` doubles; `written` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn son_hngd_at_epoch(
    u: *const SonUtterance,
    epoch: usize,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> SonStatus {
    guard(|| {
        let u = get(u, "utterance")?;
        if written.is_null() {
            return Err(null("written"));
        }
        let analyzer = lib(HngdAnalyzer::new(u.0.fs, &HngdConfig::default()))?;
        let spec = lib(analyzer.spectrum_at(&u.0.samples, epoch))?;
        let m = &spec.magnitudes;
        *written = m.len();
        if buf.is_null() || cap < m.len() {
            return Err((
                SonStatus::BufferTooSmall,
                format!("need {} values, have {cap}", m.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, m.len()).copy_from_slice(m);
        Ok(())
    })
}

/// Raw f1..f7 at every usable epoch, with default settings. The utterance
/// must be at 8 kHz.
///
/// # Safety
/// `u` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn son_extract_features(u: *const SonUtterance, out: *mut *mut SonFeatures) -> SonStatus {
    guard(|| {
        let u = get(u, "utterance")?;
        analysis_rate(&u.0)?;
        let a = lib(pipeline::analyze_utterance(&u.0, &ExtractConfig::default()))?;
        put(out, SonFeatures(a))
    })
}

/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn son_features_len(f: *const SonFeatures) -> usize {
    f.as_ref().map_or(0, |f| f.0.rows.len())
}

/// Row `i`: epoch sample, `SON_FEATURE_DIMS` raw values (NaN where not
/// measurable) and whether every value is usable.
///
/// # Safety
/// `f` must be a live handle; `values` must hold `SON_FEATURE_DIMS` doubles;
/// `epoch` and `valid` must be writable.
#[no_mangle]
pub unsafe extern "C" fn son_features_get(
    f: *const SonFeatures,
    i: usize,
    epoch: *mut usize,
    values: *mut f64,
    valid: *mut bool,
) -> SonStatus {
    guard(|| {
        let f = get(f, "features")?;
        let row =
            f.0.rows
                .get(i)
                .ok_or_else(|| (SonStatus::OutOfBounds, format!("row {i} of {}", f.0.rows.len())))?;
        if epoch.is_null() || values.is_null() || valid.is_null() {
            return Err(null("output pointer"));
        }
        *epoch = row.epoch_sample;
        std::slice::from_raw_parts_mut(values, SON_FEATURE_DIMS).copy_from_slice(&row.raw);
        *valid = row.valid;
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn son_features_free(f: *mut SonFeatures) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Symmetric divergence between two univariate Gaussians.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn son_kld_symmetric(mu1: f64, sigma1: f64, mu2: f64, sigma2: f64, out: *mut f64) -> SonStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = lib(sonority::fusion::kld_symmetric((mu1, sigma1), (mu2, sigma2)))?;
        Ok(())
    })
}

/// Fusion weights proportional to `n` positive average KLDs, written to `out`.
///
/// # Safety
/// `klds` must hold `n` readable doubles and `out` `n` writable ones.
#[no_mangle]
pub unsafe extern "C" fn son_compute_weights(klds: *const f64, n: usize, out: *mut f64) -> SonStatus {
    guard(|| {
        if klds.is_null() || out.is_null() {
            return Err(null("buffer"));
        }
        let k = std::slice::from_raw_parts(klds, n);
        let w = lib(sonority::fusion::compute_weights(k))?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&w.w);
        Ok(())
    })
}

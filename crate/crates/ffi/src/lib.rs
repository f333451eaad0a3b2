//! C ABI for `sigdrift`.
//!
//! Every fallible function returns an [`SdStatus`]. On failure a message is
//! kept per thread until the next call and can be read with
//! [`sd_last_error_message`]. Handles are opaque and must be released with
//! their `_free` function; strings returned through `out` parameters are
//! released with [`sd_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sigdrift::adaptation::FeedbackState;
use sigdrift::config::parse_config_text;
use sigdrift::cusum::{apply_action, cusum_chart, evaluate_event, CusumParams};
use sigdrift::detection::{detect_anomaly, evaluate_window, ThresholdState, Windowing};
use sigdrift::signature::{
    generate_signature, DayRange, QoSSeries, SegmentedSignature, TrialExperience,
};
use sigdrift::sim::{run_once, sweep, RunThresholds, SimConfig, SweepAxis};
use sigdrift::similarity::{similarity, SimilarityMeasure};
use sigdrift::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed input: bad UTF-8, unparsable text, unknown key.
    InvalidInput = 2,
    /// Well-formed input rejected by the pipeline.
    DomainError = 3,
    BufferTooSmall = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdMeasure {
    Euclidean = 0,
    Pearson = 1,
    Cosine = 2,
}

impl From<SdMeasure> for SimilarityMeasure {
    fn from(m: SdMeasure) -> Self {
        match m {
            SdMeasure::Euclidean => SimilarityMeasure::EuclideanDistance,
            SdMeasure::Pearson => SimilarityMeasure::PearsonCorrelation,
            SdMeasure::Cosine => SimilarityMeasure::CosineSimilarity,
        }
    }
}

/// Outcome of feeding one trial window to a detector.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SdWindowResult {
    pub anomaly_count: u32,
    pub event: bool,
    pub changed: bool,
    /// Anomaly threshold after feedback adjustment.
    pub f_thresh: u32,
}

/// Segmented signature.
pub struct SdSignature(SegmentedSignature);

/// Simulation configuration.
pub struct SdConfig(SimConfig);

/// Stateful event-condition-action loop over successive trial windows.
pub struct SdDetector {
    sig: SegmentedSignature,
    ts: ThresholdState,
    windowing: Windowing,
    feedback: FeedbackState,
    settings: sigdrift::cusum::CusumSettings,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = if e.is_input_error() {
            SdStatus::InvalidInput
        } else {
            SdStatus::DomainError
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T> = std::result::Result<T, Failure>;

fn null(what: &str) -> Failure {
    Failure(SdStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> SdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error: panic caught at FFI boundary".into());
            SdStatus::Internal
        }
    }
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SdStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

unsafe fn as_slice<'a>(p: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    let c = CString::new(s).map_err(|e| Failure(SdStatus::Internal, e.to_string()))?;
    write_out(out, c.into_raw(), "out")
}

/// Row-major `num_trials x trial_len` matrix into experiences starting at
/// `start_day`.
unsafe fn trials_from(
    values: *const f64,
    num_trials: usize,
    trial_len: usize,
    start_day: u32,
) -> FfiResult<Vec<TrialExperience>> {
    let total = num_trials
        .checked_mul(trial_len)
        .ok_or_else(|| Failure(SdStatus::InvalidInput, "trial matrix size overflows".into()))?;
    let flat = as_slice(values, total, "values")?;
    if trial_len == 0 {
        return Ok(Vec::new());
    }
    flat.chunks_exact(trial_len)
        .enumerate()
        .map(|(i, row)| {
            let series = QoSSeries::new("qos", start_day, row.to_vec())?;
            Ok(TrialExperience::new(format!("c{i:02}"), series))
        })
        .collect()
}

/// Error message from the most recent call on this thread, or null if that
/// call succeeded. Valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn sd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn sd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Generates a signature over `[start_day, start_day + trial_len)` from a
/// row-major matrix of `num_trials` trials.
///
/// # Safety
/// `values` must point to `num_trials * trial_len` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sd_signature_generate(
    values: *const f64,
    num_trials: usize,
    trial_len: usize,
    start_day: u32,
    out: *mut *mut SdSignature,
) -> SdStatus {
    guard(|| {
        let trials = trials_from(values, num_trials, trial_len, start_day)?;
        let end = start_day
            .checked_add(trial_len as u32)
            .ok_or_else(|| Failure(SdStatus::InvalidInput, "window end overflows".into()))?;
        let window = DayRange::new(start_day, end)?;
        let sig = generate_signature(&trials, window)?;
        write_out(out, Box::into_raw(Box::new(SdSignature(sig.into()))), "out")
    })
}

/// Parses a signature from JSON: one segment object or an array of segments.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sd_signature_from_json(
    json: *const c_char,
    out: *mut *mut SdSignature,
) -> SdStatus {
    guard(|| {
        let text = as_str(json, "json")?;
        let sig: SegmentedSignature = if text.trim_start().starts_with('[') {
            serde_json::from_str(text).map_err(Error::from)?
        } else {
            serde_json::from_str::<sigdrift::signature::Signature>(text)
                .map_err(Error::from)?
                .into()
        };
        write_out(out, Box::into_raw(Box::new(SdSignature(sig))), "out")
    })
}

/// Serializes a signature as a JSON array of segments.
///
/// # Safety
/// `sig` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sd_signature_to_json(
    sig: *const SdSignature,
    out: *mut *mut c_char,
) -> SdStatus {
    guard(|| {
        let sig = sig.as_ref().ok_or_else(|| null("sig"))?;
        write_string(out, serde_json::to_string(&sig.0).map_err(Error::from)?)
    })
}

/// Number of days the signature covers, or 0 for a null handle.
///
/// # Safety
/// `sig` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_signature_len(sig: *const SdSignature) -> usize {
    sig.as_ref().map_or(0, |s| s.0.range().len())
}

/// First day the signature covers, or 0 for a null handle.
///
/// # Safety
/// `sig` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_signature_start_day(sig: *const SdSignature) -> u32 {
    sig.as_ref().map_or(0, |s| s.0.range().start)
}

/// Copies the normalized values into `buf`. Fails with `BufferTooSmall` when
/// `cap` is under [`sd_signature_len`].
///
/// # Safety
/// `sig` must be a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn sd_signature_values(
    sig: *const SdSignature,
    buf: *mut f64,
    cap: usize,
) -> SdStatus {
    guard(|| {
        let sig = sig.as_ref().ok_or_else(|| null("sig"))?;
        let values = sig.0.values();
        if cap < values.len() {
            return Err(Failure(
                SdStatus::BufferTooSmall,
                format!("buffer holds {cap} values, need {}", values.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// # Safety
/// `sig` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sd_signature_free(sig: *mut SdSignature) {
    if !sig.is_null() {
        drop(Box::from_raw(sig));
    }
}

/// Scores one trial starting at `start_day` against the signature.
///
/// # Safety
/// `values` must hold `len` doubles; `sig` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sd_similarity(
    values: *const f64,
    len: usize,
    start_day: u32,
    sig: *const SdSignature,
    measure: SdMeasure,
    out: *mut f64,
) -> SdStatus {
    guard(|| {
        let sig = sig.as_ref().ok_or_else(|| null("sig"))?;
        let trials = trials_from(values, 1, len, start_day)?;
        let trial = trials
            .first()
            .ok_or_else(|| Failure(SdStatus::DomainError, Error::EmptyInput.to_string()))?;
        let score = similarity(trial, &sig.0, measure.into())?;
        write_out(out, score.value, "out")
    })
}

/// Runs the CUSUM chart over `x`. `ul` and `ll` receive `n` sums each and may
/// be null. `first_violation` receives the 1-based index of the first
/// violation, or 0 when there is none.
///
/// # Safety
/// `x` must hold `n` doubles; non-null `ul`/`ll` must hold `n` doubles.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sd_cusum_chart(
    x: *const f64,
    n: usize,
    target_mean: f64,
    target_std: f64,
    shift_n: f64,
    control_c: f64,
    ul: *mut f64,
    ll: *mut f64,
    first_violation: *mut usize,
) -> SdStatus {
    guard(|| {
        let xs = as_slice(x, n, "x")?;
        let params = CusumParams::new(target_mean, target_std, shift_n, control_c)?;
        let trace = cusum_chart(xs, &params)?;
        if !ul.is_null() {
            ptr::copy_nonoverlapping(trace.ul.as_ptr(), ul, trace.ul.len());
        }
        if !ll.is_null() {
            ptr::copy_nonoverlapping(trace.ll.as_ptr(), ll, trace.ll.len());
        }
        write_out(
            first_violation,
            trace.first_violation().unwrap_or(0),
            "first_violation",
        )
    })
}

/// Default simulation configuration.
#[no_mangle]
pub extern "C" fn sd_config_new() -> *mut SdConfig {
    Box::into_raw(Box::new(SdConfig(SimConfig::default())))
}

/// Applies `key=value` lines (file syntax) on top of the current values.
///
/// # Safety
/// `cfg` must be live; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sd_config_apply_text(cfg: *mut SdConfig, text: *const c_char) -> SdStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let assignments = parse_config_text(as_str(text, "text")?)?;
        let mut next = cfg.0.clone();
        next.apply(&assignments)?;
        cfg.0 = next;
        Ok(())
    })
}

/// Sets one key. The config is unchanged on failure.
///
/// # Safety
/// `cfg` must be live; `key` and `value` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sd_config_set(
    cfg: *mut SdConfig,
    key: *const c_char,
    value: *const c_char,
) -> SdStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let mut next = cfg.0.clone();
        next.set(as_str(key, "key")?, as_str(value, "value")?)?;
        cfg.0 = next;
        Ok(())
    })
}

/// Effective configuration as `key=value` lines.
///
/// # Safety
/// `cfg` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sd_config_to_text(
    cfg: *const SdConfig,
    out: *mut *mut c_char,
) -> SdStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        write_string(out, cfg.0.to_config_text())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sd_config_free(cfg: *mut SdConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs one simulation run and returns its log line as JSON.
///
/// # Safety
/// `cfg` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sd_run_once(
    cfg: *const SdConfig,
    run_id: u32,
    out: *mut *mut c_char,
) -> SdStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let outcome = run_once(&cfg.0, run_id, RunThresholds::from_config(&cfg.0))?;
        write_string(
            out,
            serde_json::to_string(&outcome.log).map_err(Error::from)?,
        )
    })
}

/// Sweeps `axis` ("similarity" or "anomaly") and returns the sweep CSV.
///
/// # Safety
/// `cfg` must be live; `axis` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sd_sweep_csv(
    cfg: *const SdConfig,
    axis: *const c_char,
    out: *mut *mut c_char,
) -> SdStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let axis: SweepAxis = as_str(axis, "axis")?.parse()?;
        write_string(out, sweep(&cfg.0, axis)?.to_csv())
    })
}

/// Creates a detector over a copy of `sig` with default CUSUM and feedback
/// settings. Window `w` covers days `[w * trial_days, (w + 1) * trial_days)`.
///
/// # Safety
/// `sig` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sd_detector_new(
    sig: *const SdSignature,
    trial_days: u32,
    t_s: f64,
    f_thresh: u32,
    measure: SdMeasure,
    out: *mut *mut SdDetector,
) -> SdStatus {
    guard(|| {
        let sig = sig.as_ref().ok_or_else(|| null("sig"))?;
        let defaults = SimConfig::default();
        let det = SdDetector {
            sig: sig.0.clone(),
            ts: ThresholdState::new(t_s, f_thresh, measure.into())?,
            windowing: Windowing::new(trial_days)?,
            feedback: FeedbackState::new(
                defaults.adaptation.horizon_days,
                defaults.adaptation.z,
                defaults.adaptation.polarity,
            )?,
            settings: defaults.cusum,
        };
        write_out(out, Box::into_raw(Box::new(det)), "out")
    })
}

/// Feeds one window of trials (row-major, `num_trials x trial_days`) through
/// event detection, the condition check and the action.
///
/// # Safety
/// `det` must be live; `values` must hold `num_trials * trial_days` doubles;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sd_detector_process_window(
    det: *mut SdDetector,
    window_id: u32,
    values: *const f64,
    num_trials: usize,
    out: *mut SdWindowResult,
) -> SdStatus {
    guard(|| {
        let det = det.as_mut().ok_or_else(|| null("det"))?;
        let window = det.windowing.range(window_id);
        let trials = trials_from(values, num_trials, window.len(), window.start)?;
        let mut result = SdWindowResult::default();
        for e in &trials {
            if detect_anomaly(e, window_id, &det.sig, &det.ts)?.is_some() {
                result.anomaly_count += 1;
            }
        }
        if let Some(event) = evaluate_window(window_id, &trials, &det.sig, &det.ts)? {
            result.event = true;
            let verdict = evaluate_event(&event, window, &det.sig, &det.settings)?;
            result.changed = verdict.changed;
            let next_sig = if verdict.changed {
                Some(apply_action(&det.sig, &verdict)?)
            } else {
                None
            };
            det.feedback.record_outcome(window.end, verdict.changed)?;
            if let Some(s) = next_sig {
                det.sig = s;
            }
            det.ts = det.feedback.adjust(&det.ts);
        }
        result.f_thresh = det.ts.f_thresh;
        write_out(out, result, "out")
    })
}

/// The detector's current signature as a new handle.
///
/// # Safety
/// `det` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sd_detector_signature(
    det: *const SdDetector,
    out: *mut *mut SdSignature,
) -> SdStatus {
    guard(|| {
        let det = det.as_ref().ok_or_else(|| null("det"))?;
        write_out(
            out,
            Box::into_raw(Box::new(SdSignature(det.sig.clone()))),
            "out",
        )
    })
}

/// # Safety
/// `det` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sd_detector_free(det: *mut SdDetector) {
    if !det.is_null() {
        drop(Box::from_raw(det));
    }
}

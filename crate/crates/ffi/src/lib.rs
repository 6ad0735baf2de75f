//! C ABI over the bustrace model, predictor and GTFS validator.
//!
//! Every fallible call returns a [`BtStatus`]. On failure the message is kept
//! per thread and can be read with [`bt_last_error`]. Objects cross the boundary
//! as opaque handles that the caller releases with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use bustrace::domain::FeatureTuple;
use bustrace::gtfs::{self, GtfsFeed, ValidationReport};
use bustrace::neuralnet::HeadMode;
use bustrace::predictor::{self, Model, PredictionRequest};
use bustrace::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BtStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument was rejected: bad length, non-finite value, wrong model mode, bad UTF-8.
    InvalidArgument = 2,
    /// Reading a file failed.
    Io = 3,
    /// The model blob is corrupt, truncated or of another format version.
    ModelFormat = 4,
    /// The GTFS feed could not be parsed.
    Gtfs = 5,
    /// The library panicked. This is a bug.
    Panic = 6,
}

/// A trained predictor loaded from a model file.
pub struct BtModel(Model);

/// A parsed GTFS feed.
pub struct BtFeed(GtfsFeed);

/// Findings of a GTFS validation run.
pub struct BtReport {
    report: ValidationReport,
    text: CString,
}

/// One `<lat, lon, speed>` reading: degrees, degrees, km/h.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BtTuple {
    pub lat: f64,
    pub lon: f64,
    pub speed: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("interior NULs were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(message));
}

fn status_of(err: &Error) -> BtStatus {
    match err {
        Error::Io { .. } | Error::StdIo(_) => BtStatus::Io,
        Error::ModelFormat(_) => BtStatus::ModelFormat,
        Error::MissingFile(_) | Error::Gtfs { .. } | Error::Zip(_) | Error::Csv(_) => BtStatus::Gtfs,
        _ => BtStatus::InvalidArgument,
    }
}

/// Run `body`, translating errors and panics into a status and a stored message.
fn guard(body: impl FnOnce() -> Result<(), (BtStatus, String)>) -> BtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => BtStatus::Ok,
        Ok(Err((status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {what}"));
            BtStatus::Panic
        }
    }
}

fn lib(err: Error) -> (BtStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (BtStatus, String) {
    (BtStatus::NullArgument, format!("`{name}` is null"))
}

fn invalid(message: impl Into<String>) -> (BtStatus, String) {
    (BtStatus::InvalidArgument, message.into())
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, (BtStatus, String)> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(Path::new(s))
}

unsafe fn window_arg(window: *const BtTuple, len: usize) -> Result<Vec<FeatureTuple>, (BtStatus, String)> {
    if window.is_null() {
        return Err(null("window"));
    }
    std::slice::from_raw_parts(window, len).iter().map(|t| FeatureTuple::new(t.lat, t.lon, t.speed).map_err(lib)).collect()
}

fn tuple_out(t: FeatureTuple) -> BtTuple {
    BtTuple { lat: t.lat, lon: t.lon, speed: t.sp }
}

/// Message of the last failed call on this thread, or null if none failed yet.
///
/// The string stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Load a model file written by `bustrace train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn bt_model_load(path: *const c_char, out: *mut *mut BtModel) -> BtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = path_arg(path)?;
        let blob = std::fs::read(path).map_err(|e| (BtStatus::Io, format!("{}: {e}", path.display())))?;
        let model = Model::from_bytes(&blob).map_err(lib)?;
        *out = Box::into_raw(Box::new(BtModel(model)));
        Ok(())
    })
}

/// Decode a model from an in-memory blob.
///
/// # Safety
/// `bytes` must point to `len` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_model_from_bytes(bytes: *const u8, len: usize, out: *mut *mut BtModel) -> BtStatus {
    guard(|| {
        if bytes.is_null() {
            return Err(null("bytes"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let model = Model::from_bytes(std::slice::from_raw_parts(bytes, len)).map_err(lib)?;
        *out = Box::into_raw(Box::new(BtModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from `bt_model_load` or `bt_model_from_bytes` and not be
/// freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bt_model_free(model: *mut BtModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of tuples a prediction window must hold, or 0 for a null handle.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bt_model_window_len(model: *const BtModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.window_len())
}

/// Whether the model also classifies stops.
///
/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bt_model_is_stop_mode(model: *const BtModel) -> bool {
    model.as_ref().is_some_and(|m| m.0.mode() == HeadMode::Stop)
}

/// Predict the reading that follows `window`.
///
/// # Safety
/// `window` must point to `len` tuples and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_predict_next(model: *const BtModel, window: *const BtTuple, len: usize, out: *mut BtTuple) -> BtStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let window = window_arg(window, len)?;
        *out = tuple_out(predictor::predict_next(&window, &model.0).map_err(lib)?);
        Ok(())
    })
}

/// Continue `window` for `steps` readings, feeding each prediction back in.
///
/// # Safety
/// `window` must point to `len` tuples and `out` to room for `steps` tuples.
#[no_mangle]
pub unsafe extern "C" fn bt_rollout(model: *const BtModel, window: *const BtTuple, len: usize, steps: usize, out: *mut BtTuple) -> BtStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let request = PredictionRequest { recent_window: window_arg(window, len)?, steps_ahead: steps };
        let trace = predictor::rollout(&request, &model.0).map_err(lib)?;
        let out = std::slice::from_raw_parts_mut(out, steps);
        for (slot, t) in out.iter_mut().zip(trace) {
            *slot = tuple_out(t);
        }
        Ok(())
    })
}

/// Predicted next position of a stop-mode model and the probability that it is a stop.
///
/// # Safety
/// `window` must point to `len` tuples; `location`, `probability` and `is_stop` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_predict_stop(
    model: *const BtModel,
    window: *const BtTuple,
    len: usize,
    location: *mut BtTuple,
    probability: *mut f64,
    is_stop: *mut bool,
) -> BtStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if location.is_null() || probability.is_null() || is_stop.is_null() {
            return Err(null("output"));
        }
        let window = window_arg(window, len)?;
        if window.len() != model.0.window_len() {
            return Err(invalid(format!("window holds {} tuples, the model expects {}", window.len(), model.0.window_len())));
        }
        let p = predictor::predict_stops(&[window.as_slice()], &model.0).map_err(lib)?[0];
        *location = tuple_out(p.location);
        *probability = p.probability;
        *is_stop = p.is_stop;
        Ok(())
    })
}

/// Parse a GTFS feed from a directory or a zip archive.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn bt_feed_load(path: *const c_char, out: *mut *mut BtFeed) -> BtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let feed = gtfs::parse_feed(path_arg(path)?).map_err(lib)?;
        *out = Box::into_raw(Box::new(BtFeed(feed)));
        Ok(())
    })
}

/// # Safety
/// `feed` must come from `bt_feed_load` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bt_feed_free(feed: *mut BtFeed) {
    if !feed.is_null() {
        drop(Box::from_raw(feed));
    }
}

/// Counts of the feed's tables, in file order: agency, stops, routes, trips, stop_times, calendar.
///
/// # Safety
/// `feed` must be a live handle and `counts` must point to room for 6 values.
#[no_mangle]
pub unsafe extern "C" fn bt_feed_counts(feed: *const BtFeed, counts: *mut usize) -> BtStatus {
    guard(|| {
        let feed = &feed.as_ref().ok_or_else(|| null("feed"))?.0;
        if counts.is_null() {
            return Err(null("counts"));
        }
        let values = [feed.agency.len(), feed.stops.len(), feed.routes.len(), feed.trips.len(), feed.stop_times.len(), feed.calendar.len()];
        std::slice::from_raw_parts_mut(counts, values.len()).copy_from_slice(&values);
        Ok(())
    })
}

/// Check a feed against the GTFS reference rules.
///
/// # Safety
/// `feed` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn bt_feed_validate(feed: *const BtFeed, out: *mut *mut BtReport) -> BtStatus {
    guard(|| {
        let feed = &feed.as_ref().ok_or_else(|| null("feed"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let report = gtfs::validate(feed);
        let text = CString::new(report.to_string().replace('\0', " ")).expect("interior NULs were replaced");
        *out = Box::into_raw(Box::new(BtReport { report, text }));
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bt_report_error_count(report: *const BtReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.error_count())
}

/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bt_report_warning_count(report: *const BtReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.warnings().count())
}

/// Whether any finding carries `rule`, e.g. `"FK_STOP"`.
///
/// # Safety
/// `report` must be a live handle or null and `rule` a NUL-terminated string or null.
#[no_mangle]
pub unsafe extern "C" fn bt_report_has_rule(report: *const BtReport, rule: *const c_char) -> bool {
    match (report.as_ref(), rule.is_null()) {
        (Some(r), false) => CStr::from_ptr(rule).to_str().is_ok_and(|rule| r.report.has_rule(rule)),
        _ => false,
    }
}

/// Printable report, one finding per line. Owned by the report handle.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bt_report_text(report: *const BtReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.text.as_ptr())
}

/// # Safety
/// `report` must come from `bt_feed_validate` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bt_report_free(report: *mut BtReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

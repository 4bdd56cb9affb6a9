//! C ABI over the `drauc` classifiers.
//!
//! Every function returns a [`DraucStatus`]; on failure a message is
//! available from [`drauc_last_error`] until the next call on the same
//! thread. Handles are opaque and must be released with the matching
//! `*_free` function. Strings returned by the library are released with
//! [`drauc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use drauc::data::{Label, LabeledDataset};
use drauc::experiments::{fit, FitOptions};
use drauc::metrics::{auc_labeled, TiePolicy};
use drauc::models::{HyperParams, ModelDocument, ModelKind};
use drauc::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DraucStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    EmptyClass = 4,
    SolverFailure = 5,
    Io = 6,
    Parse = 7,
    Config = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DraucModelKind {
    Svm = 0,
    DAuc = 1,
    DrAucF = 2,
    DrAucV = 3,
}

/// Enum arguments cross the ABI as plain integers so that an out-of-range
/// value from C is reported instead of being undefined behaviour.
fn model_kind(raw: i32) -> Result<ModelKind, (DraucStatus, String)> {
    Ok(match raw {
        x if x == DraucModelKind::Svm as i32 => ModelKind::Svm,
        x if x == DraucModelKind::DAuc as i32 => ModelKind::DAuc,
        x if x == DraucModelKind::DrAucF as i32 => ModelKind::DrAucF,
        x if x == DraucModelKind::DrAucV as i32 => ModelKind::DrAucV,
        _ => return Err((DraucStatus::InvalidArgument, format!("unknown model kind {raw}"))),
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DraucTiePolicy {
    CountAsSuccess = 0,
    HalfCredit = 1,
}

fn tie_policy(raw: i32) -> Result<TiePolicy, (DraucStatus, String)> {
    Ok(match raw {
        x if x == DraucTiePolicy::CountAsSuccess as i32 => TiePolicy::CountAsSuccess,
        x if x == DraucTiePolicy::HalfCredit as i32 => TiePolicy::HalfCredit,
        _ => return Err((DraucStatus::InvalidArgument, format!("unknown tie policy {raw}"))),
    })
}

/// Labeled feature matrix.
pub struct DraucDataset(LabeledDataset);

/// Trained model together with its standardizer.
pub struct DraucModel(ModelDocument);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> DraucStatus {
    match err {
        Error::Context { source, .. } => status_of(source),
        Error::Io { .. } => DraucStatus::Io,
        Error::Csv { .. } | Error::BadCell { .. } | Error::MissingLabelColumn(_) | Error::Json(_) => DraucStatus::Parse,
        Error::DimensionMismatch { .. } => DraucStatus::DimensionMismatch,
        Error::EmptyClass(_) => DraucStatus::EmptyClass,
        Error::Solver(_) | Error::NonFinite(_) => DraucStatus::SolverFailure,
        Error::Config(_) => DraucStatus::Config,
        _ => DraucStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (DraucStatus, String)>) -> DraucStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DraucStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DraucStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (DraucStatus, String)>;
}

impl<T> IntoFfi<T> for drauc::Result<T> {
    fn ffi(self) -> Result<T, (DraucStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (DraucStatus, String) {
    (DraucStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DraucStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (DraucStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (DraucStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn labels_from(raw: &[i8]) -> Result<Vec<Label>, (DraucStatus, String)> {
    raw.iter()
        .map(|&v| {
            Label::try_from(v).map_err(|_| (DraucStatus::InvalidArgument, format!("label {v} is neither 1 nor -1")))
        })
        .collect()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn drauc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a dataset from a row-major `n x d` matrix and `n` labels in
/// `{1, -1}`.
///
/// # Safety
/// `features` must point to `n * d` doubles and `labels` to `n` bytes.
#[no_mangle]
pub unsafe extern "C" fn drauc_dataset_new(
    features: *const f64,
    n: usize,
    d: usize,
    labels: *const i8,
    out: *mut *mut DraucDataset,
) -> DraucStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n.checked_mul(d).ok_or((DraucStatus::InvalidArgument, "n * d overflows".to_string()))?;
        let x = slice_arg(features, len, "features")?.to_vec();
        let y = labels_from(slice_arg(labels, n, "labels")?)?;
        let ds = LabeledDataset::from_flat(x, d, y).ffi()?;
        *out = Box::into_raw(Box::new(DraucDataset(ds)));
        Ok(())
    })
}

/// Loads a CSV file with a header row.
///
/// # Safety
/// String arguments must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn drauc_dataset_load_csv(
    path: *const c_char,
    label_column: *const c_char,
    positive_label: *const c_char,
    out: *mut *mut DraucDataset,
) -> DraucStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let label = str_arg(label_column, "label_column")?;
        let positive = str_arg(positive_label, "positive_label")?;
        let ds = drauc::data::load_csv(path.as_ref(), label, positive).ffi()?;
        *out = Box::into_raw(Box::new(DraucDataset(ds)));
        Ok(())
    })
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn drauc_dataset_len(ds: *const DraucDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// Number of features, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn drauc_dataset_dim(ds: *const DraucDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.dim())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn drauc_dataset_free(ds: *mut DraucDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Trains a model with default solver settings. `kind` is a
/// [`DraucModelKind`] value. `epsilon` must be 0 for the
/// non-robust kinds.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn drauc_model_train(
    ds: *const DraucDataset,
    kind: i32,
    c: f64,
    epsilon: f64,
    standardize: bool,
    out: *mut *mut DraucModel,
) -> DraucStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let opts = FitOptions {
            standardize,
            ..FitOptions::default()
        };
        let fitted = fit(model_kind(kind)?, &ds.0, &HyperParams::new(c, epsilon), &opts).ffi()?;
        *out = Box::into_raw(Box::new(DraucModel(fitted.into_document())));
        Ok(())
    })
}

/// Score of one raw feature vector of length `d`.
///
/// # Safety
/// `x` must point to `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn drauc_model_score(
    model: *const DraucModel,
    x: *const f64,
    d: usize,
    out: *mut f64,
) -> DraucStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let x = slice_arg(x, d, "x")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = model.0.score_raw(x).ffi()?;
        Ok(())
    })
}

/// AUC of the model on a dataset.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn drauc_model_auc(
    model: *const DraucModel,
    ds: *const DraucDataset,
    policy: i32,
    out: *mut f64,
) -> DraucStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let scores: Vec<f64> = ds.0.rows().map(|x| model.0.score_raw(x)).collect::<drauc::Result<_>>().ffi()?;
        *out = auc_labeled(&scores, ds.0.labels(), tie_policy(policy)?).ffi()?;
        Ok(())
    })
}

/// Copies up to `len` weights into `buf` and stores the model dimension in
/// `dim`. Pass a null `buf` to query the dimension only.
///
/// # Safety
/// `buf` must be null or hold `len` doubles; `dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn drauc_model_weights(
    model: *const DraucModel,
    buf: *mut f64,
    len: usize,
    dim: *mut usize,
) -> DraucStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let dim = dim.as_mut().ok_or_else(|| null("dim"))?;
        let w = &model.0.weights;
        *dim = w.len();
        if !buf.is_null() {
            let n = len.min(w.len());
            ptr::copy_nonoverlapping(w.as_ptr(), buf, n);
        }
        Ok(())
    })
}

/// Intercept of the model (0 except for the SVM).
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn drauc_model_intercept(model: *const DraucModel, out: *mut f64) -> DraucStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = model.0.intercept;
        Ok(())
    })
}

/// Serializes the model to JSON; release the string with
/// [`drauc_string_free`].
///
/// # Safety
/// `model` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn drauc_model_to_json(model: *const DraucModel, out: *mut *mut c_char) -> DraucStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = model.0.to_json().ffi()?;
        let c = CString::new(text).map_err(|_| (DraucStatus::Parse, "JSON contains NUL".to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// Reads a model from JSON produced by [`drauc_model_to_json`] or the CLI.
///
/// # Safety
/// `json` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn drauc_model_from_json(json: *const c_char, out: *mut *mut DraucModel) -> DraucStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let doc = ModelDocument::from_json(text).ffi()?;
        *out = Box::into_raw(Box::new(DraucModel(doc)));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn drauc_model_free(model: *mut DraucModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn drauc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// AUC of raw scores against labels in `{1, -1}`.
///
/// # Safety
/// `scores` and `labels` must each hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn drauc_auc(
    scores: *const f64,
    labels: *const i8,
    n: usize,
    policy: i32,
    out: *mut f64,
) -> DraucStatus {
    guard(|| {
        let s = slice_arg(scores, n, "scores")?;
        let y = labels_from(slice_arg(labels, n, "labels")?)?;
        *out.as_mut().ok_or_else(|| null("out"))? = auc_labeled(s, &y, tie_policy(policy)?).ffi()?;
        Ok(())
    })
}

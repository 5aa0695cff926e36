//! C ABI over the `gigvad` crate.
//!
//! Every fallible function returns a [`GigvadStatus`]; on failure the message
//! is available from [`gigvad_last_error`] on the same thread until the next
//! call. Models and datasets are opaque handles released with their `_free`
//! functions. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use gigvad::inference::{gaussian_smooth, roc_auc, score_video, ScoreConfig};
use gigvad::io::files::load_dataset;
use gigvad::io::Checkpoint;
use gigvad::training::{BackboneConfig, DatasetSpec};
use gigvad::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GigvadStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    CorruptCheckpoint = 4,
    Numeric = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Trained head loaded from a checkpoint.
pub struct GigvadModel {
    ckpt: Checkpoint,
}

/// Dataset descriptor loaded from a dataset file.
pub struct GigvadDataset {
    spec: DatasetSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: GigvadStatus, msg: impl Into<String>) -> GigvadStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> GigvadStatus {
    match e {
        Error::Io { .. } => GigvadStatus::Io,
        Error::CorruptCheckpoint(_) => GigvadStatus::CorruptCheckpoint,
        Error::NonFinite(_)
        | Error::Training { .. }
        | Error::Evaluation(_)
        | Error::UndefinedMetric(_) => GigvadStatus::Numeric,
        Error::Dimension(_) | Error::Config(_) | Error::Parse { .. } => GigvadStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), GigvadStatus>) -> GigvadStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GigvadStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(GigvadStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: gigvad::Result<T>) -> Result<T, GigvadStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, GigvadStatus> {
    if path.is_null() {
        return Err(fail(GigvadStatus::NullPointer, "path is null"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| fail(GigvadStatus::InvalidArgument, "path is not UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], GigvadStatus> {
    if p.is_null() {
        return Err(fail(GigvadStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, GigvadStatus> {
    // SAFETY: callers pass writable pointers per the function contracts.
    unsafe { p.as_mut() }.ok_or_else(|| fail(GigvadStatus::NullPointer, format!("{what} is null")))
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn gigvad_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gigvad_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a checkpoint into a new model handle.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gigvad_model_load(path: *const c_char, out: *mut *mut GigvadModel) -> GigvadStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = path_arg(path)?;
        let ckpt = lift(Checkpoint::load(&path))?;
        *out = Box::into_raw(Box::new(GigvadModel { ckpt }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`gigvad_model_load`] and not be freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn gigvad_model_free(model: *mut GigvadModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of anomaly classes `C`; scores have `1 + C` channels.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gigvad_model_classes(model: *const GigvadModel, out: *mut usize) -> GigvadStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| fail(GigvadStatus::NullPointer, "model is null"))?;
        *out_arg(out, "out")? = m.ckpt.classes();
        Ok(())
    })
}

/// Feature channel count `d` the model expects.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gigvad_model_channels(model: *const GigvadModel, out: *mut usize) -> GigvadStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| fail(GigvadStatus::NullPointer, "model is null"))?;
        *out_arg(out, "out")? = m.ckpt.channels();
        Ok(())
    })
}

/// Loads a dataset descriptor into a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gigvad_dataset_load(path: *const c_char, out: *mut *mut GigvadDataset) -> GigvadStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = path_arg(path)?;
        let spec = lift(load_dataset(&path))?;
        *out = Box::into_raw(Box::new(GigvadDataset { spec }));
        Ok(())
    })
}

/// # Safety
/// `dataset` must come from [`gigvad_dataset_load`] and not be freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn gigvad_dataset_free(dataset: *mut GigvadDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of videos in the dataset.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gigvad_dataset_len(dataset: *const GigvadDataset, out: *mut usize) -> GigvadStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or_else(|| fail(GigvadStatus::NullPointer, "dataset is null"))?;
        *out_arg(out, "out")? = d.spec.len();
        Ok(())
    })
}

/// Frame count of the video at position `index` (file order).
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gigvad_dataset_frames(
    dataset: *const GigvadDataset,
    index: usize,
    out: *mut usize,
) -> GigvadStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or_else(|| fail(GigvadStatus::NullPointer, "dataset is null"))?;
        let v = d
            .spec
            .videos
            .get(index)
            .ok_or_else(|| fail(GigvadStatus::InvalidArgument, format!("no video at index {index}")))?;
        *out_arg(out, "out")? = v.frame_count;
        Ok(())
    })
}

/// Scores every frame of the video at position `index` with the default
/// window protocol and a 4x4 feature grid. Writes `frames * (1 + C)` values,
/// row-major by frame, into `out`. `written` receives the required length;
/// if `capacity` is smaller, nothing is written and `BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// Handles must be live; `out` must hold `capacity` doubles; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gigvad_score_video(
    model: *const GigvadModel,
    dataset: *const GigvadDataset,
    index: usize,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> GigvadStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| fail(GigvadStatus::NullPointer, "model is null"))?;
        let d = dataset.as_ref().ok_or_else(|| fail(GigvadStatus::NullPointer, "dataset is null"))?;
        let written = out_arg(written, "written")?;
        *written = 0;
        let video = d
            .spec
            .videos
            .get(index)
            .ok_or_else(|| fail(GigvadStatus::InvalidArgument, format!("no video at index {index}")))?;
        let backbone = BackboneConfig {
            channels: m.ckpt.channels(),
            ..BackboneConfig::default()
        };
        let cfg = ScoreConfig::new(m.ckpt.k, backbone);
        let series = lift(score_video(video, &m.ckpt.params, d.spec.seed, &cfg))?;
        let need = series.frames() * series.channels();
        *written = need;
        if capacity < need {
            return Err(fail(
                GigvadStatus::BufferTooSmall,
                format!("need {need} doubles, buffer holds {capacity}"),
            ));
        }
        if out.is_null() {
            return Err(fail(GigvadStatus::NullPointer, "out is null"));
        }
        let dst = std::slice::from_raw_parts_mut(out, need);
        for f in 0..series.frames() {
            let c = series.channels();
            dst[f * c..(f + 1) * c].copy_from_slice(series.frame(f));
        }
        Ok(())
    })
}

/// Frame-level ROC AUC; `labels[i]` nonzero marks a positive.
///
/// # Safety
/// `scores` and `labels` must each hold `len` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gigvad_roc_auc(
    scores: *const f64,
    labels: *const u8,
    len: usize,
    out: *mut f64,
) -> GigvadStatus {
    guard(|| {
        let s = slice_arg(scores, len, "scores")?;
        let l: Vec<bool> = slice_arg(labels, len, "labels")?.iter().map(|&b| b != 0).collect();
        *out_arg(out, "out")? = lift(roc_auc(s, &l))?;
        Ok(())
    })
}

/// Gaussian smoothing with reflect padding; `input` and `out` hold `len` doubles
/// and may not overlap.
///
/// # Safety
/// `input` must hold `len` doubles and `out` must have room for `len`.
#[no_mangle]
pub unsafe extern "C" fn gigvad_gaussian_smooth(
    input: *const f64,
    len: usize,
    sigma: f64,
    out: *mut f64,
) -> GigvadStatus {
    guard(|| {
        let x = slice_arg(input, len, "input")?;
        if out.is_null() {
            return Err(fail(GigvadStatus::NullPointer, "out is null"));
        }
        let y = lift(gaussian_smooth(x, sigma))?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&y);
        Ok(())
    })
}

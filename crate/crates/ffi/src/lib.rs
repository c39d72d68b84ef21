//! C ABI for the assistive-signals toolkit.
//!
//! Handles are opaque pointers created and destroyed by this library; images
//! cross the boundary as caller-owned `double` buffers of length
//! `height * width * 3` (row-major, channel-last, values in `[0, 1]`).
//! Every fallible call returns an [`AsigStatus`] code and stores a message
//! retrievable with [`asig_last_error`]. The generated header lives at
//! `include/assistive_signals.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use assistive_signals::classifiers::{load_checkpoint, DifferentiableClassifier, ReferenceCnn};
use assistive_signals::error::Error;
use assistive_signals::experiment::{run_experiment, CliOverrides};
use assistive_signals::image::Image;
use assistive_signals::prob::{LossSpec, OptimConfig};
use assistive_signals::signals2d::{fgsm_attack, harden_image, pgd_attack};

/// Status codes returned by every fallible call. Mirrors the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsigStatus {
    Ok = 0,
    /// Invalid arguments: null pointers, bad sizes, bad config.
    Usage = 2,
    /// Malformed input files (checkpoints, meshes, images).
    Format = 3,
    /// Everything else that failed at runtime.
    Runtime = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: Vec<u8> = msg.bytes().filter(|&b| b != 0).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> AsigStatus {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Index(_) | Error::Bounds(_)
        | Error::Precondition(_) | Error::Dimension(_) => AsigStatus::Usage,
        Error::Format(_) => AsigStatus::Format,
        _ => AsigStatus::Runtime,
    }
}

fn fail(err: &Error) -> AsigStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn guard(body: impl FnOnce() -> AsigStatus) -> AsigStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            AsigStatus::Runtime
        }
    }
}

/// An opaque classifier handle.
pub struct AsigClassifier {
    model: ReferenceCnn,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn asig_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the last error message (UTF-8) into `buf`. Returns the full message
/// length; when it exceeds `cap - 1` the copy is truncated. `buf` may be
/// null to query the length.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn asig_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

unsafe fn cstr_path<'a>(ptr: *const c_char) -> Option<&'a Path> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok().map(Path::new)
}

/// Load a reference-CNN checkpoint. On success stores the handle in `out`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn asig_classifier_load(
    path: *const c_char,
    out: *mut *mut AsigClassifier,
) -> AsigStatus {
    guard(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return AsigStatus::Usage;
        }
        let Some(path) = cstr_path(path) else {
            set_error("path is null or not utf-8");
            return AsigStatus::Usage;
        };
        match load_checkpoint(path) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(AsigClassifier { model }));
                AsigStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Destroy a classifier handle. Null is a no-op.
///
/// # Safety
/// `handle` must have come from [`asig_classifier_load`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn asig_classifier_free(handle: *mut AsigClassifier) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of classes, or 0 for a null handle.
///
/// # Safety
/// `handle` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn asig_classifier_num_classes(handle: *const AsigClassifier) -> usize {
    handle.as_ref().map(|h| h.model.num_classes()).unwrap_or(0)
}

/// Expected input height, or 0 for a null handle.
///
/// # Safety
/// `handle` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn asig_classifier_input_height(handle: *const AsigClassifier) -> usize {
    handle.as_ref().map(|h| h.model.input_shape().0).unwrap_or(0)
}

/// Expected input width, or 0 for a null handle.
///
/// # Safety
/// `handle` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn asig_classifier_input_width(handle: *const AsigClassifier) -> usize {
    handle.as_ref().map(|h| h.model.input_shape().1).unwrap_or(0)
}

unsafe fn image_from_raw(pixels: *const f64, height: usize, width: usize) -> Result<Image, Error> {
    if pixels.is_null() {
        return Err(Error::Domain("pixel buffer is null".into()));
    }
    let data = std::slice::from_raw_parts(pixels, height * width * 3).to_vec();
    Image::from_vec_clipped(height, width, data)
}

/// Classify one image; writes `num_classes` probabilities into `out_probs`.
///
/// # Safety
/// `pixels` must hold `height * width * 3` doubles and `out_probs` must have
/// room for `num_classes` doubles.
#[no_mangle]
pub unsafe extern "C" fn asig_classifier_predict(
    handle: *const AsigClassifier,
    pixels: *const f64,
    height: usize,
    width: usize,
    out_probs: *mut f64,
    num_classes: usize,
) -> AsigStatus {
    guard(|| {
        let Some(h) = handle.as_ref() else {
            set_error("classifier handle is null");
            return AsigStatus::Usage;
        };
        if out_probs.is_null() || num_classes != h.model.num_classes() {
            set_error("bad output buffer or class count");
            return AsigStatus::Usage;
        }
        let img = match image_from_raw(pixels, height, width) {
            Ok(i) => i,
            Err(e) => return fail(&e),
        };
        match h.model.predict_probs(std::slice::from_ref(&img)) {
            Ok(probs) => {
                for (i, &p) in probs[0].values().iter().enumerate() {
                    *out_probs.add(i) = p;
                }
                AsigStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Gradient of the cross-entropy to `target_label` with respect to the
/// input; writes `height * width * 3` doubles into `out_grad`.
///
/// # Safety
/// Buffer contracts as in [`asig_classifier_predict`].
#[no_mangle]
pub unsafe extern "C" fn asig_classifier_input_gradient(
    handle: *const AsigClassifier,
    pixels: *const f64,
    height: usize,
    width: usize,
    target_label: usize,
    out_grad: *mut f64,
) -> AsigStatus {
    guard(|| {
        let Some(h) = handle.as_ref() else {
            set_error("classifier handle is null");
            return AsigStatus::Usage;
        };
        if out_grad.is_null() {
            set_error("gradient buffer is null");
            return AsigStatus::Usage;
        }
        let img = match image_from_raw(pixels, height, width) {
            Ok(i) => i,
            Err(e) => return fail(&e),
        };
        match h
            .model
            .input_gradient(std::slice::from_ref(&img), &LossSpec::assistive(target_label))
        {
            Ok(grads) => {
                for (i, &g) in grads[0].data.iter().enumerate() {
                    *out_grad.add(i) = g;
                }
                AsigStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

unsafe fn write_back(pixels: *mut f64, img: &Image) {
    for (i, &v) in img.values().iter().enumerate() {
        *pixels.add(i) = v;
    }
}

/// FGSM attack in place: `pixels <- clip(pixels + eps * sign(grad))`.
///
/// # Safety
/// `pixels` must hold `height * width * 3` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn asig_fgsm(
    handle: *const AsigClassifier,
    pixels: *mut f64,
    height: usize,
    width: usize,
    true_label: usize,
    epsilon: f64,
) -> AsigStatus {
    guard(|| {
        let Some(h) = handle.as_ref() else {
            set_error("classifier handle is null");
            return AsigStatus::Usage;
        };
        let img = match image_from_raw(pixels, height, width) {
            Ok(i) => i,
            Err(e) => return fail(&e),
        };
        match fgsm_attack(&h.model, &img, true_label, epsilon) {
            Ok(out) => {
                write_back(pixels, &out);
                AsigStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// PGD attack in place.
///
/// # Safety
/// As [`asig_fgsm`].
#[no_mangle]
pub unsafe extern "C" fn asig_pgd(
    handle: *const AsigClassifier,
    pixels: *mut f64,
    height: usize,
    width: usize,
    true_label: usize,
    epsilon: f64,
    step_size: f64,
    steps: usize,
) -> AsigStatus {
    guard(|| {
        let Some(h) = handle.as_ref() else {
            set_error("classifier handle is null");
            return AsigStatus::Usage;
        };
        let img = match image_from_raw(pixels, height, width) {
            Ok(i) => i,
            Err(e) => return fail(&e),
        };
        match pgd_attack(&h.model, &img, true_label, epsilon, step_size, steps) {
            Ok(out) => {
                write_back(pixels, &out);
                AsigStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Assistive hardening in place: iterative descent on the cross-entropy to
/// `true_label`. Pass `epsilon < 0` for an unconstrained run.
///
/// # Safety
/// As [`asig_fgsm`].
#[no_mangle]
pub unsafe extern "C" fn asig_harden(
    handle: *const AsigClassifier,
    pixels: *mut f64,
    height: usize,
    width: usize,
    true_label: usize,
    step_size: f64,
    iterations: usize,
    use_sign_gradient: bool,
    epsilon: f64,
) -> AsigStatus {
    guard(|| {
        let Some(h) = handle.as_ref() else {
            set_error("classifier handle is null");
            return AsigStatus::Usage;
        };
        let img = match image_from_raw(pixels, height, width) {
            Ok(i) => i,
            Err(e) => return fail(&e),
        };
        let cfg = OptimConfig {
            step_size,
            iterations,
            epsilon: if epsilon < 0.0 { None } else { Some(epsilon) },
            use_sign_gradient,
            seed: 0,
        };
        match harden_image(&h.model, &img, true_label, &cfg) {
            Ok(out) => {
                write_back(pixels, &out.image);
                AsigStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Run a full experiment from a TOML config file, writing a run directory
/// under `out_dir`. When `run_dir_buf` is non-null the created directory
/// path is copied into it (truncated to `cap - 1` bytes, NUL-terminated).
/// `seed_override < 0` keeps the config's seed.
///
/// # Safety
/// `config_path` and `out_dir` must be valid NUL-terminated strings;
/// `run_dir_buf` must be null or hold `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn asig_run_experiment(
    config_path: *const c_char,
    out_dir: *const c_char,
    seed_override: i64,
    deceptive: bool,
    run_dir_buf: *mut c_char,
    cap: usize,
) -> AsigStatus {
    guard(|| {
        let Some(config_path) = cstr_path(config_path) else {
            set_error("config path is null or not utf-8");
            return AsigStatus::Usage;
        };
        let Some(out_dir) = cstr_path(out_dir) else {
            set_error("out dir is null or not utf-8");
            return AsigStatus::Usage;
        };
        let text = match std::fs::read_to_string(config_path) {
            Ok(t) => t,
            Err(e) => {
                set_error(&format!("{}: {e}", config_path.display()));
                return AsigStatus::Usage;
            }
        };
        let overrides = CliOverrides {
            seed: u64::try_from(seed_override).ok(),
            out_dir: PathBuf::from(out_dir),
            deceptive,
        };
        match run_experiment(&text, None, &overrides) {
            Ok((_, dir)) => {
                if !run_dir_buf.is_null() && cap > 0 {
                    let bytes = dir.to_string_lossy().into_owned().into_bytes();
                    let n = bytes.len().min(cap - 1);
                    std::ptr::copy_nonoverlapping(bytes.as_ptr(), run_dir_buf as *mut u8, n);
                    *run_dir_buf.add(n) = 0;
                }
                AsigStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

//! C ABI for the pipeline: opaque dataset handles, integer status codes,
//! and a thread-local last-error message.
//!
//! Conventions, mirrored in `include/affect.h`:
//!
//! * every fallible call returns `AFFECT_OK` (0) or a negative status;
//!   on failure `affect_last_error_message()` describes the problem for
//!   the calling thread;
//! * out-parameters are written only on success;
//! * strings returned through `char **` are owned by the caller and must
//!   be released with `affect_string_free`;
//! * `AffectDataset` handles must be released with `affect_dataset_free`.
//!
//! The committed header is the source of truth for consumers; it can be
//! regenerated with cbindgen (see `cbindgen.toml`).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use affect_core::config::RunConfig;
use affect_core::dataset::synthetic::{generate_synthetic, SyntheticConfig};
use affect_core::dataset::{RatingRecord, Recording};
use affect_core::error::{Error, ErrorCategory};
use affect_core::eval::{make_folds, run_experiment, ReportFile};

pub const AFFECT_OK: i32 = 0;
pub const AFFECT_ERR_IO: i32 = -1;
pub const AFFECT_ERR_VALIDATION: i32 = -2;
pub const AFFECT_ERR_MISSING_INPUT: i32 = -3;
pub const AFFECT_ERR_NUMERICAL: i32 = -4;
pub const AFFECT_ERR_NULL_ARGUMENT: i32 = -5;
pub const AFFECT_ERR_INVALID_UTF8: i32 = -6;
pub const AFFECT_ERR_PANIC: i32 = -7;

/// Opaque collection of recordings and their ratings.
pub struct AffectDataset {
    pairs: Vec<(Recording, RatingRecord)>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized: String = message.chars().filter(|c| *c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> i32 {
    match err.category() {
        ErrorCategory::Validation => AFFECT_ERR_VALIDATION,
        ErrorCategory::MissingInput => AFFECT_ERR_MISSING_INPUT,
        ErrorCategory::Numerical => AFFECT_ERR_NUMERICAL,
        ErrorCategory::Io => AFFECT_ERR_IO,
    }
}

fn report_error(err: Error) -> i32 {
    set_last_error(&err.to_string());
    status_of(&err)
}

/// Run a closure, translating panics and errors into status codes.
fn guarded(f: impl FnOnce() -> Result<(), i32>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AFFECT_OK,
        Ok(Err(status)) => status,
        Err(_) => {
            set_last_error("internal panic");
            AFFECT_ERR_PANIC
        }
    }
}

/// # Safety
/// `ptr` must be a valid NUL-terminated string or the call fails cleanly.
unsafe fn utf8_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, i32> {
    if ptr.is_null() {
        set_last_error(&format!("{what} is NULL"));
        return Err(AFFECT_ERR_NULL_ARGUMENT);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(s),
        Err(_) => {
            set_last_error(&format!("{what} is not valid UTF-8"));
            Err(AFFECT_ERR_INVALID_UTF8)
        }
    }
}

fn require_out<T>(ptr: *mut T, what: &str) -> Result<(), i32> {
    if ptr.is_null() {
        set_last_error(&format!("{what} is NULL"));
        Err(AFFECT_ERR_NULL_ARGUMENT)
    } else {
        Ok(())
    }
}

fn dataset_ref<'a>(ptr: *const AffectDataset) -> Result<&'a AffectDataset, i32> {
    if ptr.is_null() {
        set_last_error("dataset handle is NULL");
        return Err(AFFECT_ERR_NULL_ARGUMENT);
    }
    Ok(unsafe { &*ptr })
}

/// Library version as a static string; never freed.
#[no_mangle]
pub extern "C" fn affect_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread. Valid until the
/// next failing call on the same thread; never freed by the caller.
#[no_mangle]
pub extern "C" fn affect_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Binarize a self-assessment rating: strictly above 4.5 is high.
/// Writes 1 for high, 0 for low.
#[no_mangle]
pub extern "C" fn affect_binarize(rating: f64, out_is_high: *mut i32) -> i32 {
    guarded(|| {
        require_out(out_is_high, "out_is_high")?;
        let label = affect_core::dataset::binarize(rating).map_err(report_error)?;
        unsafe { *out_is_high = label.is_high() as i32 };
        Ok(())
    })
}

/// Generate a synthetic dataset. `config_toml` holds the generator
/// config (the `[dataset.synthetic]` table body, e.g. "participants = 8");
/// pass an empty string for the defaults.
///
/// # Safety
/// `config_toml` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn affect_dataset_generate(
    config_toml: *const c_char,
    seed: u64,
    out: *mut *mut AffectDataset,
) -> i32 {
    guarded(|| {
        require_out(out, "out")?;
        let text = unsafe { utf8_arg(config_toml, "config_toml") }?;
        let cfg: SyntheticConfig = toml::from_str(text)
            .map_err(|e| report_error(Error::Config(e.to_string())))?;
        let pairs = generate_synthetic(&cfg, seed).map_err(report_error)?;
        unsafe { *out = Box::into_raw(Box::new(AffectDataset { pairs })) };
        Ok(())
    })
}

/// Load a dataset directory through its manifest.
///
/// # Safety
/// `manifest_path` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn affect_dataset_load(
    manifest_path: *const c_char,
    out: *mut *mut AffectDataset,
) -> i32 {
    guarded(|| {
        require_out(out, "out")?;
        let path = unsafe { utf8_arg(manifest_path, "manifest_path") }?;
        let pairs =
            affect_core::dataset::io::load_dataset(Path::new(path)).map_err(report_error)?;
        unsafe { *out = Box::into_raw(Box::new(AffectDataset { pairs })) };
        Ok(())
    })
}

/// Write a dataset to a directory in the manifest layout.
///
/// # Safety
/// `dataset` must be a live handle from this library; `dir` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn affect_dataset_save(
    dataset: *const AffectDataset,
    dir: *const c_char,
) -> i32 {
    guarded(|| {
        let ds = dataset_ref(dataset)?;
        let dir = unsafe { utf8_arg(dir, "dir") }?;
        affect_core::dataset::io::save_dataset(&PathBuf::from(dir), &ds.pairs)
            .map_err(report_error)?;
        Ok(())
    })
}

/// Number of (recording, rating) pairs in the dataset.
///
/// # Safety
/// `dataset` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn affect_dataset_len(
    dataset: *const AffectDataset,
    out_trials: *mut usize,
) -> i32 {
    guarded(|| {
        let ds = dataset_ref(dataset)?;
        require_out(out_trials, "out_trials")?;
        unsafe { *out_trials = ds.pairs.len() };
        Ok(())
    })
}

/// Release a dataset handle. NULL is a no-op.
///
/// # Safety
/// `dataset` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn affect_dataset_free(dataset: *mut AffectDataset) {
    if !dataset.is_null() {
        drop(unsafe { Box::from_raw(dataset) });
    }
}

/// Run the cross-validated experiment grid described by a full run
/// config (TOML; its `[dataset]` section is ignored in favor of the
/// handle). On success writes a JSON report string to `out_report_json`.
///
/// # Safety
/// `dataset` must be a live handle; `run_config_toml` NUL-terminated;
/// `out_report_json` valid. Free the result with `affect_string_free`.
#[no_mangle]
pub unsafe extern "C" fn affect_run_experiment(
    dataset: *const AffectDataset,
    run_config_toml: *const c_char,
    out_report_json: *mut *mut c_char,
) -> i32 {
    guarded(|| {
        let ds = dataset_ref(dataset)?;
        require_out(out_report_json, "out_report_json")?;
        let text = unsafe { utf8_arg(run_config_toml, "run_config_toml") }?;
        let cfg = RunConfig::from_toml_str(text).map_err(report_error)?;
        let exp = cfg.to_experiment_config().map_err(report_error)?;
        let report = run_experiment(&ds.pairs, &exp).map_err(report_error)?;
        let file = ReportFile {
            config_hash: cfg.hash(),
            seed: report.seed,
            class_priors: report.class_priors.clone(),
            fold_plan: report.fold_plan.clone(),
            cells: report.cells.clone(),
        };
        let json = serde_json::to_string_pretty(&file)
            .map_err(|e| report_error(Error::Config(e.to_string())))?;
        let c = CString::new(json).map_err(|_| {
            set_last_error("report contained an interior NUL byte");
            AFFECT_ERR_PANIC
        })?;
        unsafe { *out_report_json = c.into_raw() };
        Ok(())
    })
}

/// Check that the dataset folds into `k` equal participant groups; this
/// is the precondition `affect_run_experiment` enforces.
///
/// # Safety
/// `dataset` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn affect_dataset_check_folds(
    dataset: *const AffectDataset,
    k: usize,
    seed: u64,
) -> i32 {
    guarded(|| {
        let ds = dataset_ref(dataset)?;
        let participants: Vec<u32> = ds.pairs.iter().map(|(r, _)| r.participant_id).collect();
        make_folds(&participants, k, seed).map_err(report_error)?;
        Ok(())
    })
}

/// Release a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or a string produced by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn affect_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

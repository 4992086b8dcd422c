//! C ABI over the core solvers: opaque handles, integer status codes, and a
//! thread-local last-error message. The header `include/rqhd.h` is generated
//! by cbindgen at build time.
//!
//! Status codes mirror the CLI exit codes: 0 ok, 2 invalid input,
//! 3 numerical failure, 4 I/O. Pointers returned by `rqhd_*_new` functions
//! must be released with the matching `rqhd_*_free`.

use rqhd_lab::config::parse_config;
use rqhd_lab::error::Error;
use rqhd_lab::experiment::run_experiment;
use rqhd_lab::kg::{dispersion_omega, Branch, Params};
use rqhd_lab::spectral::{solve_poisson_with_tol, RealField, SpectralGrid, DEFAULT_COMPAT_TOL};
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum RqhdStatus {
    Ok = 0,
    /// Invalid arguments or configuration.
    Invalid = 2,
    /// Numerical failure (vacuum, instability, charge imbalance, stalled
    /// iteration, ...).
    Numerical = 3,
    /// Filesystem failure.
    Io = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> RqhdStatus {
    match err.exit_code() {
        2 => RqhdStatus::Invalid,
        4 => RqhdStatus::Io,
        _ => RqhdStatus::Numerical,
    }
}

fn fail(err: Error) -> RqhdStatus {
    let code = status_of(&err);
    set_error(err.to_string());
    code
}

fn guard(f: impl FnOnce() -> RqhdStatus) -> RqhdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            RqhdStatus::Numerical
        }
    }
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null (query mode).
#[no_mangle]
pub unsafe extern "C" fn rqhd_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Semantic version of the library as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rqhd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Periodic grid handle.
pub struct RqhdGrid {
    inner: Arc<SpectralGrid>,
}

/// Create a periodic grid: `points[dim]` samples per axis on a torus of side
/// `extent[dim]`. Returns null on invalid input (see `rqhd_last_error`).
///
/// # Safety
/// `points` and `extent` must point to `dim` readable elements.
#[no_mangle]
pub unsafe extern "C" fn rqhd_grid_new(
    dim: u32,
    points: *const u32,
    extent: *const f64,
) -> *mut RqhdGrid {
    if points.is_null() || extent.is_null() || dim == 0 || dim > 3 {
        set_error("grid: dim must be 1..=3 with non-null points/extent");
        return std::ptr::null_mut();
    }
    let shape: Vec<usize> =
        std::slice::from_raw_parts(points, dim as usize).iter().map(|&n| n as usize).collect();
    let ext = std::slice::from_raw_parts(extent, dim as usize).to_vec();
    match SpectralGrid::new(&shape, &ext) {
        Ok(inner) => Box::into_raw(Box::new(RqhdGrid { inner })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Total number of grid points of a grid handle (0 for null).
///
/// # Safety
/// `grid` must be null or a pointer from `rqhd_grid_new`.
#[no_mangle]
pub unsafe extern "C" fn rqhd_grid_len(grid: *const RqhdGrid) -> usize {
    if grid.is_null() {
        return 0;
    }
    (*grid).inner.len()
}

/// Release a grid handle.
///
/// # Safety
/// `grid` must be null or a pointer from `rqhd_grid_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rqhd_grid_free(grid: *mut RqhdGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Solve the torus Poisson problem ΔV = rhs − mean(rhs) with mean(V) = 0.
/// `rhs` and `out` hold `rqhd_grid_len(grid)` row-major samples;
/// `mean_defect`, when non-null, receives the projected mean. Fails with a
/// numerical status when |mean(rhs)| exceeds `compat_tol · max|rhs|`
/// (pass `compat_tol <= 0` for the default 1e-10).
///
/// # Safety
/// `grid` must come from `rqhd_grid_new`; `rhs` and `out` must point to
/// `rqhd_grid_len(grid)` readable/writable f64 respectively.
#[no_mangle]
pub unsafe extern "C" fn rqhd_poisson_solve(
    grid: *const RqhdGrid,
    rhs: *const f64,
    out: *mut f64,
    compat_tol: f64,
    mean_defect: *mut f64,
) -> RqhdStatus {
    if grid.is_null() || rhs.is_null() || out.is_null() {
        set_error("poisson: null argument");
        return RqhdStatus::Invalid;
    }
    let g = &(*grid).inner;
    let data = std::slice::from_raw_parts(rhs, g.len()).to_vec();
    let out = std::slice::from_raw_parts_mut(out, g.len());
    guard(|| {
        let field = match RealField::from_samples(g, data.clone()) {
            Ok(f) => f,
            Err(e) => return fail(e),
        };
        let tol = if compat_tol > 0.0 { compat_tol } else { DEFAULT_COMPAT_TOL };
        match solve_poisson_with_tol(&field, tol) {
            Ok(sol) => {
                out.copy_from_slice(sol.potential.data());
                if !mean_defect.is_null() {
                    *mean_defect = sol.mean_defect;
                }
                RqhdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Sobolev norm of order `k` (0..=4) of a sampled field.
///
/// # Safety
/// `grid` from `rqhd_grid_new`; `f` points to `rqhd_grid_len(grid)` f64;
/// `out` non-null.
#[no_mangle]
pub unsafe extern "C" fn rqhd_sobolev_norm(
    grid: *const RqhdGrid,
    f: *const f64,
    k: u32,
    out: *mut f64,
) -> RqhdStatus {
    if grid.is_null() || f.is_null() || out.is_null() {
        set_error("sobolev: null argument");
        return RqhdStatus::Invalid;
    }
    let g = &(*grid).inner;
    let data = std::slice::from_raw_parts(f, g.len()).to_vec();
    guard(|| {
        let field = match RealField::from_samples(g, data.clone()) {
            Ok(f) => f,
            Err(e) => return fail(e),
        };
        match field.sobolev_norm(k as usize) {
            Ok(v) => {
                *out = v;
                RqhdStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Plane-wave frequency ω±(|k|) of the dispersion polynomial; `branch` 0 is
/// plus, 1 is minus.
///
/// # Safety
/// `out` must be non-null.
#[no_mangle]
pub unsafe extern "C" fn rqhd_dispersion_omega(
    epsilon: f64,
    upsilon: f64,
    kmag: f64,
    branch: i32,
    out: *mut f64,
) -> RqhdStatus {
    if out.is_null() {
        set_error("dispersion: null output");
        return RqhdStatus::Invalid;
    }
    let params = match Params::new(epsilon, upsilon, 1.0, 1.0) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let br = match branch {
        0 => Branch::Plus,
        1 => Branch::Minus,
        _ => {
            set_error("dispersion: branch must be 0 (plus) or 1 (minus)");
            return RqhdStatus::Invalid;
        }
    };
    match dispersion_omega(kmag, &params, br) {
        Ok(v) => {
            *out = v;
            RqhdStatus::Ok
        }
        Err(e) => fail(e),
    }
}

fn cstr_to_str<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().ok()
}

/// Parse and validate a config file; status only.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn rqhd_config_validate_file(path: *const c_char) -> RqhdStatus {
    let Some(path) = cstr_to_str(path) else {
        set_error("validate: null or non-UTF-8 path");
        return RqhdStatus::Invalid;
    };
    guard(|| {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(Error::io(format!("reading config {path}"), e)),
        };
        match parse_config(&text) {
            Ok(_) => RqhdStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Run the experiment described by a config file, as the CLI `run`
/// subcommand does; artifacts land in the config's output directory (or
/// `out_dir` when non-null).
///
/// # Safety
/// `path` (and `out_dir` when non-null) must be NUL-terminated UTF-8.
#[no_mangle]
pub unsafe extern "C" fn rqhd_run_experiment_file(
    path: *const c_char,
    out_dir: *const c_char,
) -> RqhdStatus {
    let Some(path) = cstr_to_str(path) else {
        set_error("run: null or non-UTF-8 path");
        return RqhdStatus::Invalid;
    };
    let out_override = cstr_to_str(out_dir).map(std::path::Path::new);
    guard(|| {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(Error::io(format!("reading config {path}"), e)),
        };
        let cfg = match parse_config(&text) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match run_experiment(&cfg, &text, out_override) {
            Ok(_) => RqhdStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

//! C interface to `paradiff`.
//!
//! Grids, fields and solve reports are opaque heap handles released with the
//! matching `*_free`. Every fallible call returns a [`PdStatus`]; on failure the
//! message is kept per thread and read back with [`pd_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64 as C64;
use paradiff::evolve::{hamiltonian_drift, picard_solve, PicardOptions, SolveReport};
use paradiff::nls::density_by_name;
use paradiff::{Error, Field, Grid, PairField};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotConverged = 3,
    Numerical = 4,
    Panic = 5,
}

pub struct PdGrid(Grid);
pub struct PdField(Field);
pub struct PdReport(SolveReport, Vec<f64>);

/// Plain-data view of a finished solve.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PdReportSummary {
    pub converged: bool,
    pub iterations: usize,
    pub halvings: usize,
    pub horizon: f64,
    pub max_contraction_ratio: f64,
    pub max_hamiltonian_drift: f64,
    pub final_sobolev_norm: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PdStatus {
    match e {
        Error::Invalid { .. } | Error::Config(_) | Error::GridMismatch(_) | Error::DerivativeOrder(_) => {
            PdStatus::InvalidArgument
        }
        Error::Picard(_) => PdStatus::NotConverged,
        _ => PdStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), PdStatus>) -> PdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PdStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            PdStatus::Panic
        }
    }
}

fn fail(e: Error) -> PdStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> PdStatus {
    set_error(format!("{what} is null"));
    PdStatus::NullPointer
}

/// Message for the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn pd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Frequency box `|j|_inf <= cutoff` in `dim` dimensions on the standard grid.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pd_grid_new(dim: usize, cutoff: usize, out: *mut *mut PdGrid) -> PdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = Grid::standard(dim, cutoff).map_err(fail)?;
        *out = Box::into_raw(Box::new(PdGrid(g)));
        Ok(())
    })
}

/// # Safety
/// `grid` must come from [`pd_grid_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pd_grid_free(grid: *mut PdGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// `(re + i im) e^{ik·x}`, where `k` points to `dim` integers.
///
/// # Safety
/// `grid` must be a live handle, `k` valid for `dim` reads and `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn pd_field_mode(
    grid: *const PdGrid,
    k: *const i64,
    re: f64,
    im: f64,
    out: *mut *mut PdField,
) -> PdStatus {
    guard(|| {
        let g = grid.as_ref().ok_or_else(|| null("grid"))?;
        if k.is_null() {
            return Err(null("k"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let k = std::slice::from_raw_parts(k, g.0.dim());
        let f = Field::mode(&g.0, k, C64::new(re, im)).map_err(fail)?;
        *out = Box::into_raw(Box::new(PdField(f)));
        Ok(())
    })
}

/// `field += other`; both must live on the same grid.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn pd_field_add(field: *mut PdField, other: *const PdField) -> PdStatus {
    guard(|| {
        let f = field.as_mut().ok_or_else(|| null("field"))?;
        let o = other.as_ref().ok_or_else(|| null("other"))?;
        if f.0.grid() != o.0.grid() {
            return Err(fail(Error::invalid("other", "fields live on different grids")));
        }
        f.0.axpy(C64::new(1.0, 0.0), &o.0);
        Ok(())
    })
}

/// # Safety
/// `field` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pd_field_sobolev_norm(field: *const PdField, s: f64, out: *mut f64) -> PdStatus {
    guard(|| {
        let f = field.as_ref().ok_or_else(|| null("field"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !s.is_finite() {
            return Err(fail(Error::invalid("s", format!("{s} is not finite"))));
        }
        *out = f.0.sobolev_norm(s);
        Ok(())
    })
}

/// # Safety
/// `field` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pd_field_free(field: *mut PdField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Picard solve of the NLS with the named density (`free`, `quartic`,
/// `flagship`, `coupled`) from `u0` up to `horizon` with step `dt`. Tracks the
/// iteration in `H^s`. A run that stops short of convergence still yields a
/// report together with [`PdStatus::NotConverged`].
///
/// # Safety
/// `density` must be a NUL-terminated string, `u0` a live field and `out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pd_picard_solve(
    density: *const c_char,
    coupling: f64,
    u0: *const PdField,
    horizon: f64,
    dt: f64,
    s: f64,
    out: *mut *mut PdReport,
) -> PdStatus {
    guard(|| {
        if density.is_null() {
            return Err(null("density"));
        }
        let u0 = u0.as_ref().ok_or_else(|| null("u0"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let name = std::ffi::CStr::from_ptr(density)
            .to_str()
            .map_err(|_| fail(Error::invalid("density", "not valid UTF-8")))?;
        let f = density_by_name(name, coupling).map_err(fail)?;
        let opts = PicardOptions { s, ..PicardOptions::default() };
        let report = picard_solve(f.as_ref(), &PairField::from_u(&u0.0), horizon, dt, &opts).map_err(fail)?;
        let drift: Vec<f64> = hamiltonian_drift(&report.trajectory, f.as_ref()).into_iter().map(|p| p.1).collect();
        let converged = report.converged;
        *out = Box::into_raw(Box::new(PdReport(report, drift)));
        if converged {
            Ok(())
        } else {
            set_error("Picard iteration stopped before reaching the tolerance".into());
            Err(PdStatus::NotConverged)
        }
    })
}

/// # Safety
/// `report` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pd_report_summary(report: *const PdReport, s: f64, out: *mut PdReportSummary) -> PdStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rep = &r.0;
        *out = PdReportSummary {
            converged: rep.converged,
            iterations: rep.iterations,
            halvings: rep.halvings,
            horizon: rep.horizon,
            max_contraction_ratio: rep.contraction_ratios().iter().cloned().fold(0.0, f64::max),
            max_hamiltonian_drift: r.1.iter().map(|d| d.abs()).fold(0.0, f64::max),
            final_sobolev_norm: rep.trajectory.last().sobolev_norm(s),
        };
        Ok(())
    })
}

/// Copies the final `u(x)` Fourier coefficients, in grid order, as interleaved
/// `re, im` pairs. `len` is the capacity of `buf` in doubles; the required
/// length is always written to `needed`.
///
/// # Safety
/// `report` must be live, `buf` valid for `len` writes (or null with `len = 0`)
/// and `needed` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pd_report_final_coeffs(
    report: *const PdReport,
    buf: *mut f64,
    len: usize,
    needed: *mut usize,
) -> PdStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if needed.is_null() {
            return Err(null("needed"));
        }
        let coeffs = r.0.trajectory.last().plus.coeffs();
        *needed = 2 * coeffs.len();
        if buf.is_null() || len < *needed {
            return Err(fail(Error::invalid("len", format!("buffer holds {len} doubles, {} needed", *needed))));
        }
        let dst = std::slice::from_raw_parts_mut(buf, *needed);
        for (pair, c) in dst.chunks_exact_mut(2).zip(coeffs) {
            pair[0] = c.re;
            pair[1] = c.im;
        }
        Ok(())
    })
}

/// # Safety
/// `report` must come from [`pd_picard_solve`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pd_report_free(report: *mut PdReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

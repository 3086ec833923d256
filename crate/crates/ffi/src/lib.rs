//! C ABI over the airy-layer library.
//!
//! Objects cross the boundary as opaque handles created by `al_*_new` and
//! released by the matching `al_*_free`. Every fallible call returns an
//! [`AlStatus`]; the message of the most recent failure on the calling thread
//! is available from [`al_last_error`].

use airy_layer::discretization::{build_1d, build_halfline_model, leftmost_eigenvalues, DiscreteOperator, Grid1D};
use airy_layer::expansion1d::{lambda_series, ExpansionSeries, PotentialTaylor};
use airy_layer::experiment::{run, ExperimentConfig};
use airy_layer::resolvent::{resolvent_norm, semigroup_norm};
use airy_layer::{airy, Error, C64};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Overflow = 3,
    Capability = 4,
    Accuracy = 5,
    Numerical = 6,
    Assumption = 7,
    Internal = 99,
}

/// Complex number with C layout.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AlComplex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for AlComplex {
    fn from(z: C64) -> Self {
        AlComplex { re: z.re, im: z.im }
    }
}

/// Discretized operator.
pub struct AlOperator(DiscreteOperator);

/// Eigenvalue expansion at a boundary point.
pub struct AlSeries(ExpansionSeries);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> AlStatus {
    match e {
        Error::Overflow(_) => AlStatus::Overflow,
        Error::Capability(_) => AlStatus::Capability,
        Error::Accuracy { .. } => AlStatus::Accuracy,
        Error::Domain(_) | Error::Configuration(_) => AlStatus::InvalidArgument,
        Error::HypothesisViolation(_) | Error::AssumptionViolation(_) | Error::Degeneracy(_) | Error::Contradiction(_) => AlStatus::Assumption,
        Error::Numerical(_) | Error::InconsistentRecursion { .. } => AlStatus::Numerical,
        Error::InternalConsistency(_) => AlStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), AlStatus>) -> AlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside the library");
            AlStatus::Internal
        }
    }
}

fn fail(e: Error) -> AlStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> AlStatus {
    set_error(&format!("null pointer: {what}"));
    AlStatus::NullPointer
}

fn invalid(msg: &str) -> AlStatus {
    set_error(msg);
    AlStatus::InvalidArgument
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, AlStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], AlStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, AlStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(&format!("{what} is not valid UTF-8")))
}

/// Message of the last failure on this thread; empty when none. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn al_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn al_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Ai and Ai′ at `z`.
///
/// # Safety
/// `value` and `derivative` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_airy(z: AlComplex, value: *mut AlComplex, derivative: *mut AlComplex) -> AlStatus {
    guard(|| {
        let v = out(value, "value")?;
        let d = out(derivative, "derivative")?;
        let e = airy::ai(C64::new(z.re, z.im)).map_err(fail)?;
        *v = e.value.into();
        *d = e.derivative.into();
        Ok(())
    })
}

/// The `n`-th zero of Ai (n ≥ 1), a negative real number.
///
/// # Safety
/// `zero` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_airy_zero(n: usize, zero: *mut f64) -> AlStatus {
    guard(|| {
        let o = out(zero, "zero")?;
        *o = airy::ai_zero(n).map_err(fail)?;
        Ok(())
    })
}

/// `−h²d²/dx² + iV` on (0, a) with V(x) = Σ coefficients[k]·x^k, on `nodes` Chebyshev points.
///
/// # Safety
/// `coefficients` must point to `count` doubles; `handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_operator_1d_new(coefficients: *const f64, count: usize, a: f64, h: f64, nodes: usize, handle: *mut *mut AlOperator) -> AlStatus {
    guard(|| {
        let o = out(handle, "handle")?;
        let c = slice(coefficients, count, "coefficients")?.to_vec();
        if !(a > 0.0 && h > 0.0) || nodes < 4 {
            return Err(invalid("a and h must be positive and nodes at least 4"));
        }
        let v = move |x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
        let op = build_1d(&v, a, h, &Grid1D::cheb(nodes, 0.0, a)).map_err(fail)?;
        *o = Box::into_raw(Box::new(AlOperator(op)));
        Ok(())
    })
}

/// `−d²/dτ² + iβ₀τ` on (0, length) with `nodes` Chebyshev points.
///
/// # Safety
/// `handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_operator_halfline_new(beta0: f64, length: f64, nodes: usize, handle: *mut *mut AlOperator) -> AlStatus {
    guard(|| {
        let o = out(handle, "handle")?;
        if !(length > 0.0) || nodes < 4 {
            return Err(invalid("length must be positive and nodes at least 4"));
        }
        let op = build_halfline_model(beta0, &Grid1D::cheb(nodes, 0.0, length)).map_err(fail)?;
        *o = Box::into_raw(Box::new(AlOperator(op)));
        Ok(())
    })
}

/// Number of unknowns; 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn al_operator_dim(op: *const AlOperator) -> usize {
    op.as_ref().map(|o| o.0.dim()).unwrap_or(0)
}

/// The `k` leftmost eigenvalues, written to `values[0..*found]`.
///
/// # Safety
/// `op` must be a live handle, `values` must hold `k` entries and `found` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_operator_leftmost(op: *const AlOperator, k: usize, values: *mut AlComplex, found: *mut usize) -> AlStatus {
    guard(|| {
        let op = op.as_ref().ok_or_else(|| null("op"))?;
        let n = out(found, "found")?;
        if k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if values.is_null() {
            return Err(null("values"));
        }
        let rep = leftmost_eigenvalues(&op.0, k, None).map_err(fail)?;
        let dst = std::slice::from_raw_parts_mut(values, k);
        let m = rep.eigenvalues.len().min(k);
        for (d, s) in dst.iter_mut().zip(&rep.eigenvalues[..m]) {
            *d = (*s).into();
        }
        *n = m;
        Ok(())
    })
}

/// `‖(A − z)^{-1}‖` in the discrete L² norm; infinite at a numerical eigenvalue.
///
/// # Safety
/// `op` must be a live handle and `norm` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_operator_resolvent_norm(op: *const AlOperator, z: AlComplex, norm: *mut f64) -> AlStatus {
    guard(|| {
        let op = op.as_ref().ok_or_else(|| null("op"))?;
        let o = out(norm, "norm")?;
        *o = resolvent_norm(&op.0, C64::new(z.re, z.im)).map_err(fail)?.norm;
        Ok(())
    })
}

/// `‖e^{−tA}‖` in the discrete L² norm.
///
/// # Safety
/// `op` must be a live handle and `norm` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_operator_semigroup_norm(op: *const AlOperator, t: f64, norm: *mut f64) -> AlStatus {
    guard(|| {
        let op = op.as_ref().ok_or_else(|| null("op"))?;
        let o = out(norm, "norm")?;
        *o = semigroup_norm(&op.0, t).map_err(fail)?;
        Ok(())
    })
}

/// Release an operator; null is ignored.
///
/// # Safety
/// `op` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn al_operator_free(op: *mut AlOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Expansion λ₀ + λ₁ε + … of mode `mode` at the left endpoint of (0, a), where
/// V(x) = v0 + Σ betas[j]·x^{j+1}.
///
/// # Safety
/// `betas` must point to `count` doubles; `handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_series_new(betas: *const f64, count: usize, a: f64, v0: f64, mode: usize, order: usize, handle: *mut *mut AlSeries) -> AlStatus {
    guard(|| {
        let o = out(handle, "handle")?;
        let b = slice(betas, count, "betas")?.to_vec();
        let pt = PotentialTaylor::left(b, a, v0).map_err(fail)?;
        let s = lambda_series(&pt, mode, order).map_err(fail)?;
        *o = Box::into_raw(Box::new(AlSeries(s)));
        Ok(())
    })
}

/// Number of coefficients λ₀ … λ_N; 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn al_series_len(series: *const AlSeries) -> usize {
    series.as_ref().map(|s| s.0.lambdas.len()).unwrap_or(0)
}

/// Coefficient λ_j.
///
/// # Safety
/// `series` must be a live handle and `value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_series_coefficient(series: *const AlSeries, j: usize, value: *mut AlComplex) -> AlStatus {
    guard(|| {
        let s = series.as_ref().ok_or_else(|| null("series"))?;
        let o = out(value, "value")?;
        let l = s.0.lambdas.get(j).ok_or_else(|| invalid("coefficient index out of range"))?;
        *o = (*l).into();
        Ok(())
    })
}

/// Truncated eigenvalue prediction at semiclassical parameter `h`.
///
/// # Safety
/// `series` must be a live handle and `value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_series_physical(series: *const AlSeries, h: f64, value: *mut AlComplex) -> AlStatus {
    guard(|| {
        let s = series.as_ref().ok_or_else(|| null("series"))?;
        let o = out(value, "value")?;
        if !(h > 0.0) {
            return Err(invalid("h must be positive"));
        }
        *o = s.0.physical(h).into();
        Ok(())
    })
}

/// Release a series; null is ignored.
///
/// # Safety
/// `series` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn al_series_free(series: *mut AlSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Run a JSON experiment configuration and write its outputs to `out_dir`.
/// `passed` receives whether every check in the run passed.
///
/// # Safety
/// `config_json` and `out_dir` must be NUL-terminated strings; `passed` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_run_experiment(config_json: *const c_char, out_dir: *const c_char, jobs: usize, tol_scale: f64, passed: *mut bool) -> AlStatus {
    guard(|| {
        let text = string(config_json, "config_json")?;
        let dir = string(out_dir, "out_dir")?;
        let p = out(passed, "passed")?;
        if jobs == 0 || !(tol_scale > 0.0) {
            return Err(invalid("jobs must be at least 1 and tol_scale positive"));
        }
        let cfg = ExperimentConfig::from_json(text).map_err(fail)?;
        let res = run(&cfg, jobs, tol_scale).map_err(fail)?;
        res.write(Path::new(dir)).map_err(fail)?;
        *p = res.all_passed();
        Ok(())
    })
}

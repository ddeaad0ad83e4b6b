//! C ABI over the robust-design library.
//!
//! Every fallible call returns an [`RdStatus`]; on failure the message is
//! available from [`rd_last_error_message`] on the same thread. Models are
//! opaque handles created by `rd_model_new_*` and released by
//! [`rd_model_free`]. Weight and allocation buffers are caller-owned arrays of
//! length `rd_model_n_points`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use robust_design::apportion::{ceil_then_remove, pukelsheim_rieder};
use robust_design::criteria::{maxbias, moments, variance};
use robust_design::model::{
    build_grid_space, evaluate_regressors, orthonormalize, DesignMeasure, DesignSpace, OrthonormalBasis, RegressorSpec,
};
use robust_design::optimizer::{
    find_nu_for_cmb, frontier_point, solve_rbb, solve_rbv, BoundedDesign, FrontierPoint, OptimizerConfig,
};
use robust_design::DesignError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    Numerical = 4,
    BufferSize = 5,
    Panic = 6,
}

/// Opaque model: a design space with its orthonormalized regressors.
pub struct RdModel {
    space: DesignSpace,
    q: OrthonormalBasis,
}

/// Optimizer settings. Zero `max_iter` means the library default (`200 N`).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RdOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub prune_below: f64,
}

/// Summary of a solved design.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RdFrontierPoint {
    pub nu: f64,
    pub var: f64,
    pub maxbias: f64,
    pub cmb: f64,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set by the bounded searches when the bound is met on a flat stretch.
    pub plateau: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &DesignError) -> RdStatus {
    match e {
        DesignError::InfeasibleBound(_) | DesignError::TargetOutOfRange { .. } => RdStatus::Infeasible,
        DesignError::SingularMoments { .. } | DesignError::Rounding(_) => RdStatus::Numerical,
        _ => RdStatus::InvalidArgument,
    }
}

fn fail(status: RdStatus, msg: impl Into<String>) -> RdStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), RdStatus>) -> RdStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RdStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(RdStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: Result<T, DesignError>) -> Result<T, RdStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn options(opts: *const RdOptions) -> OptimizerConfig {
    let mut cfg = OptimizerConfig::default();
    // SAFETY: checked for null; the caller guarantees a valid struct otherwise.
    if let Some(o) = unsafe { opts.as_ref() } {
        cfg.tol = o.tol;
        cfg.max_iter = (o.max_iter > 0).then_some(o.max_iter);
        cfg.prune_below = o.prune_below;
    }
    cfg
}

unsafe fn model_ref<'a>(model: *const RdModel) -> Result<&'a RdModel, RdStatus> {
    model
        .as_ref()
        .ok_or_else(|| fail(RdStatus::NullPointer, "model is null"))
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], RdStatus> {
    if p.is_null() {
        return Err(fail(RdStatus::NullPointer, format!("{} is null", what)));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, need: usize, what: &str) -> Result<&'a mut [T], RdStatus> {
    if p.is_null() {
        return Err(fail(RdStatus::NullPointer, format!("{} is null", what)));
    }
    if len != need {
        return Err(fail(
            RdStatus::BufferSize,
            format!("{} has length {}, expected {}", what, len, need),
        ));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn finish_model(space: DesignSpace, spec: RegressorSpec, out: *mut *mut RdModel) -> Result<(), RdStatus> {
    let f = lift(evaluate_regressors(&spec, &space))?;
    let q = lift(orthonormalize(&f))?;
    // SAFETY: `out` was checked for null by the caller.
    unsafe { *out = Box::into_raw(Box::new(RdModel { space, q })) };
    Ok(())
}

/// Builds a polynomial model on a Cartesian grid. `lower`, `upper` and
/// `counts` have `dim` entries each.
///
/// # Safety
/// The array arguments must point to `dim` readable elements and `out` to a
/// writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn rd_model_new_grid(
    lower: *const f64,
    upper: *const f64,
    counts: *const usize,
    dim: usize,
    degree: usize,
    intercept: bool,
    out: *mut *mut RdModel,
) -> RdStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(RdStatus::NullPointer, "out is null"));
        }
        let lo = input(lower, dim, "lower")?;
        let hi = input(upper, dim, "upper")?;
        let counts = input(counts, dim, "counts")?;
        let bounds: Vec<(f64, f64)> = lo.iter().copied().zip(hi.iter().copied()).collect();
        let space = lift(build_grid_space(&bounds, counts))?;
        finish_model(space, RegressorSpec::polynomial(degree, intercept), out)
    })
}

/// Builds a polynomial model on explicit points given row-major as an
/// `n_points x dim` array.
///
/// # Safety
/// `points` must point to `n_points * dim` readable values and `out` to a
/// writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn rd_model_new_points(
    points: *const f64,
    n_points: usize,
    dim: usize,
    degree: usize,
    intercept: bool,
    out: *mut *mut RdModel,
) -> RdStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(RdStatus::NullPointer, "out is null"));
        }
        if dim == 0 {
            return Err(fail(RdStatus::InvalidArgument, "dim must be positive"));
        }
        let total = n_points
            .checked_mul(dim)
            .ok_or_else(|| fail(RdStatus::InvalidArgument, "n_points * dim overflows"))?;
        let flat = input(points, total, "points")?;
        let space = lift(DesignSpace::from_points(
            flat.chunks(dim).map(<[f64]>::to_vec).collect(),
        ))?;
        finish_model(space, RegressorSpec::polynomial(degree, intercept), out)
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from `rd_model_new_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rd_model_free(model: *mut RdModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of design points N, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_model_n_points(model: *const RdModel) -> usize {
    model.as_ref().map_or(0, |m| m.space.len())
}

/// Number of regression parameters p, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rd_model_n_params(model: *const RdModel) -> usize {
    model.as_ref().map_or(0, |m| m.q.n_params())
}

/// Variance and maximum squared bias of the design `weights`.
///
/// # Safety
/// `weights` must hold `len` values; `var_out` and `maxbias_out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rd_evaluate(
    model: *const RdModel,
    weights: *const f64,
    len: usize,
    var_out: *mut f64,
    maxbias_out: *mut f64,
) -> RdStatus {
    guard(|| {
        let m = model_ref(model)?;
        if var_out.is_null() || maxbias_out.is_null() {
            return Err(fail(RdStatus::NullPointer, "output pointer is null"));
        }
        let w = measure(m, weights, len)?;
        let b = lift(moments(&m.q, &w))?;
        *var_out = variance(&b);
        *maxbias_out = maxbias(&b);
        Ok(())
    })
}

unsafe fn measure(m: &RdModel, weights: *const f64, len: usize) -> Result<DesignMeasure, RdStatus> {
    if len != m.space.len() {
        return Err(fail(
            RdStatus::BufferSize,
            format!("weights has length {}, expected {}", len, m.space.len()),
        ));
    }
    let w = input(weights, len, "weights")?;
    lift(DesignMeasure::new(w.to_vec()))
}

unsafe fn emit(
    m: &RdModel,
    p: &FrontierPoint,
    plateau: bool,
    weights_out: *mut f64,
    len: usize,
    point_out: *mut RdFrontierPoint,
) -> Result<(), RdStatus> {
    let buf = output(weights_out, len, m.space.len(), "weights_out")?;
    buf.copy_from_slice(p.design.weights());
    if let Some(out) = point_out.as_mut() {
        *out = RdFrontierPoint {
            nu: p.nu,
            var: p.var,
            maxbias: p.maxbias,
            cmb: p.cmb,
            loss: p.loss_value,
            iterations: p.trace.iterations,
            converged: p.trace.converged,
            plateau,
        };
    }
    Ok(())
}

/// Minimizes `(1 - nu) VAR + nu MAXBIAS`. `opts` may be null for defaults and
/// `point_out` may be null if the summary is not wanted.
///
/// # Safety
/// `weights_out` must hold `len` writable values; non-null pointers must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn rd_minimize(
    model: *const RdModel,
    nu: f64,
    opts: *const RdOptions,
    weights_out: *mut f64,
    len: usize,
    point_out: *mut RdFrontierPoint,
) -> RdStatus {
    guard(|| {
        let m = model_ref(model)?;
        output(weights_out, len, m.space.len(), "weights_out")?;
        let p = lift(frontier_point(&m.q, nu, &options(opts)))?;
        emit(m, &p, false, weights_out, len, point_out)
    })
}

unsafe fn bounded(
    model: *const RdModel,
    opts: *const RdOptions,
    weights_out: *mut f64,
    len: usize,
    point_out: *mut RdFrontierPoint,
    solve: impl FnOnce(&OrthonormalBasis, &OptimizerConfig) -> Result<BoundedDesign, DesignError>,
) -> RdStatus {
    guard(|| {
        let m = model_ref(model)?;
        output(weights_out, len, m.space.len(), "weights_out")?;
        let d = lift(solve(&m.q, &options(opts)))?;
        emit(m, &d.point, d.plateau, weights_out, len, point_out)
    })
}

/// Minimum-variance design subject to `MAXBIAS <= b2`.
///
/// # Safety
/// As for [`rd_minimize`].
#[no_mangle]
pub unsafe extern "C" fn rd_solve_rbb(
    model: *const RdModel,
    b2: f64,
    opts: *const RdOptions,
    weights_out: *mut f64,
    len: usize,
    point_out: *mut RdFrontierPoint,
) -> RdStatus {
    bounded(model, opts, weights_out, len, point_out, |q, c| solve_rbb(q, b2, c))
}

/// Minimum-bias design subject to `VAR <= s2`.
///
/// # Safety
/// As for [`rd_minimize`].
#[no_mangle]
pub unsafe extern "C" fn rd_solve_rbv(
    model: *const RdModel,
    s2: f64,
    opts: *const RdOptions,
    weights_out: *mut f64,
    len: usize,
    point_out: *mut RdFrontierPoint,
) -> RdStatus {
    bounded(model, opts, weights_out, len, point_out, |q, c| solve_rbv(q, s2, c))
}

/// Frontier design whose coefficient of maximum bias matches `target`.
///
/// # Safety
/// As for [`rd_minimize`].
#[no_mangle]
pub unsafe extern "C" fn rd_find_nu_for_cmb(
    model: *const RdModel,
    target: f64,
    opts: *const RdOptions,
    weights_out: *mut f64,
    len: usize,
    point_out: *mut RdFrontierPoint,
) -> RdStatus {
    bounded(model, opts, weights_out, len, point_out, |q, c| {
        find_nu_for_cmb(q, target, c)
    })
}

/// Rounds `weights` to `n` runs by ceiling then greedy removal.
///
/// # Safety
/// `weights` must hold `len` values and `alloc_out` `len` writable slots.
#[no_mangle]
pub unsafe extern "C" fn rd_ceil_then_remove(
    model: *const RdModel,
    weights: *const f64,
    len: usize,
    n: usize,
    nu: f64,
    alloc_out: *mut usize,
) -> RdStatus {
    guard(|| {
        let m = model_ref(model)?;
        let w = measure(m, weights, len)?;
        let out = output(alloc_out, len, len, "alloc_out")?;
        let d = lift(ceil_then_remove(&m.q, &w, n, nu))?;
        out.copy_from_slice(&d.allocations);
        Ok(())
    })
}

/// Rounds `weights` to `n` runs by efficient apportionment on their support.
///
/// # Safety
/// `weights` must hold `len` values and `alloc_out` `len` writable slots.
#[no_mangle]
pub unsafe extern "C" fn rd_efficient_apportionment(
    weights: *const f64,
    len: usize,
    n: usize,
    alloc_out: *mut usize,
) -> RdStatus {
    guard(|| {
        let w = lift(DesignMeasure::new(input(weights, len, "weights")?.to_vec()))?;
        let out = output(alloc_out, len, len, "alloc_out")?;
        let d = lift(pukelsheim_rieder(&w, n))?;
        out.copy_from_slice(&d.allocations);
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn rd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

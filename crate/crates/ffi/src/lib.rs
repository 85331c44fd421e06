//! C interface to `subspace-infer`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `si_*_free`. Every fallible call returns an [`SiStatus`];
//! on failure [`si_last_error`] describes the error for the calling thread.
//! Matrices are dense row-major `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use subspace_infer::inference::{
    estimate_rank, infer_from_fit, rank_threshold, region_check, sigma_hat2, Inference,
};
use subspace_infer::linalg::{projection_distance2, singular_values, Matrix};
use subspace_infer::model::io::{read_dataset, write_dataset};
use subspace_infer::model::{
    make_model, replication_stream, sample_dataset, stream_rng, Dataset, LambdaSpec, ProblemDims,
    MODEL_STREAM,
};
use subspace_infer::solver::{
    default_lambda, solve_nuclear, AUpdate, SolverConfig, SolverResult, DEFAULT_LAMBDA_C,
};
use subspace_infer::Error;

/// Result codes; `SI_OK` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiStatus {
    SiOk = 0,
    SiErrNullPointer = 1,
    SiErrInvalidArgument = 2,
    SiErrDimension = 3,
    SiErrDomain = 4,
    SiErrNonFinite = 5,
    SiErrNumerical = 6,
    SiErrFormat = 7,
    SiErrConfig = 8,
    SiErrIo = 9,
    SiErrBufferTooSmall = 10,
    SiErrPanic = 11,
}

/// A dataset of `2n` samples.
pub struct SiDataset(Dataset);

/// A fitted nuclear-norm estimate with its solver diagnostics.
pub struct SiFit {
    result: SolverResult,
    /// NaN for a fit supplied by the caller.
    lambda_reg: f64,
}

/// Subspace estimate and confidence region.
pub struct SiEstimate(Inference);

/// Solver settings; start from [`si_solver_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SiSolverOptions {
    /// Penalty; when not positive it is derived from `sigma` and `lambda_c`.
    pub lambda_reg: f64,
    pub sigma: f64,
    pub lambda_c: f64,
    pub rho: f64,
    pub max_iter: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// 0 automatic, 1 conjugate gradient, 2 kernel solve.
    pub a_update: u32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SiFitInfo {
    pub lambda_reg: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SiSummary {
    pub m1: usize,
    pub m2: usize,
    pub r: usize,
    pub n: usize,
    pub sigma2_hat: f64,
    pub b_n: f64,
    pub v_n: f64,
    pub center: f64,
    pub half_width: f64,
    pub alpha: f64,
    pub clamp_fired: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SiStatus {
    match e {
        Error::Dimension(_) => SiStatus::SiErrDimension,
        Error::InvalidArgument(_) => SiStatus::SiErrInvalidArgument,
        Error::Domain(_) => SiStatus::SiErrDomain,
        Error::NonFinite(_) => SiStatus::SiErrNonFinite,
        Error::SvdNonConvergence { .. } | Error::CgBreakdown { .. } => SiStatus::SiErrNumerical,
        Error::Format { .. } => SiStatus::SiErrFormat,
        Error::Config { .. } => SiStatus::SiErrConfig,
        Error::Io { .. } => SiStatus::SiErrIo,
    }
}

enum Failure {
    Core(Error),
    Null(&'static str),
    Buffer { need: usize, have: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type FfiResult<T = ()> = std::result::Result<T, Failure>;

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult) -> SiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SiStatus::SiOk,
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer passed as `{name}`"));
            SiStatus::SiErrNullPointer
        }
        Ok(Err(Failure::Buffer { need, have })) => {
            set_error(format!("buffer holds {have} values but {need} are needed"));
            SiStatus::SiErrBufferTooSmall
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            SiStatus::SiErrPanic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> FfiResult<&'a T> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &'static str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path_arg(p: *const c_char, name: &'static str) -> FfiResult<PathBuf> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidArgument(format!("`{name}` is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn put<T>(out: *mut T, value: T, name: &'static str) -> FfiResult {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize, name: &'static str) -> FfiResult {
    if len < src.len() {
        return Err(Failure::Buffer {
            need: src.len(),
            have: len,
        });
    }
    if src.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(Failure::Null(name));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn si_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn si_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Wraps `2n` samples: `x` holds `count` row-major `m1 x m2` designs back to
/// back and `y` the `count` responses.
///
/// # Safety
/// `x` must point to `count * m1 * m2` doubles, `y` to `count` doubles and
/// `out` to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn si_dataset_new(
    m1: usize,
    m2: usize,
    count: usize,
    x: *const f64,
    y: *const f64,
    out: *mut *mut SiDataset,
) -> SiStatus {
    guard(|| {
        let d = count
            .checked_mul(m1)
            .and_then(|v| v.checked_mul(m2))
            .ok_or_else(|| Error::InvalidArgument("dataset size overflows".into()))?;
        let x = slice(x, d, "x")?.to_vec();
        let y = slice(y, count, "y")?.to_vec();
        let data = Dataset::new(m1, m2, x, y)?;
        put(out, Box::into_raw(Box::new(SiDataset(data))), "out")
    })
}

/// Draws a model `UΛVᵀ` and `2n` samples from it. `lambdas` may be NULL for
/// the default spectrum `2^r, ..., 2`. The model factors are written to
/// `u_out` (`m1 x r`) and `v_out` (`m2 x r`) when those are not NULL.
///
/// # Safety
/// Non-NULL pointers must be valid for the stated lengths.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn si_dataset_generate(
    m1: usize,
    m2: usize,
    r: usize,
    n: usize,
    sigma: f64,
    lambdas: *const f64,
    seed: u64,
    u_out: *mut f64,
    v_out: *mut f64,
    out: *mut *mut SiDataset,
) -> SiStatus {
    guard(|| {
        let dims = ProblemDims::new(m1, m2, r, n)?;
        let spec = if lambdas.is_null() {
            LambdaSpec::Geometric
        } else {
            LambdaSpec::Explicit(slice(lambdas, r, "lambdas")?.to_vec())
        };
        let model = make_model(dims, &spec, sigma, &mut stream_rng(seed, MODEL_STREAM))?;
        let data = sample_dataset(&model, &mut stream_rng(seed, replication_stream(n, 0)));
        if !u_out.is_null() {
            copy_out(model.u.as_slice(), u_out, m1 * r, "u_out")?;
        }
        if !v_out.is_null() {
            copy_out(model.v.as_slice(), v_out, m2 * r, "v_out")?;
        }
        put(out, Box::into_raw(Box::new(SiDataset(data))), "out")
    })
}

/// Reads a dataset in the binary TRDS format.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn si_dataset_read(
    path: *const c_char,
    out: *mut *mut SiDataset,
) -> SiStatus {
    guard(|| {
        let data = read_dataset(&path_arg(path, "path")?)?;
        put(out, Box::into_raw(Box::new(SiDataset(data))), "out")
    })
}

/// Writes a dataset in the binary TRDS format.
///
/// # Safety
/// `data` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn si_dataset_write(data: *const SiDataset, path: *const c_char) -> SiStatus {
    guard(|| {
        let data = deref(data, "data")?;
        write_dataset(&data.0, &path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Shape and total sample count `2n`.
///
/// # Safety
/// `data` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn si_dataset_shape(
    data: *const SiDataset,
    m1: *mut usize,
    m2: *mut usize,
    count: *mut usize,
) -> SiStatus {
    guard(|| {
        let d = &deref(data, "data")?.0;
        put(m1, d.m1(), "m1")?;
        put(m2, d.m2(), "m2")?;
        put(count, d.len(), "count")
    })
}

/// # Safety
/// `data` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn si_dataset_free(data: *mut SiDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Default solver settings, with the penalty derived from `sigma`.
#[no_mangle]
pub extern "C" fn si_solver_options_default(sigma: f64) -> SiSolverOptions {
    let c = SolverConfig::with_lambda(1.0);
    SiSolverOptions {
        lambda_reg: 0.0,
        sigma,
        lambda_c: DEFAULT_LAMBDA_C,
        rho: c.rho,
        max_iter: c.max_iter,
        tol_primal: c.tol_primal,
        tol_dual: c.tol_dual,
        cg_tol: c.cg_tol,
        cg_max_iter: c.cg_max_iter,
        a_update: 0,
    }
}

fn solver_config(o: &SiSolverOptions, data: &Dataset) -> FfiResult<SolverConfig> {
    let lambda_reg = if o.lambda_reg > 0.0 {
        o.lambda_reg
    } else {
        default_lambda(o.sigma, data.m1(), data.m2(), data.split(), o.lambda_c)?
    };
    let a_update = match o.a_update {
        0 => AUpdate::Auto,
        1 => AUpdate::Cg,
        2 => AUpdate::Kernel,
        other => return Err(Error::InvalidArgument(format!("unknown a_update {other}")).into()),
    };
    let config = SolverConfig {
        lambda_reg,
        rho: o.rho,
        max_iter: o.max_iter,
        tol_primal: o.tol_primal,
        tol_dual: o.tol_dual,
        cg_tol: o.cg_tol,
        cg_max_iter: o.cg_max_iter,
        a_update,
    };
    config.validate()?;
    Ok(config)
}

/// Fits the nuclear-norm estimator on the first half of `data`. A run that
/// stops at `max_iter` still succeeds; check `converged` in [`si_fit_info`].
///
/// # Safety
/// `data` and `options` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn si_fit(
    data: *const SiDataset,
    options: *const SiSolverOptions,
    out: *mut *mut SiFit,
) -> SiStatus {
    guard(|| {
        let data = &deref(data, "data")?.0;
        let config = solver_config(deref(options, "options")?, data)?;
        let fit = SiFit {
            result: solve_nuclear(&data.first_half(), &config)?,
            lambda_reg: config.lambda_reg,
        };
        put(out, Box::into_raw(Box::new(fit)), "out")
    })
}

/// Wraps an existing `m1 x m2` estimate so it can be passed to
/// [`si_infer`].
///
/// # Safety
/// `m` must point to `m1 * m2` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn si_fit_from_matrix(
    m1: usize,
    m2: usize,
    m: *const f64,
    out: *mut *mut SiFit,
) -> SiStatus {
    guard(|| {
        let values = slice(m, m1 * m2, "m")?.to_vec();
        let m_nuc = Matrix::new(m1, m2, values)?;
        let fit = SiFit {
            result: SolverResult {
                m_nuc,
                iterations: 0,
                objective: f64::NAN,
                primal_residual: 0.0,
                dual_residual: 0.0,
                converged: true,
                cg_iterations: 0,
            },
            lambda_reg: f64::NAN,
        };
        put(out, Box::into_raw(Box::new(fit)), "out")
    })
}

/// # Safety
/// `fit` must be a live handle and `info` writable.
#[no_mangle]
pub unsafe extern "C" fn si_fit_info(fit: *const SiFit, info: *mut SiFitInfo) -> SiStatus {
    guard(|| {
        let fit = deref(fit, "fit")?;
        let r = &fit.result;
        put(
            info,
            SiFitInfo {
                lambda_reg: fit.lambda_reg,
                iterations: r.iterations,
                converged: r.converged,
                objective: r.objective,
                primal_residual: r.primal_residual,
                dual_residual: r.dual_residual,
            },
            "info",
        )
    })
}

/// Copies the fitted matrix (row-major) into `buf` of `len` doubles.
///
/// # Safety
/// `fit` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn si_fit_matrix(fit: *const SiFit, buf: *mut f64, len: usize) -> SiStatus {
    guard(|| copy_out(deref(fit, "fit")?.result.m_nuc.as_slice(), buf, len, "buf"))
}

/// # Safety
/// `fit` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn si_fit_free(fit: *mut SiFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// De-biases `fit` with the second half of `data`, extracts the top-`r`
/// subspaces and builds the level `1 − alpha` confidence region.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn si_infer(
    data: *const SiDataset,
    fit: *const SiFit,
    r: usize,
    alpha: f64,
    out: *mut *mut SiEstimate,
) -> SiStatus {
    guard(|| {
        let data = &deref(data, "data")?.0;
        let fit = deref(fit, "fit")?.result.clone();
        let inf = infer_from_fit(data, fit, r, alpha)?;
        put(out, Box::into_raw(Box::new(SiEstimate(inf))), "out")
    })
}

/// # Safety
/// `est` must be a live handle and `summary` writable.
#[no_mangle]
pub unsafe extern "C" fn si_estimate_summary(
    est: *const SiEstimate,
    summary: *mut SiSummary,
) -> SiStatus {
    guard(|| {
        let inf = &deref(est, "est")?.0;
        let d = inf.estimate.dims;
        let s = &inf.summary;
        put(
            summary,
            SiSummary {
                m1: d.m1,
                m2: d.m2,
                r: d.r,
                n: d.n,
                sigma2_hat: s.sigma2_hat,
                b_n: s.b_n,
                v_n: s.v_n,
                center: s.center,
                half_width: s.half_width,
                alpha: s.alpha,
                clamp_fired: s.clamp_fired,
            },
            "summary",
        )
    })
}

/// Copies `Û` (`m1 x r`), `V̂` (`m2 x r`) and the `r` leading singular values
/// of the de-biased estimate. Any output may be NULL with length 0.
///
/// # Safety
/// `est` must be a live handle; buffers valid for their lengths.
#[no_mangle]
pub unsafe extern "C" fn si_estimate_factors(
    est: *const SiEstimate,
    u: *mut f64,
    u_len: usize,
    v: *mut f64,
    v_len: usize,
    lambda_hat: *mut f64,
    lambda_len: usize,
) -> SiStatus {
    guard(|| {
        let e = &deref(est, "est")?.0.estimate;
        if !u.is_null() || u_len > 0 {
            copy_out(e.u_hat.as_slice(), u, u_len, "u")?;
        }
        if !v.is_null() || v_len > 0 {
            copy_out(e.v_hat.as_slice(), v, v_len, "v")?;
        }
        if !lambda_hat.is_null() || lambda_len > 0 {
            copy_out(&e.lambda_hat, lambda_hat, lambda_len, "lambda_hat")?;
        }
        Ok(())
    })
}

/// Distance of a candidate pair (`u` is `m1 x r`, `v` is `m2 x r`) to the
/// estimate and whether it lies in the confidence region.
///
/// # Safety
/// `est` must be a live handle, `u` and `v` valid for their shapes and the
/// outputs writable.
#[no_mangle]
pub unsafe extern "C" fn si_estimate_check(
    est: *const SiEstimate,
    u: *const f64,
    v: *const f64,
    dist2: *mut f64,
    contained: *mut bool,
) -> SiStatus {
    guard(|| {
        let inf = &deref(est, "est")?.0;
        let d = inf.estimate.dims;
        let u = Matrix::new(d.m1, d.r, slice(u, d.m1 * d.r, "u")?.to_vec())?;
        let v = Matrix::new(d.m2, d.r, slice(v, d.m2 * d.r, "v")?.to_vec())?;
        let c = region_check(&inf.estimate, &u, &v, &inf.summary)?;
        put(dist2, c.dist2, "dist2")?;
        put(contained, c.contained, "contained")
    })
}

/// # Safety
/// `est` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn si_estimate_free(est: *mut SiEstimate) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// Rank chosen by thresholding the singular values of the de-biased fit at
/// `2c·σ̂·√(max(m1, m2)/n)`; `threshold` may be NULL.
///
/// # Safety
/// Handles must be live and `rank` writable.
#[no_mangle]
pub unsafe extern "C" fn si_estimate_rank(
    data: *const SiDataset,
    fit: *const SiFit,
    c: f64,
    rank: *mut usize,
    threshold: *mut f64,
) -> SiStatus {
    guard(|| {
        let data = &deref(data, "data")?.0;
        let m_nuc = &deref(fit, "fit")?.result.m_nuc;
        let half2 = data.second_half();
        let m_hat = subspace_infer::inference::debias(m_nuc, &half2)?;
        let sigma_hat = sigma_hat2(m_nuc, &half2)?.sqrt();
        let sv = singular_values(&m_hat)?;
        let (m1, m2, n) = (data.m1(), data.m2(), data.split());
        let r = estimate_rank(&sv, sigma_hat, m1, m2, n, c)?;
        if !threshold.is_null() {
            threshold.write(rank_threshold(sigma_hat, m1, m2, n, c)?);
        }
        put(rank, r, "rank")
    })
}

/// `‖U₁U₁ᵀ − U₂U₂ᵀ‖_F² + ‖V₁V₁ᵀ − V₂V₂ᵀ‖_F²` for `m1 x r` and `m2 x r`
/// factors with orthonormal columns.
///
/// # Safety
/// Inputs must be valid for their shapes and `out` writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn si_projection_distance2(
    m1: usize,
    m2: usize,
    r: usize,
    u1: *const f64,
    v1: *const f64,
    u2: *const f64,
    v2: *const f64,
    out: *mut f64,
) -> SiStatus {
    guard(|| {
        let mat = |rows, p, name| -> FfiResult<Matrix> {
            Ok(Matrix::new(rows, r, slice(p, rows * r, name)?.to_vec())?)
        };
        let d = projection_distance2(
            &mat(m1, u1, "u1")?,
            &mat(m2, v1, "v1")?,
            &mat(m1, u2, "u2")?,
            &mat(m2, v2, "v2")?,
        )?;
        put(out, d, "out")
    })
}

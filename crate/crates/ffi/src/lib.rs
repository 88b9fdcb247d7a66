//! C ABI over the `ssnc` library.
//!
//! Every entry point returns an [`SsncStatus`]; on failure the message is
//! available from [`ssnc_last_error`] on the same thread. Runs are exposed
//! through the opaque [`SsncRun`] handle, released with [`ssnc_run_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ssnc::directions::{min_eigenpair, nc_direction};
use ssnc::harness::{execute_run, write_trace, ExperimentConfig};
use ssnc::linalg::Matrix;
use ssnc::oracles::{NoiseScaling, OracleConfig};
use ssnc::problems::ProblemSpec;
use ssnc::rng::OracleStreams;
use ssnc::solver::{self, IterationRecord, Method, RunResult, RunStatus, SolverParams};
use ssnc::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsncStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDimension = 3,
    NonFinite = 4,
    NoNegativeCurvature = 5,
    Domain = 6,
    Infeasible = 7,
    Config = 8,
    Diverged = 9,
    NotFound = 10,
    Io = 11,
    Trace = 12,
    OutOfRange = 13,
    Panic = 14,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsncMethod {
    Ss2NcG = 0,
    SsG = 1,
    SsNcCg = 2,
}

impl From<SsncMethod> for Method {
    fn from(m: SsncMethod) -> Self {
        match m {
            SsncMethod::Ss2NcG => Method::Ss2NcG,
            SsncMethod::SsG => Method::SsG,
            SsncMethod::SsNcCg => Method::SsNcCg,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsncRunStatus {
    HitStoppingTime = 0,
    BudgetExhausted = 1,
    Diverged = 2,
}

/// Programmatic run settings: bounded noise with the coupled radii
/// `eps_g = eps_f^(1/2)`, `eps_H = eps_lambda = eps_f^(1/3)` and
/// `e_f = e_f_ratio * eps_f`; other solver parameters take their defaults.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SsncRunSpec {
    pub method: SsncMethod,
    pub eps_f: f64,
    pub e_f_ratio: f64,
    pub max_iters: u64,
    /// 0 means unlimited.
    pub max_fevals: u64,
    pub seed: u64,
    /// Gradient-norm floor of the stationarity test.
    pub epsbar_g: f64,
    /// Curvature floor of the stationarity test.
    pub epsbar_lambda: f64,
    /// Stop after the first stationary iterate instead of running out the budget.
    pub halt_at_stopping_time: bool,
}

/// Scalar fields of one iteration. NaN marks quantities not drawn.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SsncRecord {
    pub k: u64,
    pub fevals: u64,
    pub gevals: u64,
    pub hevals: u64,
    pub f_true: f64,
    pub f_next_true: f64,
    pub grad_true_norm: f64,
    pub lambda_true: f64,
    pub g_est_norm: f64,
    pub lambda_est: f64,
    pub alpha_k: f64,
    pub beta_k: f64,
    pub alpha_next: f64,
    pub beta_next: f64,
    pub omega_g: bool,
    pub omega_h: bool,
    pub theta_g: bool,
    pub theta_h: bool,
    pub i_f: bool,
    pub i_g: bool,
    pub ihat_f: bool,
    pub i_h: bool,
    pub sign_choice: i8,
}

impl From<&IterationRecord> for SsncRecord {
    fn from(r: &IterationRecord) -> Self {
        SsncRecord {
            k: r.k as u64,
            fevals: r.fevals,
            gevals: r.gevals,
            hevals: r.hevals,
            f_true: r.f_true,
            f_next_true: r.f_next_true,
            grad_true_norm: r.grad_true_norm,
            lambda_true: r.lambda_true,
            g_est_norm: r.g_est_norm,
            lambda_est: r.lambda_est,
            alpha_k: r.alpha_k,
            beta_k: r.beta_k,
            alpha_next: r.alpha_next,
            beta_next: r.beta_next,
            omega_g: r.omega_g,
            omega_h: r.omega_h,
            theta_g: r.theta_g,
            theta_h: r.theta_h,
            i_f: r.i_f,
            i_g: r.i_g,
            ihat_f: r.ihat_f,
            i_h: r.i_h,
            sign_choice: r.sign_choice,
        }
    }
}

/// Opaque handle to a finished (or diverged) run.
pub struct SsncRun {
    result: RunResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> SsncStatus {
    match e {
        Error::InvalidDimension(_) => SsncStatus::InvalidDimension,
        Error::NonFinite(_) => SsncStatus::NonFinite,
        Error::NoNegativeCurvature(_) => SsncStatus::NoNegativeCurvature,
        Error::InvalidInput(_) => SsncStatus::InvalidArgument,
        Error::Domain(_) => SsncStatus::Domain,
        Error::Infeasible(_) => SsncStatus::Infeasible,
        Error::Config(_) => SsncStatus::Config,
        Error::Divergence { .. } => SsncStatus::Diverged,
        Error::NotFound(_) => SsncStatus::NotFound,
        Error::Io { .. } => SsncStatus::Io,
        Error::Trace(_) => SsncStatus::Trace,
    }
}

struct Fail(SsncStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type FfiResult = Result<(), Fail>;

fn guard(f: impl FnOnce() -> FfiResult) -> SsncStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsncStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside ssnc".into());
            SsncStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(SsncStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SsncStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn square_matrix(h: *const f64, n: usize) -> Result<Matrix, Fail> {
    if h.is_null() {
        return Err(null("h"));
    }
    if n == 0 {
        return Err(Fail(SsncStatus::InvalidDimension, "n must be positive".into()));
    }
    let len = n
        .checked_mul(n)
        .ok_or(Fail(SsncStatus::InvalidDimension, "n * n overflows".into()))?;
    let data = std::slice::from_raw_parts(h, len).to_vec();
    Ok(Matrix::from_row_major(n, data)?)
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next `ssnc_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ssnc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ssnc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Minimum eigenpair of the symmetric row-major `n x n` matrix `h`.
/// `eigvec` must hold `n` values.
///
/// # Safety
/// `h` must point to `n * n` readable doubles and `eigvec` to `n` writable ones.
#[no_mangle]
pub unsafe extern "C" fn ssnc_min_eigenpair(
    h: *const f64,
    n: usize,
    lambda_min: *mut f64,
    eigvec: *mut f64,
) -> SsncStatus {
    guard(|| {
        if lambda_min.is_null() || eigvec.is_null() {
            return Err(null("output pointer"));
        }
        let m = square_matrix(h, n)?;
        let e = min_eigenpair(&m)?;
        *lambda_min = e.lambda_min;
        ptr::copy_nonoverlapping(e.eigvec.as_ptr(), eigvec, n);
        Ok(())
    })
}

/// Scaled negative-curvature direction `q = delta |lambda_min| v` of `h`,
/// written to `q` (length `n`), with `q^T h q` in `curvature`.
///
/// # Safety
/// `h` must point to `n * n` readable doubles and `q` to `n` writable ones.
#[no_mangle]
pub unsafe extern "C" fn ssnc_nc_direction(
    h: *const f64,
    n: usize,
    gamma: f64,
    delta: f64,
    q: *mut f64,
    curvature: *mut f64,
) -> SsncStatus {
    guard(|| {
        if q.is_null() || curvature.is_null() {
            return Err(null("output pointer"));
        }
        let m = square_matrix(h, n)?;
        let e = min_eigenpair(&m)?;
        let d = nc_direction(&m, &e, gamma, delta)?;
        ptr::copy_nonoverlapping(d.q.as_ptr(), q, n);
        *curvature = d.curvature;
        Ok(())
    })
}

fn store_run(result: RunResult, out: *mut *mut SsncRun) {
    let handle = Box::new(SsncRun { result });
    // SAFETY: callers check `out` for NULL first.
    unsafe { *out = Box::into_raw(handle) };
}

/// Runs a method on a named problem (`rosenbrock2`, `rosenbrockN`,
/// `saddle_quartic`, `quadratic`). `x0` may be NULL for the problem's default
/// start. A diverged run still yields a handle (status `SSNC_DIVERGED`).
///
/// # Safety
/// `problem` must be a NUL-terminated string, `x0` NULL or `x0_len` readable
/// doubles, `spec` a valid pointer and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ssnc_run_problem(
    problem: *const c_char,
    dim: usize,
    x0: *const f64,
    x0_len: usize,
    spec: *const SsncRunSpec,
    out: *mut *mut SsncRun,
) -> SsncStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if spec.is_null() {
            return Err(null("spec"));
        }
        let spec = *spec;
        let name = c_str(problem, "problem")?;
        let p = ProblemSpec::by_name(name, (dim > 0).then_some(dim))?;
        let start = if x0.is_null() {
            p.default_start.clone()
        } else {
            std::slice::from_raw_parts(x0, x0_len).to_vec()
        };
        let ocfg = OracleConfig {
            eps_f: spec.eps_f,
            scaling: NoiseScaling::Coupled,
            ..OracleConfig::default()
        };
        let params = SolverParams {
            e_f_ratio: Some(spec.e_f_ratio),
            max_iters: usize::try_from(spec.max_iters)
                .map_err(|_| Fail(SsncStatus::InvalidArgument, "max_iters too large".into()))?,
            max_fevals: if spec.max_fevals == 0 {
                i64::MAX as u64
            } else {
                spec.max_fevals
            },
            halt_at_stopping_time: spec.halt_at_stopping_time,
            epsbar_g: spec.epsbar_g,
            epsbar_lambda: spec.epsbar_lambda,
            ..SolverParams::default()
        };
        let r = solver::run(
            spec.method.into(),
            &p,
            &ocfg,
            &params,
            &start,
            OracleStreams::new(spec.seed, 0),
        );
        match r {
            Ok(result) => {
                store_run(result, out);
                Ok(())
            }
            Err(Error::Divergence {
                partial,
                iteration,
                reason,
            }) => {
                store_run(*partial, out);
                Err(Fail(
                    SsncStatus::Diverged,
                    format!("diverged at iteration {iteration}: {reason}"),
                ))
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// Runs the experiment described by a TOML config file. `method` may be NULL
/// to use the config's method.
///
/// # Safety
/// `config_path` must be NUL-terminated, `method` NULL or NUL-terminated and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ssnc_run_config(
    config_path: *const c_char,
    method: *const c_char,
    seed: u64,
    out: *mut *mut SsncRun,
) -> SsncStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = PathBuf::from(c_str(config_path, "config_path")?);
        let cfg = ExperimentConfig::load(&path)?;
        let m = if method.is_null() {
            cfg.method
        } else {
            Method::parse(c_str(method, "method")?)?
        };
        let (result, error) = execute_run(&cfg, m, seed)?;
        store_run(result, out);
        match error {
            Some(msg) => Err(Fail(SsncStatus::Diverged, msg)),
            None => Ok(()),
        }
    })
}

/// Releases a run handle. NULL is ignored.
///
/// # Safety
/// `run` must be NULL or a handle from this library not freed before.
#[no_mangle]
pub unsafe extern "C" fn ssnc_run_free(run: *mut SsncRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of recorded iterations; 0 for NULL.
///
/// # Safety
/// `run` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssnc_run_len(run: *const SsncRun) -> usize {
    run.as_ref().map_or(0, |r| r.result.records.len())
}

/// Dimension of the iterates; 0 for NULL or an empty run.
///
/// # Safety
/// `run` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssnc_run_dim(run: *const SsncRun) -> usize {
    run.as_ref()
        .and_then(|r| r.result.records.first())
        .map_or(0, |rec| rec.x.len())
}

/// Terminal status of the run.
///
/// # Safety
/// `run` must be a live handle and `status` writable.
#[no_mangle]
pub unsafe extern "C" fn ssnc_run_status(run: *const SsncRun, status: *mut SsncRunStatus) -> SsncStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        let s = status.as_mut().ok_or_else(|| null("status"))?;
        *s = match r.result.status {
            RunStatus::HitStoppingTime => SsncRunStatus::HitStoppingTime,
            RunStatus::BudgetExhausted => SsncRunStatus::BudgetExhausted,
            RunStatus::Diverged => SsncRunStatus::Diverged,
        };
        Ok(())
    })
}

/// First stationary iteration, or -1 when the run never reached one.
///
/// # Safety
/// `run` must be a live handle and `k` writable.
#[no_mangle]
pub unsafe extern "C" fn ssnc_run_stopping_time(run: *const SsncRun, k: *mut i64) -> SsncStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        let k = k.as_mut().ok_or_else(|| null("k"))?;
        *k = r.result.stopping_time.map_or(-1, |n| n as i64);
        Ok(())
    })
}

/// Total function, gradient and Hessian oracle calls.
///
/// # Safety
/// `run` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssnc_run_eval_counts(
    run: *const SsncRun,
    fevals: *mut u64,
    gevals: *mut u64,
    hevals: *mut u64,
) -> SsncStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        if fevals.is_null() || gevals.is_null() || hevals.is_null() {
            return Err(null("output pointer"));
        }
        *fevals = r.result.feval_count;
        *gevals = r.result.geval_count;
        *hevals = r.result.heval_count;
        Ok(())
    })
}

fn record_at(run: *const SsncRun, k: usize) -> Result<&'static IterationRecord, Fail> {
    // SAFETY: callers pass a live handle; the borrow does not outlive the call.
    let r = unsafe { run.as_ref() }.ok_or_else(|| null("run"))?;
    r.result.records.get(k).ok_or(Fail(
        SsncStatus::OutOfRange,
        format!("iteration {k} out of range (run has {})", r.result.records.len()),
    ))
}

/// Scalar fields of iteration `k`.
///
/// # Safety
/// `run` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ssnc_run_record(run: *const SsncRun, k: usize, out: *mut SsncRecord) -> SsncStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = SsncRecord::from(record_at(run, k)?);
        Ok(())
    })
}

/// Copies the iterate produced by iteration `k` (`x_{k+1}`) into `x`, which
/// must hold `cap >= ssnc_run_dim(run)` values.
///
/// # Safety
/// `run` must be a live handle and `x` must have `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ssnc_run_iterate(run: *const SsncRun, k: usize, x: *mut f64, cap: usize) -> SsncStatus {
    guard(|| {
        if x.is_null() {
            return Err(null("x"));
        }
        let rec = record_at(run, k)?;
        if cap < rec.x_next.len() {
            return Err(Fail(
                SsncStatus::InvalidArgument,
                format!("buffer holds {cap} values, iterate has {}", rec.x_next.len()),
            ));
        }
        ptr::copy_nonoverlapping(rec.x_next.as_ptr(), x, rec.x_next.len());
        Ok(())
    })
}

/// Writes the run's trace CSV to `path`.
///
/// # Safety
/// `run` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ssnc_run_write_trace(run: *const SsncRun, path: *const c_char) -> SsncStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        let p = PathBuf::from(c_str(path, "path")?);
        write_trace(&p, &r.result.records)?;
        Ok(())
    })
}

//! C interface to the `snse` solver.
//!
//! Every fallible call returns an [`SnseStatus`]. On failure the message is
//! kept per thread and can be copied out with [`snse_last_error_message`].
//! Solvers are opaque handles released with [`snse_solver_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use num_complex::Complex64;
use snse::cli::{parse_config, run_experiment, Mode};
use snse::diagnostics::norms;
use snse::harmonics::{FieldKind, SpectralField};
use snse::noise::{NoiseSpec, SigmaRule};
use snse::solver::{Scheme, SimState, Solver, SolverConfig};
use snse::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnseStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Resolution = 4,
    BlowUp = 5,
    Contraction = 6,
    Summability = 7,
    Io = 8,
    /// The experiment ran but one of its checks failed.
    CheckFailed = 9,
    Panic = 10,
}

/// Time-stepping scheme selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnseScheme {
    ImexEuler = 0,
    ImexHeun = 1,
    Picard = 2,
}

/// Parameters for [`snse_solver_new`]. Noise amplitudes are `sigma_l = l^-sigma_gamma`,
/// or zero when `sigma_gamma` is NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SnseParams {
    pub lmax: u32,
    pub dt: f64,
    pub t_end: f64,
    pub nu: f64,
    pub omega: f64,
    pub alpha: f64,
    pub scheme: SnseScheme,
    pub beta: f64,
    pub sigma_gamma: f64,
    pub delta: f64,
    pub n_substeps: u32,
    pub seed: u64,
}

/// Norms of the current `v`, plus `|u|_{L4}` of `u = v + z`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnseNorms {
    pub h: f64,
    pub v: f64,
    pub da: f64,
    pub l4_u: f64,
}

/// Opaque solver handle.
pub struct SnseSolver {
    solver: Solver,
    state: SimState,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> SnseStatus {
    match e {
        Error::Domain(_) | Error::Shape(_) | Error::QuadratureConvergence { .. } => {
            SnseStatus::InvalidArgument
        }
        Error::Resolution { .. } => SnseStatus::Resolution,
        Error::BlowUp { .. } => SnseStatus::BlowUp,
        Error::ContractionFailure { .. } => SnseStatus::Contraction,
        Error::Summability(_) => SnseStatus::Summability,
        Error::Config(_) => SnseStatus::Config,
        Error::Snapshot(_) | Error::Io(_) => SnseStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SnseStatus, String)>) -> SnseStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SnseStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SnseStatus::Panic
        }
    }
}

fn lift<T>(r: snse::Result<T>) -> Result<T, (SnseStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SnseStatus, String) {
    (SnseStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, (SnseStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| {
        (
            SnseStatus::InvalidArgument,
            "path is not valid UTF-8".to_string(),
        )
    })?;
    Ok(Path::new(s))
}

fn boxed(solver: Solver) -> Result<*mut SnseSolver, (SnseStatus, String)> {
    let state = lift(solver.initial_state())?;
    Ok(Box::into_raw(Box::new(SnseSolver { solver, state })))
}

/// Library version as `major * 10000 + minor * 100 + patch`.
#[no_mangle]
pub extern "C" fn snse_version() -> u32 {
    let v = |s: &str| s.parse::<u32>().unwrap_or(0);
    v(env!("CARGO_PKG_VERSION_MAJOR")) * 10000
        + v(env!("CARGO_PKG_VERSION_MINOR")) * 100
        + v(env!("CARGO_PKG_VERSION_PATCH"))
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn snse_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Defaults: `lmax = 12`, `dt = 0.01`, `t_end = 1`, `nu = 1`, no rotation,
/// no damping, IMEX Heun, Gaussian noise switched off.
#[no_mangle]
pub extern "C" fn snse_params_default() -> SnseParams {
    SnseParams {
        lmax: 12,
        dt: 0.01,
        t_end: 1.0,
        nu: 1.0,
        omega: 0.0,
        alpha: 0.0,
        scheme: SnseScheme::ImexHeun,
        beta: 2.0,
        sigma_gamma: f64::NAN,
        delta: 0.0,
        n_substeps: 1,
        seed: 0,
    }
}

/// Creates a solver with zero initial data and zero forcing.
///
/// # Safety
/// `params` must point to a valid `SnseParams`; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn snse_solver_new(
    params: *const SnseParams,
    out: *mut *mut SnseSolver,
) -> SnseStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut cfg = SolverConfig::new(p.lmax as usize, p.dt, p.t_end);
        cfg.nu = p.nu;
        cfg.omega = p.omega;
        cfg.alpha = p.alpha;
        cfg.scheme = match p.scheme {
            SnseScheme::ImexEuler => Scheme::ImexEuler,
            SnseScheme::ImexHeun => Scheme::ImexHeun,
            SnseScheme::Picard => Scheme::Picard,
        };
        let sigma = if p.sigma_gamma.is_nan() {
            SigmaRule::Const { value: 0.0 }
        } else {
            SigmaRule::Power {
                gamma: p.sigma_gamma,
            }
        };
        let spec = lift(NoiseSpec::new(p.beta, sigma, p.delta, p.seed, p.n_substeps))?;
        *out = boxed(lift(Solver::new(cfg, spec, 0))?)?;
        Ok(())
    })
}

/// Creates a solver from a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn snse_solver_from_config(
    path: *const c_char,
    out: *mut *mut SnseSolver,
) -> SnseStatus {
    guard(|| {
        let path = path_arg(path)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = parse_config(path, Some(Mode::Simulate))
            .map_err(|e| (SnseStatus::Config, e.to_string()))?;
        *out = boxed(lift(Solver::new(cfg.solver, cfg.noise, 0))?)?;
        Ok(())
    })
}

/// Releases a solver. Null is ignored.
///
/// # Safety
/// `solver` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn snse_solver_free(solver: *mut SnseSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Advances `n_steps` steps. On error the state stays at the last good step.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn snse_solver_step(solver: *mut SnseSolver, n_steps: u64) -> SnseStatus {
    guard(|| {
        let s = solver.as_mut().ok_or_else(|| null("solver"))?;
        for _ in 0..n_steps {
            s.state = lift(s.solver.step(&s.state))?.0;
        }
        Ok(())
    })
}

/// Current time.
///
/// # Safety
/// `solver` must be a live handle; `t` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn snse_solver_time(solver: *const SnseSolver, t: *mut f64) -> SnseStatus {
    guard(|| {
        let s = solver.as_ref().ok_or_else(|| null("solver"))?;
        *t.as_mut().ok_or_else(|| null("t"))? = s.state.t;
        Ok(())
    })
}

/// Norms of the current state.
///
/// # Safety
/// `solver` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn snse_solver_norms(
    solver: *const SnseSolver,
    out: *mut SnseNorms,
) -> SnseStatus {
    guard(|| {
        let s = solver.as_ref().ok_or_else(|| null("solver"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let ctx = s.solver.context();
        let n = lift(norms(&s.state.v, ctx))?;
        let u = s.state.v.add(&s.state.ou.z);
        *out = SnseNorms {
            h: n.h,
            v: n.v,
            da: n.da,
            l4_u: lift(norms(&u, ctx))?.l4,
        };
        Ok(())
    })
}

/// Number of complex stream coefficients of `v` (`(l, m)` with `1 <= l <= lmax`, `0 <= m <= l`).
///
/// # Safety
/// `solver` must be null or a live handle. Returns 0 for null.
#[no_mangle]
pub unsafe extern "C" fn snse_solver_coeff_count(solver: *const SnseSolver) -> usize {
    solver.as_ref().map_or(0, |s| s.state.v.coeffs().len())
}

/// Copies the coefficients of `v` as interleaved `(re, im)` pairs, l-major.
/// `len` counts doubles and must be at least twice the coefficient count.
///
/// # Safety
/// `solver` must be a live handle; `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn snse_solver_get_v(
    solver: *const SnseSolver,
    buf: *mut f64,
    len: usize,
) -> SnseStatus {
    guard(|| {
        let s = solver.as_ref().ok_or_else(|| null("solver"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let c = s.state.v.coeffs();
        if len < 2 * c.len() {
            return Err((
                SnseStatus::InvalidArgument,
                format!("buffer holds {len} doubles, need {}", 2 * c.len()),
            ));
        }
        let out = std::slice::from_raw_parts_mut(buf, 2 * c.len());
        for (pair, z) in out.chunks_exact_mut(2).zip(c) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        Ok(())
    })
}

/// Replaces `v` and restarts the solver at `t = 0` with fresh noise.
/// Layout as in [`snse_solver_get_v`]; `len` must equal twice the coefficient count.
///
/// # Safety
/// `solver` must be a live handle; `buf` must be valid for `len` reads.
#[no_mangle]
pub unsafe extern "C" fn snse_solver_set_v(
    solver: *mut SnseSolver,
    buf: *const f64,
    len: usize,
) -> SnseStatus {
    guard(|| {
        let s = solver.as_mut().ok_or_else(|| null("solver"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let lmax = s.solver.config().lmax;
        let n = s.state.v.coeffs().len();
        if len != 2 * n {
            return Err((
                SnseStatus::InvalidArgument,
                format!("expected {} doubles, got {len}", 2 * n),
            ));
        }
        let vals = std::slice::from_raw_parts(buf, len);
        let coeffs = vals
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        let v0 = lift(SpectralField::from_coeffs(lmax, FieldKind::Stream, coeffs))?;
        let mut cfg = s.solver.config().clone();
        cfg.v0 = v0;
        let solver = lift(Solver::new(cfg, s.solver.noise().clone(), 0))?;
        s.state = lift(solver.initial_state())?;
        s.solver = solver;
        Ok(())
    })
}

/// Runs the experiment described by a configuration file, writing its
/// artifacts. Returns [`SnseStatus::CheckFailed`] when a verification check fails.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn snse_run_config(path: *const c_char) -> SnseStatus {
    guard(|| {
        let path = path_arg(path)?;
        let cfg = parse_config(path, None).map_err(|e| (SnseStatus::Config, e.to_string()))?;
        let out = lift(run_experiment(&cfg))?;
        if out.passed {
            Ok(())
        } else {
            Err((SnseStatus::CheckFailed, out.summary))
        }
    })
}

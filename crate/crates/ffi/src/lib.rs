//! C ABI over `gbsim`.
//!
//! Every fallible call returns a [`GbStatus`]; on failure the message is
//! available from [`gb_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use gbsim::config::RunConfig;
use gbsim::diagnostics::{Diagnostics, DiagnosticsRecord};
use gbsim::kernels::kernel_k;
use gbsim::moc::{certify, lambda_select, CertificateReport, CertifyOptions, MocConstants, Modulus};
use gbsim::model::DensityState;
use gbsim::runner::{diagnostics_for, initial_state};
use gbsim::stepper::Stepper;
use gbsim::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Config = 4,
    NonFinite = 5,
    Quadrature = 6,
    Io = 7,
    Panic = 8,
}

/// Number of values in one diagnostics record.
pub const GB_DIAGNOSTICS_LEN: usize = 17;

/// Columns of a certificate report.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GbCertColumn {
    Xi = 0,
    Omega = 1,
    OmegaPrime = 2,
    BigOmega = 3,
    Psi = 4,
    Margin = 5,
    ErrorBound = 6,
}

/// Opaque simulation handle.
pub struct GbSimulation {
    params: gbsim::model::ModelParams,
    state: DensityState,
    stepper: Stepper,
    diag: Diagnostics,
}

/// Opaque certificate report.
pub struct GbCertificate {
    report: CertificateReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(GbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config { .. } => GbStatus::Config,
            Error::NonFinite(_) => GbStatus::NonFinite,
            Error::Quadrature { .. } => GbStatus::Quadrature,
            Error::Io(_) | Error::Snapshot(_) => GbStatus::Io,
            _ => GbStatus::InvalidArgument,
        };
        Fail(code, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(GbStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GbStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            GbStatus::Panic
        }
    }
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    if len < need {
        return Err(Fail(GbStatus::BufferTooSmall, format!("{what}: need {need} values, got {len}")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Comma-separated names of the diagnostics record values.
#[no_mangle]
pub extern "C" fn gb_diagnostics_columns() -> *const c_char {
    static HEADER: std::sync::OnceLock<CString> = std::sync::OnceLock::new();
    HEADER.get_or_init(|| CString::new(DiagnosticsRecord::CSV_HEADER).unwrap()).as_ptr()
}

/// Message of the last failed call on this thread, empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a simulation from `key = value` config text. Output settings are
/// ignored; nothing is written to disk.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gb_simulation_new(config: *const c_char, out: *mut *mut GbSimulation) -> GbStatus {
    guard(|| {
        if config.is_null() {
            return Err(null("config"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|e| Fail(GbStatus::InvalidArgument, format!("config is not UTF-8: {e}")))?;
        let cfg = RunConfig::parse(text)?;
        let state = initial_state(&cfg)?;
        let (diag, _) = diagnostics_for(&cfg, &state)?;
        let stepper = Stepper::new(cfg.params, cfg.stepper)?;
        let sim = GbSimulation { params: cfg.params, state, stepper, diag };
        out.write(Box::into_raw(Box::new(sim)));
        Ok(())
    })
}

/// Releases a simulation. Null is ignored.
///
/// # Safety
/// `sim` must come from [`gb_simulation_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gb_simulation_free(sim: *mut GbSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Takes `n_steps` steps of the configured size (or CFL step).
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gb_simulation_step(sim: *mut GbSimulation, n_steps: usize) -> GbStatus {
    guard(|| {
        let s = handle_mut(sim, "sim")?;
        for _ in 0..n_steps {
            s.state = s.stepper.step(&s.state)?;
        }
        Ok(())
    })
}

/// Steps until time `t_end`, shortening the last step.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gb_simulation_advance_to(sim: *mut GbSimulation, t_end: f64) -> GbStatus {
    guard(|| {
        let s = handle_mut(sim, "sim")?;
        if !t_end.is_finite() {
            return Err(Fail(GbStatus::InvalidArgument, format!("t_end = {t_end} must be finite")));
        }
        s.state = s.stepper.advance_to(&s.state, t_end)?;
        Ok(())
    })
}

/// Current simulation time.
///
/// # Safety
/// `sim` must be a live handle and `t` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gb_simulation_time(sim: *const GbSimulation, t: *mut f64) -> GbStatus {
    guard(|| write_out(t, handle(sim, "sim")?.state.t(), "t"))
}

/// Grid dimensions.
///
/// # Safety
/// `sim` must be a live handle and the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn gb_simulation_grid(sim: *const GbSimulation, n1: *mut usize, n2: *mut usize) -> GbStatus {
    guard(|| {
        let g = handle(sim, "sim")?.state.grid();
        write_out(n1, g.n1(), "n1")?;
        write_out(n2, g.n2(), "n2")
    })
}

/// Copies both state fields, row-major, into buffers of at least `n1 * n2`.
///
/// # Safety
/// `sim` must be a live handle; `plus` and `minus` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gb_simulation_fields(
    sim: *const GbSimulation,
    plus: *mut f64,
    minus: *mut f64,
    len: usize,
) -> GbStatus {
    guard(|| {
        let s = handle(sim, "sim")?;
        let n = s.state.grid().len();
        out_slice(plus, len, n, "plus")?.copy_from_slice(s.state.plus().values());
        out_slice(minus, len, n, "minus")?.copy_from_slice(s.state.minus().values());
        Ok(())
    })
}

/// Diagnostics of the current state in the order of
/// [`gb_diagnostics_columns`]. The blow-up integral accumulates over calls.
///
/// # Safety
/// `sim` must be a live handle; `out` must hold `len >= 17` values.
#[no_mangle]
pub unsafe extern "C" fn gb_simulation_diagnostics(sim: *mut GbSimulation, out: *mut f64, len: usize) -> GbStatus {
    guard(|| {
        let s = handle_mut(sim, "sim")?;
        let dst = out_slice(out, len, GB_DIAGNOSTICS_LEN, "out")?;
        let rec = s.diag.record(&s.state, &s.params)?;
        dst.copy_from_slice(&rec.values());
        Ok(())
    })
}

/// Certifies `MOCAlpha(delta)` (or `MOC1(delta, gamma)` at `alpha = 1`) with
/// default constants and `lambda` from the two norms. A NaN `gamma` selects
/// `delta / 10`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gb_certify(
    alpha: f64,
    delta: f64,
    gamma: f64,
    theta_norm: f64,
    grad_norm: f64,
    n_samples: usize,
    out: *mut *mut GbCertificate,
) -> GbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = if alpha == 1.0 {
            Modulus::moc1(delta, if gamma.is_nan() { delta / 10.0 } else { gamma })?
        } else {
            Modulus::moc_alpha(delta)?
        };
        let c = MocConstants::defaults(alpha)?;
        let lam = lambda_select(theta_norm, grad_norm, alpha, &m)?;
        let opts = CertifyOptions { n_samples, ..Default::default() };
        let report = certify(alpha, &m, lam.lambda, theta_norm, &c, &opts)?;
        out.write(Box::into_raw(Box::new(GbCertificate { report })));
        Ok(())
    })
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `cert` must come from [`gb_certify`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gb_certificate_free(cert: *mut GbCertificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

/// Overall verdict, sample count and worst `margin + error bound`.
///
/// # Safety
/// `cert` must be a live handle and the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn gb_certificate_summary(
    cert: *const GbCertificate,
    pass: *mut bool,
    n_samples: *mut usize,
    worst: *mut f64,
) -> GbStatus {
    guard(|| {
        let r = &handle(cert, "cert")?.report;
        write_out(pass, r.pass, "pass")?;
        write_out(n_samples, r.xi_samples.len(), "n_samples")?;
        write_out(worst, r.worst(), "worst")
    })
}

/// Copies one report column into `out`, which must hold `n_samples` values.
///
/// # Safety
/// `cert` must be a live handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gb_certificate_column(
    cert: *const GbCertificate,
    column: GbCertColumn,
    out: *mut f64,
    len: usize,
) -> GbStatus {
    guard(|| {
        let r = &handle(cert, "cert")?.report;
        let src = match column {
            GbCertColumn::Xi => &r.xi_samples,
            GbCertColumn::Omega => &r.omega_vals,
            GbCertColumn::OmegaPrime => &r.omega_prime_vals,
            GbCertColumn::BigOmega => &r.big_omega_vals,
            GbCertColumn::Psi => &r.psi_vals,
            GbCertColumn::Margin => &r.margins,
            GbCertColumn::ErrorBound => &r.quad_error_bounds,
        };
        out_slice(out, len, src.len(), "out")?.copy_from_slice(src);
        Ok(())
    })
}

/// Fractional heat kernel at unit time for `n` radii.
///
/// # Safety
/// `radii` and `out` must each hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn gb_kernel(alpha: f64, radii: *const f64, n: usize, out: *mut f64) -> GbStatus {
    guard(|| {
        if radii.is_null() {
            return Err(null("radii"));
        }
        let r = if n == 0 { &[][..] } else { std::slice::from_raw_parts(radii, n) };
        let dst = out_slice(out, n, n, "out")?;
        let table = kernel_k(alpha, r)?;
        dst.copy_from_slice(&table.values);
        Ok(())
    })
}

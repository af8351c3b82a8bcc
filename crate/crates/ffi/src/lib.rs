//! C ABI for the closed-form squeezing model.
//!
//! The handle type [`CsSystem`] is opaque; every function returns a
//! [`CsStatus`] code and writes results through out-pointers. A thread-local
//! message with details of the last failure is available via
//! [`cs_last_error_message`]. Frequencies cross the boundary as linear MHz,
//! matching the published parameter values; times are µs.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::ptr;

use num_complex::Complex64;

use cavity_squeeze::analytic::{
    optimal_angle, quadrature_autocorrelation, squeezing_kernel, squeezing_spectrum,
};
use cavity_squeeze::dressed::dressed_detunings;
use cavity_squeeze::metrics::{drive_calibration, mean_photon_number, DriveConvention};
use cavity_squeeze::params::{
    eta_out_from_mirror_budget, preset, ExperimentPreset, PresetName, SystemParams,
    PROBE_POWER_W, PROBE_WAVELENGTH_M,
};
use cavity_squeeze::units::{mhz_to_rad_us, rad_us_to_mhz};
use cavity_squeeze::Error;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

/// Status codes returned by every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    CsOk = 0,
    CsErrNullArg = 1,
    CsErrInvalidArg = 2,
    CsErrInvalidParams = 3,
    CsErrDomain = 4,
    CsErrNumerics = 5,
    CsErrUtf8 = 6,
    CsErrUnknownName = 7,
}

fn status_from(err: &Error) -> CsStatus {
    match err {
        Error::InvalidParams(_) => CsStatus::CsErrInvalidParams,
        Error::Domain(_) => CsStatus::CsErrDomain,
        Error::Config(_) => CsStatus::CsErrUnknownName,
        _ => CsStatus::CsErrNumerics,
    }
}

fn fail(err: Error) -> CsStatus {
    let code = status_from(&err);
    set_error(err.to_string());
    code
}

/// Opaque system handle: preset parameters plus the detection budget.
pub struct CsSystem {
    preset: ExperimentPreset,
}

/// Complex value as a (re, im) pair.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CsComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for CsComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Dressed-doublet complex detunings in linear MHz: re = detuning,
/// im = half-linewidth.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CsDressed {
    pub omega_plus_mhz: CsComplex,
    pub omega_minus_mhz: CsComplex,
}

/// Squeezing-kernel summary (dimensionless).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CsKernelInfo {
    pub k_factor: CsComplex,
    pub sigma_mean: CsComplex,
    pub alpha_plus: CsComplex,
    pub alpha_minus: CsComplex,
    pub delta_a2: CsComplex,
}

/// Drive-calibration convention.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsDriveConvention {
    CsDriveInputCoupling = 0,
    CsDriveTotalKappa = 1,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the last error message of this thread into `buf` (truncated,
/// NUL-terminated). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be NULL (query length only).
#[no_mangle]
pub unsafe extern "C" fn cs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Create a system from a named preset ("configA" or "configB").
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_system_preset(name: *const c_char, out: *mut *mut CsSystem) -> CsStatus {
    if name.is_null() || out.is_null() {
        set_error("NULL argument");
        return CsStatus::CsErrNullArg;
    }
    let name = match CStr::from_ptr(name).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("preset name is not valid UTF-8");
            return CsStatus::CsErrUtf8;
        }
    };
    let parsed: PresetName = match name.parse() {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    *out = Box::into_raw(Box::new(CsSystem { preset: preset(parsed) }));
    CsStatus::CsOk
}

/// Create a system from explicit parameters (linear MHz). The detection
/// budget defaults to the mirror-budget η_out, η_d = 0.55 and P_in = 8.5 pW.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_system_new(
    g_mhz: f64,
    kappa_mhz: f64,
    gamma_mhz: f64,
    gamma_motion_mhz: f64,
    delta_c_mhz: f64,
    delta_a_mhz: f64,
    epsilon_mhz: f64,
    out: *mut *mut CsSystem,
) -> CsStatus {
    if out.is_null() {
        set_error("NULL argument");
        return CsStatus::CsErrNullArg;
    }
    let params = SystemParams::from_linear_mhz(
        g_mhz,
        kappa_mhz,
        gamma_mhz,
        gamma_motion_mhz,
        delta_c_mhz,
        delta_a_mhz,
        epsilon_mhz,
        PROBE_WAVELENGTH_M,
    );
    let report = params.validate();
    if !report.is_ok() {
        set_error(report.to_string());
        return CsStatus::CsErrInvalidParams;
    }
    let preset = ExperimentPreset {
        name: "custom".to_string(),
        params,
        eta_out: eta_out_from_mirror_budget(),
        eta_d: 0.55,
        p_in: PROBE_POWER_W,
    };
    *out = Box::into_raw(Box::new(CsSystem { preset }));
    CsStatus::CsOk
}

/// Release a system handle. NULL is tolerated.
///
/// # Safety
/// `sys` must have been produced by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn cs_system_free(sys: *mut CsSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

unsafe fn borrow<'a>(sys: *const CsSystem) -> Option<&'a CsSystem> {
    sys.as_ref()
}

/// Set the drive amplitude directly (linear MHz).
///
/// # Safety
/// `sys` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn cs_system_set_epsilon_mhz(sys: *mut CsSystem, eps_mhz: f64) -> CsStatus {
    let Some(sys) = sys.as_mut() else {
        set_error("NULL argument");
        return CsStatus::CsErrNullArg;
    };
    if eps_mhz.is_nan() || eps_mhz < 0.0 {
        set_error("epsilon must be non-negative");
        return CsStatus::CsErrInvalidArg;
    }
    sys.preset.params.epsilon = mhz_to_rad_us(eps_mhz);
    CsStatus::CsOk
}

/// Calibrate the drive from the preset's input power under a convention;
/// the resulting ε (linear MHz) is stored and also written to `eps_mhz_out`
/// when non-NULL.
///
/// # Safety
/// `sys` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn cs_system_calibrate_drive(
    sys: *mut CsSystem,
    convention: CsDriveConvention,
    eps_mhz_out: *mut f64,
) -> CsStatus {
    let Some(sys) = sys.as_mut() else {
        set_error("NULL argument");
        return CsStatus::CsErrNullArg;
    };
    let conv = match convention {
        CsDriveConvention::CsDriveInputCoupling => DriveConvention::InputCoupling,
        CsDriveConvention::CsDriveTotalKappa => DriveConvention::TotalKappa,
    };
    match drive_calibration(
        sys.preset.p_in,
        sys.preset.params.wavelength,
        sys.preset.params.kappa,
        sys.preset.eta_out,
        conv,
    ) {
        Ok(eps) => {
            sys.preset.params.epsilon = eps;
            if !eps_mhz_out.is_null() {
                *eps_mhz_out = rad_us_to_mhz(eps);
            }
            CsStatus::CsOk
        }
        Err(e) => fail(e),
    }
}

/// Complex detunings of the n-excitation dressed doublet, linear MHz.
///
/// # Safety
/// `sys` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cs_dressed_detunings(
    sys: *const CsSystem,
    n: u32,
    include_motion: bool,
    out: *mut CsDressed,
) -> CsStatus {
    let (Some(sys), false) = (borrow(sys), out.is_null()) else {
        set_error("NULL argument");
        return CsStatus::CsErrNullArg;
    };
    match dressed_detunings(&sys.preset.params, n, include_motion) {
        Ok(m) => {
            *out = CsDressed {
                omega_plus_mhz: CsComplex {
                    re: rad_us_to_mhz(m.omega_plus.re),
                    im: rad_us_to_mhz(m.omega_plus.im),
                },
                omega_minus_mhz: CsComplex {
                    re: rad_us_to_mhz(m.omega_minus.re),
                    im: rad_us_to_mhz(m.omega_minus.im),
                },
            };
            CsStatus::CsOk
        }
        Err(e) => fail(e),
    }
}

/// Squeezing kernel (K, ⟨σ⟩, α±, ⟨Δa²⟩) at the current drive.
///
/// # Safety
/// `sys` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cs_squeezing_kernel(
    sys: *const CsSystem,
    include_motion: bool,
    out: *mut CsKernelInfo,
) -> CsStatus {
    let (Some(sys), false) = (borrow(sys), out.is_null()) else {
        set_error("NULL argument");
        return CsStatus::CsErrNullArg;
    };
    match squeezing_kernel(&sys.preset.params, include_motion) {
        Ok(k) => {
            *out = CsKernelInfo {
                k_factor: k.k_factor.into(),
                sigma_mean: k.sigma_mean.into(),
                alpha_plus: k.alpha_plus.into(),
                alpha_minus: k.alpha_minus.into(),
                delta_a2: k.delta_a2().into(),
            };
            CsStatus::CsOk
        }
        Err(e) => fail(e),
    }
}

/// ⟨:ΔX_θ(τ)ΔX_θ(0):⟩ evaluated on `len` lags (µs) into `out`.
///
/// # Safety
/// `tau_us` and `out` must point to `len` readable/writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cs_autocorrelation(
    sys: *const CsSystem,
    theta: f64,
    include_motion: bool,
    tau_us: *const f64,
    out: *mut f64,
    len: usize,
) -> CsStatus {
    let (Some(sys), false, false) = (borrow(sys), tau_us.is_null(), out.is_null()) else {
        set_error("NULL argument");
        return CsStatus::CsErrNullArg;
    };
    let taus = std::slice::from_raw_parts(tau_us, len);
    match quadrature_autocorrelation(&sys.preset.params, theta, taus, include_motion) {
        Ok(series) => {
            std::slice::from_raw_parts_mut(out, len).copy_from_slice(&series.values);
            CsStatus::CsOk
        }
        Err(e) => fail(e),
    }
}

/// Squeezing spectrum S_θ (linear, shot noise = 1) on `len` frequencies
/// (linear MHz) with overall efficiency `eta`.
///
/// # Safety
/// `freq_mhz` and `out` must point to `len` readable/writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cs_spectrum(
    sys: *const CsSystem,
    theta: f64,
    eta: f64,
    include_motion: bool,
    freq_mhz: *const f64,
    out: *mut f64,
    len: usize,
) -> CsStatus {
    let (Some(sys), false, false) = (borrow(sys), freq_mhz.is_null(), out.is_null()) else {
        set_error("NULL argument");
        return CsStatus::CsErrNullArg;
    };
    let omegas: Vec<f64> = std::slice::from_raw_parts(freq_mhz, len)
        .iter()
        .map(|f| mhz_to_rad_us(*f))
        .collect();
    match squeezing_spectrum(&sys.preset.params, theta, eta, &omegas, include_motion) {
        Ok(series) => {
            std::slice::from_raw_parts_mut(out, len).copy_from_slice(&series.values);
            CsStatus::CsOk
        }
        Err(e) => fail(e),
    }
}

/// Quadrature angle minimizing the equal-time variance and that minimum.
///
/// # Safety
/// Out-pointers must be valid when non-NULL.
#[no_mangle]
pub unsafe extern "C" fn cs_optimal_angle(
    sys: *const CsSystem,
    include_motion: bool,
    theta_min: *mut f64,
    value: *mut f64,
) -> CsStatus {
    let Some(sys) = borrow(sys) else {
        set_error("NULL argument");
        return CsStatus::CsErrNullArg;
    };
    match optimal_angle(&sys.preset.params, include_motion) {
        Ok((t, v)) => {
            if !theta_min.is_null() {
                *theta_min = t;
            }
            if !value.is_null() {
                *value = v;
            }
            CsStatus::CsOk
        }
        Err(e) => fail(e),
    }
}

/// Mean intracavity photon number |⟨a⟩|² at the current drive (bare γ).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_mean_photon_number(sys: *const CsSystem, out: *mut f64) -> CsStatus {
    let (Some(sys), false) = (borrow(sys), out.is_null()) else {
        set_error("NULL argument");
        return CsStatus::CsErrNullArg;
    };
    match mean_photon_number(&sys.preset.params) {
        Ok(n) => {
            *out = n;
            CsStatus::CsOk
        }
        Err(e) => fail(e),
    }
}

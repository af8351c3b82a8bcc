//! Unit conventions and physical constants.
//!
//! All internal frequencies and rates are angular, in rad/µs; all times are in
//! µs. Configuration files and the CLI accept linear frequencies in MHz, as
//! quoted in the literature (ν = ω/2π), and are converted on input. A linear
//! 1 MHz thus becomes 2π rad/µs.

use std::f64::consts::TAU;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.62607015e-34;

/// Speed of light in vacuum, m/s.
pub const LIGHT_SPEED: f64 = 2.99792458e8;

/// Convert a linear frequency in MHz to an angular rate in rad/µs.
#[inline]
pub fn mhz_to_rad_us(f_mhz: f64) -> f64 {
    TAU * f_mhz
}

/// Convert an angular rate in rad/µs to a linear frequency in MHz.
#[inline]
pub fn rad_us_to_mhz(w: f64) -> f64 {
    w / TAU
}

/// Convert an angular rate in rad/µs to rad/s.
#[inline]
pub fn rad_us_to_rad_s(w: f64) -> f64 {
    w * 1e6
}

/// Photon flux (photons/s) carried by optical power `p_w` (W) at wavelength
/// `lambda_m` (m): Φ = P λ / (h c).
#[inline]
pub fn photon_flux(p_w: f64, lambda_m: f64) -> f64 {
    p_w * lambda_m / (PLANCK * LIGHT_SPEED)
}

/// Linear power ratio expressed in mdB (10⁻³ dB).
#[inline]
pub fn linear_to_mdb(s: f64) -> f64 {
    1e3 * 10.0 * s.log10()
}

/// Inverse of [`linear_to_mdb`].
#[inline]
pub fn mdb_to_linear(mdb: f64) -> f64 {
    10f64.powf(mdb / 1e4)
}

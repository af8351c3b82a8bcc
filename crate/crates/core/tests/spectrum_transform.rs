//! Independent quadrature oracle for the closed-form spectrum: the
//! two-Lorentzian expression must agree with a direct numerical cosine
//! transform of the autocorrelation series,
//! S_θ(Ω) = 1 + 8ηκ ∫₀^∞ dτ cos(Ωτ) ⟨:ΔX_θ(τ)ΔX_θ(0):⟩,
//! to a relative 1e-6 on the squeezing signal.

use std::f64::consts::FRAC_PI_2;

use cavity_squeeze::analytic::{quadrature_autocorrelation, squeezing_spectrum};
use cavity_squeeze::dressed::dressed_detunings;
use cavity_squeeze::metrics::{drive_calibration, DriveConvention};
use cavity_squeeze::params::{preset, PresetName, SystemParams};
use cavity_squeeze::units::mhz_to_rad_us;

/// Composite-Simpson one-sided cosine transform of f sampled on [0, tau_max].
fn cosine_transform(values: &[f64], tau_max: f64, omega: f64) -> f64 {
    let n = values.len() - 1;
    assert!(n % 2 == 0);
    let h = tau_max / n as f64;
    let mut acc = 0.0;
    for (k, v) in values.iter().enumerate() {
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * (omega * (k as f64 * h)).cos() * v;
    }
    acc * h / 3.0
}

fn check_preset(params: &SystemParams, eta: f64, motion: bool) {
    let manifold = dressed_detunings(params, 1, motion).unwrap();
    let tau_max = 30.0 / manifold.omega_plus.im.min(manifold.omega_minus.im);
    let n = 1 << 15;
    let taus: Vec<f64> = (0..=n).map(|k| tau_max * k as f64 / n as f64).collect();
    for theta in [0.0, FRAC_PI_2, 0.7] {
        let corr = quadrature_autocorrelation(params, theta, &taus, motion).unwrap();
        for f_mhz in [2.0, 5.0, 8.2, 8.6, 12.0, 16.6, 25.0] {
            let omega = mhz_to_rad_us(f_mhz);
            let closed = squeezing_spectrum(params, theta, eta, &[omega], motion).unwrap().values[0];
            let transformed =
                1.0 + 8.0 * eta * params.kappa * cosine_transform(&corr.values, tau_max, omega);
            let signal = (closed - 1.0).abs().max(1e-9);
            let rel = (transformed - closed).abs() / signal;
            assert!(
                rel <= 1e-6,
                "θ={theta}, f={f_mhz} MHz: closed {closed:.12e} vs transform {transformed:.12e} (rel {rel:.2e})"
            );
        }
    }
}

#[test]
fn closed_form_equals_cosine_transform_config_a() {
    let pre = preset(PresetName::ConfigA);
    let eps = drive_calibration(
        pre.p_in,
        pre.params.wavelength,
        pre.params.kappa,
        pre.eta_out,
        DriveConvention::InputCoupling,
    )
    .unwrap();
    check_preset(&pre.params.with_epsilon(eps), pre.eta_out, true);
}

#[test]
fn closed_form_equals_cosine_transform_config_b() {
    let pre = preset(PresetName::ConfigB);
    check_preset(&pre.params.with_epsilon(mhz_to_rad_us(1.0)), 1.0, false);
}

//! Closed-form weak-excitation model of the squeezing process.
//!
//! In the weak-drive regime (⟨σ_z⟩ ≈ −1) the steady state of the driven
//! atom-cavity system has exact first- and second-order moments
//!
//! ```text
//! ⟨a⟩  = ε ω̃ₐ / (ω̃ₐω̃꜀ − g²)          ⟨σ⟩  = ε g / (ω̃ₐω̃꜀ − g²)
//! ⟨a²⟩ = ε² (ω̃ₐ(ω̃ₐ+ω̃꜀) + g²) / ((ω̃꜀(ω̃ₐ+ω̃꜀) − g²)(ω̃ₐω̃꜀ − g²))
//! ⟨aσ⟩ = ε² g (ω̃ₐ+ω̃꜀) / ((ω̃꜀(ω̃ₐ+ω̃꜀) − g²)(ω̃ₐω̃꜀ − g²))
//! ```
//!
//! whose fluctuations obey ⟨Δa²⟩ = K·(−⟨σ⟩²) with the two-photon gain
//! K = 2g²/(ω̃₂₊ω̃₂₋). Two-time correlations regress through the
//! one-excitation doublet: f(τ) = α₊e^{iω̃₁₊τ} + α₋e^{iω̃₁₋τ} with α₊+α₋ = 1,
//! giving the measured autocorrelation
//!
//! ```text
//! ⟨:ΔX_θ(τ)ΔX_θ(0):⟩ = −½ ℜ( e^{−2iθ} K ⟨σ⟩² f(τ) )
//! ```
//!
//! and, by one-sided cosine transform with prefactor 8ηκ, the squeezing
//! spectrum S_θ(Ω) as a sum of two Lorentzians at the normal modes.

use num_complex::Complex64;
use serde::Serialize;

use crate::dressed::{dressed_detunings, DressedManifold};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::series::{AutocorrelationSeries, SpectrumSeries};

/// Advisory bound on |⟨σ⟩|² above which the weak-drive closure is suspect.
pub const WEAK_DRIVE_LIMIT: f64 = 0.1;

/// Steady-state moments of the weak-excitation model.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SteadyStateMoments {
    pub a_mean: Complex64,
    pub sigma_mean: Complex64,
    pub a2_mean: Complex64,
    pub a_sigma_mean: Complex64,
    /// ⟨Δa²⟩ = ⟨a²⟩ − ⟨a⟩².
    pub delta_a2: Complex64,
    /// ⟨ΔaΔσ⟩ = ⟨aσ⟩ − ⟨a⟩⟨σ⟩.
    pub delta_a_delta_sigma: Complex64,
}

impl SteadyStateMoments {
    /// True when |⟨σ⟩|² stays below the weak-drive advisory bound.
    pub fn weak_drive_ok(&self) -> bool {
        self.sigma_mean.norm_sqr() <= WEAK_DRIVE_LIMIT
    }
}

fn denominators(p: &SystemParams, include_motion: bool) -> Result<(Complex64, Complex64)> {
    let (wc, wa) = p.complex_detunings(include_motion);
    let g2 = p.g * p.g;
    let d = wa * wc - g2;
    let e = wc * (wa + wc) - g2;
    // Strictly impossible for κ, γ > 0, but guard against limiting inputs.
    if d.norm() < 1e-300 || e.norm() < 1e-300 {
        return Err(Error::Singularity("ω̃ₐω̃꜀ − g² vanished".into()));
    }
    Ok((d, e))
}

/// Exact weak-excitation steady-state moments.
pub fn steady_state_moments(p: &SystemParams, include_motion: bool) -> Result<SteadyStateMoments> {
    p.checked()?;
    let (wc, wa) = p.complex_detunings(include_motion);
    let (d, e) = denominators(p, include_motion)?;
    let g = Complex64::from(p.g);
    let eps = Complex64::from(p.epsilon);
    let a_mean = eps * wa / d;
    let sigma_mean = eps * g / d;
    let a2_mean = eps * eps * (wa * (wa + wc) + g * g) / (e * d);
    let a_sigma_mean = eps * eps * g * (wa + wc) / (e * d);
    // Fluctuations from their own closed forms; the subtractions ⟨a²⟩ − ⟨a⟩²
    // cancel catastrophically whenever g ≪ |ω̃|.
    let delta_a2 = -eps * eps * g * g * g * g / (e * d * d);
    let delta_a_delta_sigma = -eps * eps * g * g * g * wc / (e * d * d);
    Ok(SteadyStateMoments {
        a_mean,
        sigma_mean,
        a2_mean,
        a_sigma_mean,
        delta_a2,
        delta_a_delta_sigma,
    })
}

/// Everything needed to evaluate the measured autocorrelation:
/// K, ⟨σ⟩, the envelope coefficients α±, and the first two dressed doublets.
#[derive(Debug, Clone, Serialize)]
pub struct SqueezingKernel {
    pub k_factor: Complex64,
    pub sigma_mean: Complex64,
    pub alpha_plus: Complex64,
    pub alpha_minus: Complex64,
    pub manifold1: DressedManifold,
    pub manifold2: DressedManifold,
}

impl SqueezingKernel {
    /// ⟨Δa²⟩ = K·(−⟨σ⟩²).
    pub fn delta_a2(&self) -> Complex64 {
        self.k_factor * (-(self.sigma_mean * self.sigma_mean))
    }

    /// Regression envelope f(τ) = α₊e^{iω̃₁₊τ} + α₋e^{iω̃₁₋τ}, defined for τ ≥ 0.
    pub fn envelope(&self, tau_us: f64) -> Result<Complex64> {
        if tau_us < 0.0 {
            return Err(Error::Domain("f(τ) is one-sided; τ must be ≥ 0".into()));
        }
        let i = Complex64::I;
        Ok(self.alpha_plus * (i * self.manifold1.omega_plus_c() * tau_us).exp()
            + self.alpha_minus * (i * self.manifold1.omega_minus_c() * tau_us).exp())
    }
}

/// Build the squeezing kernel for the given parameters.
pub fn squeezing_kernel(p: &SystemParams, include_motion: bool) -> Result<SqueezingKernel> {
    p.checked()?;
    let (d, e) = denominators(p, include_motion)?;
    let manifold1 = dressed_detunings(p, 1, include_motion)?;
    let manifold2 = dressed_detunings(p, 2, include_motion)?;
    let split = manifold1.omega_plus_c() - manifold1.omega_minus_c();
    let scale = manifold1.omega_plus_c().norm() + manifold1.omega_minus_c().norm();
    if split.norm() <= 1e-14 * scale.max(1e-300) {
        return Err(Error::ConfluentManifold(format!("{}", manifold1.omega_plus_c())));
    }
    let k_factor = Complex64::from(p.g * p.g) / e;
    let sigma_mean = Complex64::from(p.epsilon * p.g) / d;
    Ok(SqueezingKernel {
        k_factor,
        sigma_mean,
        alpha_plus: -manifold1.omega_minus_c() / split,
        alpha_minus: manifold1.omega_plus_c() / split,
        manifold1,
        manifold2,
    })
}

/// ⟨:ΔX_θ(τ)ΔX_θ(0):⟩ = −½ℜ(e^{−2iθ} K⟨σ⟩² f(τ)) on a τ grid (µs).
pub fn quadrature_autocorrelation(
    p: &SystemParams,
    theta: f64,
    tau_grid: &[f64],
    include_motion: bool,
) -> Result<AutocorrelationSeries> {
    let kernel = squeezing_kernel(p, include_motion)?;
    let phase = (-2.0 * Complex64::I * theta).exp();
    let ks2 = kernel.k_factor * kernel.sigma_mean * kernel.sigma_mean;
    let values = tau_grid
        .iter()
        .map(|&tau| kernel.envelope(tau).map(|f| -0.5 * (phase * ks2 * f).re))
        .collect::<Result<Vec<_>>>()?;
    Ok(AutocorrelationSeries {
        theta,
        tau_us: tau_grid.to_vec(),
        values,
        std_err: None,
    })
}

/// Closed-form two-Lorentzian squeezing spectrum, shot noise normalized to 1.
///
/// Canonical normalization: S_θ(Ω) = 1 + 8ηκ ∫₀^∞ dτ cos(Ωτ) ⟨:ΔX_θ(τ)ΔX_θ(0):⟩
/// with the autocorrelation in the shot-noise-¼ convention. Evaluating the
/// transform on f(τ) analytically gives
///
/// ```text
/// S_θ(Ω) = 1 − 4ηκ ℜ{ i e^{−2iθ} ⟨Δa²⟩ · (ω̃₁₊ω̃₁₋/(ω̃₁₊−ω̃₁₋))
///                      · [ 1/(Ω²−ω̃₁₋²) − 1/(Ω²−ω̃₁₊²) ] }
/// ```
///
/// `omega_grid` is angular (rad/µs); η is the overall efficiency applied.
pub fn squeezing_spectrum(
    p: &SystemParams,
    theta: f64,
    eta: f64,
    omega_grid: &[f64],
    include_motion: bool,
) -> Result<SpectrumSeries> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!("efficiency η must be in (0, 1], got {eta}")));
    }
    let kernel = squeezing_kernel(p, include_motion)?;
    let da2 = kernel.delta_a2();
    let wp = kernel.manifold1.omega_plus_c();
    let wm = kernel.manifold1.omega_minus_c();
    let pref = wp * wm / (wp - wm);
    let phase = (-2.0 * Complex64::I * theta).exp();
    let values = omega_grid
        .iter()
        .map(|&omega| {
            let o2 = Complex64::from(omega * omega);
            let bracket = (o2 - wm * wm).inv() - (o2 - wp * wp).inv();
            1.0 - 4.0 * eta * p.kappa * (Complex64::I * phase * da2 * pref * bracket).re
        })
        .collect();
    Ok(SpectrumSeries {
        theta,
        eta,
        omega_rad_us: omega_grid.to_vec(),
        values,
        std_err: None,
    })
}

/// Quadrature angle minimizing the equal-time variance, and that minimum.
///
/// θ_min = (arg⟨Δa²⟩ + π)/2, value = −½|⟨Δa²⟩|.
pub fn optimal_angle(p: &SystemParams, include_motion: bool) -> Result<(f64, f64)> {
    if p.g == 0.0 || p.epsilon == 0.0 {
        return Err(Error::Domain(
            "optimal quadrature angle is undefined for g = 0 or ε = 0".into(),
        ));
    }
    let moments = steady_state_moments(p, include_motion)?;
    let da2 = moments.delta_a2;
    if da2.norm() == 0.0 {
        return Err(Error::Domain("⟨Δa²⟩ = 0; no squeezed quadrature".into()));
    }
    Ok(((da2.arg() + std::f64::consts::PI) / 2.0, -0.5 * da2.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{preset, PresetName};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn config_a_eps1() -> SystemParams {
        // ε = 2π·1 MHz, bare γ.
        preset(PresetName::ConfigA).params.with_epsilon(TAU)
    }

    fn assert_c_close(got: Complex64, want: Complex64, tol: f64) {
        assert!(
            (got - want).norm() <= tol * want.norm().max(1e-12),
            "got {got}, want {want}"
        );
    }

    #[test]
    fn undriven_moments_vanish() {
        let p = preset(PresetName::ConfigA).params;
        let m = steady_state_moments(&p, false).unwrap();
        assert_eq!(m.a_mean, Complex64::ZERO);
        assert_eq!(m.delta_a2, Complex64::ZERO);
    }

    #[test]
    fn empty_cavity_is_coherent() {
        // g = 0, Δ꜀ = 0: ⟨a⟩ = ε/(iκ), ⟨σ⟩ = 0, ⟨Δa²⟩ = 0.
        let p = SystemParams::from_linear_mhz(0.0, 1.3, 3.0, 0.0, 0.0, 8.0, 0.5, 780.24e-9);
        let m = steady_state_moments(&p, false).unwrap();
        let want = Complex64::from(p.epsilon) / Complex64::new(0.0, p.kappa);
        assert_c_close(m.a_mean, want, 1e-12);
        assert_eq!(m.sigma_mean, Complex64::ZERO);
        assert!(m.delta_a2.norm() < 1e-15);
    }

    #[test]
    fn config_a_moments_match_closed_form() {
        // Frozen from an independent complex-arithmetic evaluation; the
        // Lindblad oracle confirms the same values at N ≥ 6.
        let m = steady_state_moments(&config_a_eps1(), false).unwrap();
        assert_c_close(m.sigma_mean, Complex64::new(-0.080736692752, -0.005677225183), 1e-9);
        assert_c_close(m.a_mean, Complex64::new(-0.052405155539, -0.023968989977), 1e-9);
        assert_c_close(m.delta_a2, Complex64::new(0.006152710773, 0.001310221158), 1e-9);
        assert_c_close(
            m.delta_a_delta_sigma,
            Complex64::new(-0.000141940625, 0.000666543667),
            1e-9,
        );
        assert!(m.weak_drive_ok());
    }

    #[test]
    fn kernel_symmetric_case() {
        // g/2π = 1, Δ = 0, κ = γ = 2π·0.1: K = 2/((0.2i)² − 2) ≈ −0.98039.
        let p = SystemParams::from_linear_mhz(1.0, 0.1, 0.1, 0.0, 0.0, 0.0, 0.0, 780.24e-9);
        let k = squeezing_kernel(&p, false).unwrap();
        assert_c_close(k.k_factor, Complex64::new(-0.980392156863, 0.0), 1e-9);
    }

    #[test]
    fn kernel_config_a() {
        let k = squeezing_kernel(&config_a_eps1(), false).unwrap();
        assert_c_close(k.k_factor, Complex64::new(-0.958000697353, -0.066603431061), 1e-9);
        assert_c_close(k.alpha_plus, Complex64::new(0.660180106365, 0.081741645426), 1e-9);
        assert_c_close(k.alpha_minus, Complex64::ONE - k.alpha_plus, 1e-12);
        // K(−⟨σ⟩²) = ⟨Δa²⟩ ties the kernel to the moments.
        let m = steady_state_moments(&config_a_eps1(), false).unwrap();
        assert_c_close(k.delta_a2(), m.delta_a2, 1e-12);
    }

    #[test]
    fn envelope_normalization_and_decay() {
        let k = squeezing_kernel(&config_a_eps1(), false).unwrap();
        assert_c_close(k.envelope(0.0).unwrap(), Complex64::ONE, 1e-12);
        assert!(k.envelope(50.0).unwrap().norm() < 1e-12);
        assert!(k.envelope(-0.1).is_err());
        // |e^{iω̃₁₊τ}| at τ = 50 ns: e^{−2π·1.8807·0.05} ≈ 0.554.
        let damp = (Complex64::I * k.manifold1.omega_plus_c() * 0.05).exp().norm();
        assert_relative_eq!(damp, 0.554, max_relative = 1e-3);
    }

    #[test]
    fn autocorrelation_values() {
        let p = config_a_eps1();
        let taus = [0.0, 0.02, 0.05];
        let x = quadrature_autocorrelation(&p, 0.0, &taus, false).unwrap();
        let pq = quadrature_autocorrelation(&p, PI / 2.0, &taus, false).unwrap();
        // θ = π/2, τ = 0: −½ℜ⟨Δa²⟩ with the sign flipped by e^{−iπ}.
        assert_relative_eq!(pq.values[0], -0.003076355387, max_relative = 1e-8);
        // Coherent-limit antisymmetry of conjugate quadratures.
        for (a, b) in x.values.iter().zip(&pq.values) {
            assert_relative_eq!(a + b, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn envelope_is_bounded_by_the_slowest_linewidth() {
        // |f(τ)| ≤ (|α₊| + |α₋|) e^(−min Im ω̃₁± · τ).
        for name in [PresetName::ConfigA, PresetName::ConfigB] {
            let k = squeezing_kernel(&preset(name).params.with_epsilon(TAU), true).unwrap();
            let min_im = k.manifold1.omega_plus.im.min(k.manifold1.omega_minus.im);
            let amp = k.alpha_plus.norm() + k.alpha_minus.norm();
            for i in 0..200 {
                let tau = 0.005 * i as f64;
                let bound = amp * (-min_im * tau).exp();
                assert!(k.envelope(tau).unwrap().norm() <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn undriven_autocorrelation_is_zero() {
        let p = preset(PresetName::ConfigA).params;
        let s = quadrature_autocorrelation(&p, 0.3, &[0.0, 0.1, 0.2], false).unwrap();
        assert!(s.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn spectrum_limits_and_eta_scaling() {
        let p = config_a_eps1();
        let grid: Vec<f64> = (0..400).map(|i| TAU * (2.0 + 0.05 * i as f64)).collect();
        let s1 = squeezing_spectrum(&p, PI / 2.0, 0.206, &grid, false).unwrap();
        let s2 = squeezing_spectrum(&p, PI / 2.0, 1.0, &grid, false).unwrap();
        for (a, b) in s1.values.iter().zip(&s2.values) {
            // (S − 1) scales linearly with η.
            assert_relative_eq!((b - 1.0) / (a - 1.0), 1.0 / 0.206, max_relative = 1e-9);
        }
        // S → 1 far above every resonance.
        let far = squeezing_spectrum(&p, 0.0, 1.0, &[TAU * 5000.0], false).unwrap();
        assert_relative_eq!(far.values[0], 1.0, epsilon = 1e-4);
        // ε = 0 ⇒ S ≡ 1.
        let s0 = squeezing_spectrum(&preset(PresetName::ConfigA).params, 0.0, 0.5, &grid, false)
            .unwrap();
        assert!(s0.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn optimal_angle_config_a() {
        let (theta, value) = optimal_angle(&config_a_eps1(), false).unwrap();
        assert_relative_eq!(theta, (0.209816 + PI) / 2.0, max_relative = 1e-4);
        assert!(value < 0.0);
        assert!(optimal_angle(&preset(PresetName::ConfigA).params, false).is_err());
    }

    #[test]
    fn optimal_angle_minimizes_equal_time_variance() {
        // On symmetric resonance ⟨Δa²⟩ is real positive, so the squeezed
        // quadrature is θ = π/2 exactly; for arg⟨Δa²⟩ = π the same convention
        // puts θ_min at 0 (mod π).
        let p = SystemParams::from_linear_mhz(1.0, 0.1, 0.1, 0.0, 0.0, 0.0, 0.01, 780.24e-9);
        let m = steady_state_moments(&p, false).unwrap();
        assert!(m.delta_a2.re > 0.0 && m.delta_a2.im.abs() < 1e-18);
        let (theta, value) = optimal_angle(&p, false).unwrap();
        assert_relative_eq!(theta, PI / 2.0, epsilon = 1e-12);
        assert_relative_eq!(value, -0.5 * m.delta_a2.norm(), max_relative = 1e-12);
        // The returned angle beats a dense θ scan of the τ = 0 variance.
        for k in 0..64 {
            let th = PI * k as f64 / 64.0;
            let v = quadrature_autocorrelation(&p, th, &[0.0], false).unwrap().values[0];
            assert!(value <= v + 1e-18);
        }
    }

    #[test]
    fn confluent_manifold_is_reported() {
        // g = 0 with identical ω̃꜀ = ω̃ₐ degenerates the doublet.
        let p = SystemParams::from_linear_mhz(0.0, 1.0, 1.0, 0.0, 3.0, 3.0, 0.1, 780.24e-9);
        assert!(matches!(
            squeezing_kernel(&p, false),
            Err(Error::ConfluentManifold(_))
        ));
    }

    #[test]
    fn large_coupling_kernel_law() {
        // Probe on the two-photon resonance of |2−⟩ with the atom on the
        // cavity resonance: |K| tends to g/(2κ+γ) within 20 % at strong g.
        let (kappa, gamma) = (1.3f64, 3.0f64);
        for g_mhz in [50.0, 200.0, 1000.0] {
            let delta = -0.25 * (8.0 * g_mhz * g_mhz - (kappa - gamma) * (kappa - gamma)).sqrt();
            let p = SystemParams::from_linear_mhz(
                g_mhz, kappa, gamma, 0.0, delta, delta, 0.0, 780.24e-9,
            );
            let k = squeezing_kernel(&p, false).unwrap();
            let law = p.g / (2.0 * p.kappa + p.gamma);
            let ratio = k.k_factor.norm() / law;
            assert!(
                (ratio - 1.0).abs() < 0.2,
                "g={g_mhz} MHz: |K|/law = {ratio}"
            );
        }
    }

    proptest! {
        #[test]
        fn kernel_moment_identity_random(
            g_mhz in 0.5..30.0f64,
            kappa_mhz in 0.1..8.0f64,
            gamma_mhz in 0.1..8.0f64,
            dc_mhz in -25.0..25.0f64,
            da_mhz in -25.0..25.0f64,
            eps_mhz in 0.001..2.0f64,
        ) {
            let p = SystemParams::from_linear_mhz(
                g_mhz, kappa_mhz, gamma_mhz, 0.0, dc_mhz, da_mhz, eps_mhz, 780.24e-9,
            );
            let k = squeezing_kernel(&p, false).unwrap();
            let m = steady_state_moments(&p, false).unwrap();
            let want = m.delta_a2;
            prop_assert!((k.delta_a2() - want).norm() <= 1e-10 * want.norm().max(1e-300));
            prop_assert!((k.alpha_plus + k.alpha_minus - Complex64::ONE).norm() < 1e-12);
            // ⟨Δa²⟩ = ⟨a²⟩ − ⟨a⟩² within roundoff of the subtracted terms.
            let scale = m.a2_mean.norm() + m.a_mean.norm_sqr();
            prop_assert!(
                (m.delta_a2 - (m.a2_mean - m.a_mean * m.a_mean)).norm()
                    <= 1e-12 * scale.max(1e-300)
            );
            let scale_s = m.a_sigma_mean.norm() + (m.a_mean * m.sigma_mean).norm();
            prop_assert!(
                (m.delta_a_delta_sigma - (m.a_sigma_mean - m.a_mean * m.sigma_mean)).norm()
                    <= 1e-12 * scale_s.max(1e-300)
            );
        }

        #[test]
        fn epsilon_scaling(
            eps_mhz in 0.01..1.0f64,
        ) {
            let p1 = preset(PresetName::ConfigA).params.with_epsilon(TAU * eps_mhz);
            let p2 = p1.with_epsilon(2.0 * p1.epsilon);
            let m1 = steady_state_moments(&p1, false).unwrap();
            let m2 = steady_state_moments(&p2, false).unwrap();
            prop_assert!((m2.a_mean - 2.0 * m1.a_mean).norm() < 1e-12);
            prop_assert!((m2.delta_a2 - 4.0 * m1.delta_a2).norm() < 1e-12);
        }
    }
}

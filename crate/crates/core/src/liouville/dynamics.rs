//! Time propagation, quantum-regression correlations, and numeric spectra.
//!
//! The quantum regression theorem reduces a stationary two-time correlation
//! to propagating a trace-free deformed state with the same generator:
//! ⟨ΔA(τ)ΔB(0)⟩ = Tr(A e^{𝓛τ}[(B − ⟨B⟩)ρ_ss]).
//!
//! Propagation is fixed-step 4th order: one RK4 step of size h on the linear
//! system vec(ρ̇) = 𝓛 vec(ρ) is exactly the degree-4 Taylor polynomial of
//! e^{h𝓛}, so the per-interval transfer matrix is assembled once and reused
//! on uniform grids. The step obeys h·‖𝓛‖ ≤ 0.05 with ‖𝓛‖ estimated by power
//! iteration, and every propagator is Richardson-checked against its
//! half-step composition before use.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::dressed::dressed_detunings;
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::series::{AutocorrelationSeries, SpectrumSeries};

use super::operators::HilbertSpace;
use super::superop::{
    build_liouvillian, expectation, expectation_values, steady_state, Liouvillian, MomentSet,
    MotionMode,
};

type CMat = DMatrix<Complex64>;
type CVec = DVector<Complex64>;

/// Maximum product h·‖𝓛‖ for one internal RK4 substep.
const STEP_SAFETY: f64 = 0.05;
/// Relative agreement demanded between a propagator and its half-step check.
const RICHARDSON_TOL: f64 = 1e-8;

/// Crude dominant-eigenvalue magnitude via power iteration.
fn spectral_radius_estimate(m: &CMat) -> f64 {
    let n = m.nrows();
    // Deterministic pseudo-random start vector.
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut v = CVec::from_fn(n, |_, _| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let re = ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let im = ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
        Complex64::new(re, im)
    });
    v /= Complex64::from(v.norm());
    let mut rate = 0.0;
    for _ in 0..25 {
        let w = m * &v;
        rate = w.norm();
        if rate == 0.0 {
            return 0.0;
        }
        v = w / Complex64::from(rate);
    }
    rate
}

/// I + h𝓛 + (h𝓛)²/2 + (h𝓛)³/6 + (h𝓛)⁴/24 — one RK4 step as a matrix.
fn rk4_step_matrix(l: &CMat, h: f64) -> CMat {
    let n = l.nrows();
    let m1 = l.scale(h);
    let m2 = &m1 * &m1;
    let m3 = &m1 * &m2;
    let m4 = &m1 * &m3;
    let mut t = CMat::identity(n, n);
    t += &m1;
    t += m2.scale(1.0 / 2.0);
    t += m3.scale(1.0 / 6.0);
    t += m4.scale(1.0 / 24.0);
    t
}

/// Transfer matrix advancing vec(ρ) by one uniform grid interval.
pub struct Propagator {
    step: CMat,
    pub dt: f64,
    /// Number of internal RK4 substeps composed into `step`.
    pub substeps: u32,
}

impl Propagator {
    /// Build and validate a propagator for grid spacing `dt` (µs).
    pub fn new(liouvillian: &Liouvillian, dt: f64) -> Result<Self> {
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::Domain("propagator interval must be positive".into()));
        }
        let rate = spectral_radius_estimate(&liouvillian.matrix).max(1e-12);
        let mut j = 0u32;
        while dt / f64::powi(2.0, j as i32) * rate > STEP_SAFETY {
            j += 1;
            if j > 40 {
                return Err(Error::Numerics(format!(
                    "propagation step underflow: rate estimate {rate:.3e}/µs"
                )));
            }
        }
        for attempt in 0..6 {
            let jj = j + attempt;
            let coarse = compose(&liouvillian.matrix, dt, jj);
            let fine = compose(&liouvillian.matrix, dt, jj + 1);
            let probe = probe_vector(liouvillian.matrix.nrows());
            let diff = (&coarse * &probe - &fine * &probe).norm() / probe.norm();
            if diff < RICHARDSON_TOL {
                return Ok(Self {
                    step: fine,
                    dt,
                    substeps: 1 << (jj + 1),
                });
            }
        }
        Err(Error::Numerics(
            "propagator failed its Richardson step-halving check".into(),
        ))
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        &self.step * v
    }
}

/// (RK4 step of size dt/2^j) composed 2^j times by repeated squaring.
fn compose(l: &CMat, dt: f64, j: u32) -> CMat {
    let h = dt / f64::powi(2.0, j as i32);
    let mut t = rk4_step_matrix(l, h);
    for _ in 0..j {
        t = &t * &t;
    }
    t
}

fn probe_vector(n: usize) -> CVec {
    let mut state = 0x853c49e6748fea9bu64;
    let mut v = CVec::from_fn(n, |_, _| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let re = ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
        Complex64::new(re, 0.0)
    });
    v /= Complex64::from(v.norm());
    v
}

/// Tr(A·X) without forming the product.
fn trace_prod(a: &CMat, x: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut s = Complex64::ZERO;
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * x[(j, i)];
        }
    }
    s
}

/// Two-time correlation ⟨ΔA(τ)ΔB(0)⟩ propagated on a uniform τ grid.
#[derive(Debug, Clone)]
pub struct CorrelationResult {
    pub tau_us: Vec<f64>,
    pub values: Vec<Complex64>,
    pub label_a: String,
    pub label_b: String,
}

/// Quantum-regression two-time correlation of fluctuation operators.
///
/// `tau_grid` must be uniform, ascending and start at 0.
pub fn two_time_correlation(
    liouvillian: &Liouvillian,
    a_op: &CMat,
    b_op: &CMat,
    rho_ss: &CMat,
    tau_grid: &[f64],
    labels: (&str, &str),
) -> Result<CorrelationResult> {
    let dt = check_uniform_grid(tau_grid)?;
    let dim = liouvillian.dim();
    let b_mean = expectation(rho_ss, b_op);
    let chi0 = b_op * rho_ss - rho_ss.scale(1.0) * b_mean;
    let mut v = CVec::zeros(dim * dim);
    for jj in 0..dim {
        for ii in 0..dim {
            v[ii + dim * jj] = chi0[(ii, jj)];
        }
    }
    let prop = Propagator::new(liouvillian, dt)?;
    let mut values = Vec::with_capacity(tau_grid.len());
    let mut chi = CMat::zeros(dim, dim);
    for k in 0..tau_grid.len() {
        if k > 0 {
            v = prop.apply(&v);
        }
        for jj in 0..dim {
            for ii in 0..dim {
                chi[(ii, jj)] = v[ii + dim * jj];
            }
        }
        values.push(trace_prod(a_op, &chi));
    }
    Ok(CorrelationResult {
        tau_us: tau_grid.to_vec(),
        values,
        label_a: labels.0.to_string(),
        label_b: labels.1.to_string(),
    })
}

fn check_uniform_grid(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::Domain("τ grid needs at least two points".into()));
    }
    if grid[0] != 0.0 {
        return Err(Error::Domain("τ grid must start at 0".into()));
    }
    let dt = grid[1] - grid[0];
    if dt <= 0.0 {
        return Err(Error::Domain("τ grid must be ascending".into()));
    }
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(Error::Domain("τ grid must be uniform".into()));
        }
    }
    Ok(dt)
}

/// The two fluctuation curves every quadrature quantity is built from,
/// together with the static moments of the steady state they start in.
pub struct OracleCurves {
    pub tau_us: Vec<f64>,
    /// ⟨Δa(τ)Δa(0)⟩.
    pub caa: Vec<Complex64>,
    /// ⟨Δa†(τ)Δa(0)⟩.
    pub cad: Vec<Complex64>,
    pub moments: MomentSet,
    pub kappa: f64,
}

impl OracleCurves {
    /// Steady state plus both correlation curves on a uniform grid of
    /// `n_intervals` steps covering [0, tau_max].
    pub fn compute(
        p: &SystemParams,
        space: HilbertSpace,
        motion: MotionMode,
        tau_max: f64,
        n_intervals: usize,
    ) -> Result<Self> {
        let liouvillian = build_liouvillian(p, space, motion)?;
        let rho = steady_state(&liouvillian)?;
        let moments = expectation_values(&rho, &liouvillian.ops);
        let grid: Vec<f64> = (0..=n_intervals)
            .map(|k| tau_max * k as f64 / n_intervals as f64)
            .collect();
        let caa = two_time_correlation(
            &liouvillian,
            &liouvillian.ops.a,
            &liouvillian.ops.a,
            &rho,
            &grid,
            ("a", "a"),
        )?;
        let cad = two_time_correlation(
            &liouvillian,
            &liouvillian.ops.a_dag,
            &liouvillian.ops.a,
            &rho,
            &grid,
            ("a_dag", "a"),
        )?;
        Ok(Self {
            tau_us: grid,
            caa: caa.values,
            cad: cad.values,
            moments,
            kappa: p.kappa,
        })
    }

    /// Full normally-ordered quadrature autocorrelation at phase θ:
    /// ½ℜ[e^{−2iθ}⟨Δa(τ)Δa(0)⟩] + ½ℜ⟨Δa†(τ)Δa(0)⟩.
    /// Includes the incoherent term the weak-drive model drops.
    pub fn quadrature_autocorrelation(&self, theta: f64) -> AutocorrelationSeries {
        let phase = (-2.0 * Complex64::I * theta).exp();
        let values = self
            .caa
            .iter()
            .zip(&self.cad)
            .map(|(aa, ad)| 0.5 * (phase * aa).re + 0.5 * ad.re)
            .collect();
        AutocorrelationSeries {
            theta,
            tau_us: self.tau_us.clone(),
            values,
            std_err: None,
        }
    }

    /// One-sided cosine transform with the canonical 8ηκ prefactor,
    /// S_θ(Ω) = 1 + 8ηκ ∫₀^∞ dτ cos(Ωτ) ⟨:ΔX_θ(τ)ΔX_θ(0):⟩, by composite
    /// Simpson quadrature over the stored grid.
    pub fn spectrum(&self, theta: f64, eta: f64, omega_grid: &[f64]) -> Result<SpectrumSeries> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Domain(format!("efficiency η must be in (0, 1], got {eta}")));
        }
        let n = self.tau_us.len();
        if n < 3 || !(n - 1).is_multiple_of(2) {
            return Err(Error::Domain("Simpson transform needs an even interval count".into()));
        }
        let corr = self.quadrature_autocorrelation(theta).values;
        let dt = self.tau_us[1] - self.tau_us[0];
        let mut weights = vec![1.0; n];
        for (k, w) in weights.iter_mut().enumerate().take(n - 1).skip(1) {
            *w = if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let values = omega_grid
            .iter()
            .map(|&omega| {
                let integral: f64 = weights
                    .iter()
                    .zip(&self.tau_us)
                    .zip(&corr)
                    .map(|((w, tau), c)| w * (omega * tau).cos() * c)
                    .sum::<f64>()
                    * dt
                    / 3.0;
                1.0 + 8.0 * eta * self.kappa * integral
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
}

fn min_halfwidth(p: &SystemParams, motion: MotionMode) -> Result<f64> {
    let manifold = dressed_detunings(p, 1, motion != MotionMode::None)?;
    Ok(manifold.omega_plus.im.min(manifold.omega_minus.im))
}

/// Full quadrature autocorrelation on a uniform τ grid, straight from the
/// master equation.
pub fn full_quadrature_autocorrelation(
    p: &SystemParams,
    theta: f64,
    space: HilbertSpace,
    tau_grid: &[f64],
    motion: MotionMode,
) -> Result<AutocorrelationSeries> {
    check_uniform_grid(tau_grid)?;
    let tau_max = *tau_grid.last().unwrap();
    let curves = OracleCurves::compute(p, space, motion, tau_max, tau_grid.len() - 1)?;
    Ok(curves.quadrature_autocorrelation(theta))
}

/// Numeric squeezing spectrum from the master equation.
///
/// The correlation curves are integrated out to `cutoff_lifetimes` times the
/// slowest dressed-state lifetime; at least 10 lifetimes are required for the
/// truncated tail to be negligible.
pub fn numeric_spectrum(
    p: &SystemParams,
    theta: f64,
    eta: f64,
    space: HilbertSpace,
    omega_grid: &[f64],
    motion: MotionMode,
    cutoff_lifetimes: f64,
) -> Result<SpectrumSeries> {
    if cutoff_lifetimes < 10.0 {
        return Err(Error::Domain(format!(
            "spectrum cutoff of {cutoff_lifetimes} lifetimes is insufficient (need ≥ 10)"
        )));
    }
    let tau_max = cutoff_lifetimes / min_halfwidth(p, motion)?;
    let curves = OracleCurves::compute(p, space, motion, tau_max, 8192)?;
    curves.spectrum(theta, eta, omega_grid)
}

/// One row of a truncation-convergence scan.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n_max: usize,
    pub a_mean: Complex64,
    pub sigma_mean: Complex64,
    pub delta_a2: Complex64,
    pub photon_number: f64,
    pub incoherent_photons: f64,
    pub spectrum_min_mdb: f64,
    pub spectrum_min_freq_mhz: f64,
}

/// Convergence scan over Fock truncations.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// First N whose tracked scalars changed by < 1e-6 relative to the
    /// previous N; absent when the list never settles.
    pub converged_n: Option<usize>,
}

/// Scan steady-state moments and the spectrum minimum over `n_list`.
pub fn convergence_scan(
    p: &SystemParams,
    theta: f64,
    eta: f64,
    n_list: &[usize],
    motion: MotionMode,
) -> Result<ConvergenceReport> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("truncation list must be strictly ascending".into()));
    }
    let tau_max = 12.0 / min_halfwidth(p, motion)?;
    let omega_grid: Vec<f64> = (0..=380)
        .map(|i| crate::units::mhz_to_rad_us(1.0 + 0.05 * i as f64))
        .collect();
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut converged_n = None;
    for &n_max in n_list {
        let space = HilbertSpace::new(n_max)?;
        let curves = OracleCurves::compute(p, space, motion, tau_max, 2048)?;
        let spec = curves.spectrum(theta, eta, &omega_grid)?;
        let (f_min, s_min) = spec.min_bin();
        let row = ConvergenceRow {
            n_max,
            a_mean: curves.moments.a_mean,
            sigma_mean: curves.moments.sigma_mean,
            delta_a2: curves.moments.delta_a2,
            photon_number: curves.moments.photon_number,
            incoherent_photons: curves.moments.incoherent_photons,
            spectrum_min_mdb: s_min,
            spectrum_min_freq_mhz: f_min,
        };
        if let Some(prev) = rows.last() {
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
            let worst = [
                rel(row.a_mean.norm(), prev.a_mean.norm()),
                rel(row.sigma_mean.norm(), prev.sigma_mean.norm()),
                rel(row.delta_a2.norm(), prev.delta_a2.norm()),
                rel(row.photon_number, prev.photon_number),
            ]
            .into_iter()
            .fold(0.0f64, f64::max);
            if worst < 1e-6 && converged_n.is_none() {
                converged_n = Some(row.n_max);
            }
        }
        rows.push(row);
    }
    Ok(ConvergenceReport { rows, converged_n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;
    use crate::params::{preset, PresetName};
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, TAU};

    fn space(n: usize) -> HilbertSpace {
        HilbertSpace::new(n).unwrap()
    }

    fn uniform_grid(tau_max: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| tau_max * k as f64 / n as f64).collect()
    }

    #[test]
    fn correlation_starts_at_static_moment() {
        let p = preset(PresetName::ConfigA).params.with_epsilon(TAU * 0.3);
        let l = build_liouvillian(&p, space(5), MotionMode::Dephasing).unwrap();
        let rho = steady_state(&l).unwrap();
        let m = expectation_values(&rho, &l.ops);
        let grid = uniform_grid(2.0, 400);
        let c = two_time_correlation(&l, &l.ops.a, &l.ops.a, &rho, &grid, ("a", "a")).unwrap();
        assert!((c.values[0] - m.delta_a2).norm() < 1e-12);
        // Mixing: correlations die off at long delay.
        assert!(c.values.last().unwrap().norm() < 1e-6 * m.delta_a2.norm());
    }

    #[test]
    fn weak_drive_curve_matches_regression_envelope() {
        // Decay-channel motion keeps the pure-κγ structure, so the analytic
        // γ_eff curve is exact to O(ε²).
        let p = preset(PresetName::ConfigA).params.with_epsilon(TAU * 0.1);
        let grid = uniform_grid(1.2, 600);
        let numeric =
            full_quadrature_autocorrelation(&p, 0.0, space(6), &grid, MotionMode::DecayChannel)
                .unwrap();
        let analytic_series =
            analytic::quadrature_autocorrelation(&p, 0.0, &grid, true).unwrap();
        let scale = analytic_series
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = numeric
            .values
            .iter()
            .zip(&analytic_series.values)
            .map(|(n, a)| (n - a).abs())
            .fold(0.0f64, f64::max);
        assert!(worst / scale < 1e-3, "sup deviation {:.2e}", worst / scale);
    }

    #[test]
    fn theta_average_isolates_incoherent_part() {
        let p = preset(PresetName::ConfigA).params.with_epsilon(TAU * 1.0);
        let curves =
            OracleCurves::compute(&p, space(6), MotionMode::Dephasing, 1.0, 200).unwrap();
        let x = curves.quadrature_autocorrelation(0.0);
        let pq = curves.quadrature_autocorrelation(PI / 2.0);
        let incoh0 = 0.5 * (x.values[0] + pq.values[0]);
        assert!(incoh0 >= 0.0);
        assert_relative_eq!(
            incoh0,
            0.5 * curves.moments.incoherent_photons,
            max_relative = 1e-10
        );
    }

    #[test]
    fn propagation_preserves_trace() {
        // tᵀ𝓛 = 0, so every Taylor term beyond the identity is annihilated
        // by the trace row; verify the composed propagator keeps Tr ρ = 1
        // over many lifetimes anyway.
        let p = preset(PresetName::ConfigA).params.with_epsilon(TAU * 0.5);
        let l = build_liouvillian(&p, space(4), MotionMode::Dephasing).unwrap();
        let dim = l.dim();
        let prop = Propagator::new(&l, 0.05).unwrap();
        let mut v = CVec::zeros(dim * dim);
        v[0] = Complex64::ONE; // |g,0⟩⟨g,0|, far from stationary under drive
        for _ in 0..40 {
            v = prop.apply(&v);
        }
        let trace: Complex64 = (0..dim).map(|i| v[i + dim * i]).sum();
        assert!((trace - Complex64::ONE).norm() < 1e-10, "trace drifted to {trace}");
    }

    #[test]
    fn undriven_spectrum_is_flat() {
        let p = preset(PresetName::ConfigA).params;
        let omegas: Vec<f64> = (1..20).map(|i| TAU * i as f64).collect();
        let s = numeric_spectrum(&p, 0.0, 0.5, space(3), &omegas, MotionMode::None, 12.0).unwrap();
        for v in &s.values {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn spectrum_requires_long_cutoff() {
        let p = preset(PresetName::ConfigA).params;
        assert!(numeric_spectrum(&p, 0.0, 0.5, space(3), &[TAU], MotionMode::None, 5.0).is_err());
    }

    #[test]
    fn convergence_by_n4_at_weak_drive() {
        let p = preset(PresetName::ConfigA).params.with_epsilon(TAU * 0.1);
        let report =
            convergence_scan(&p, PI / 2.0, 0.206, &[2, 3, 4, 5, 6], MotionMode::Dephasing).unwrap();
        assert_eq!(report.rows.len(), 5);
        let n = report.converged_n.expect("weak drive must converge in the scan");
        assert!(n <= 4, "converged at N = {n}");
    }

    #[test]
    fn single_entry_scan_makes_no_claim() {
        let p = preset(PresetName::ConfigA).params.with_epsilon(TAU * 0.1);
        let report = convergence_scan(&p, 0.0, 0.206, &[2], MotionMode::None).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.converged_n.is_none());
    }

    #[test]
    fn strong_drive_needs_larger_truncation() {
        let p = preset(PresetName::ConfigA).params.with_epsilon(TAU * 5.0);
        let report =
            convergence_scan(&p, PI / 2.0, 0.206, &[2, 3, 4], MotionMode::Dephasing).unwrap();
        match report.converged_n {
            None => {}
            Some(n) => assert!(n > 4, "unexpected early convergence at N = {n}"),
        }
    }
}

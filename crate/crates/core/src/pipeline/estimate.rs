//! Estimators of the homodyne analysis chain.
//!
//! The 20 ms acquisitions are divided into 200 µs intervals gated on the
//! measured cavity transmission: T ≤ 0.04 T_max selects strongly coupled
//! intervals, T ≥ 0.7 T_max empty-cavity reference intervals, anything in
//! between is discarded. Autocorrelations are estimated per interval at the
//! full 10 ns resolution and averaged, with the mean over lags > 1 µs
//! subtracted as a baseline; noise spectra come from direct Fourier
//! transforms of 100 µs windows (10 kHz resolution). Differential quantities
//! subtract the ζ-rescaled reference so technical features cancel.


use std::sync::Arc;

use num_complex::Complex64;
use rustfft::Fft;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::AutocorrelationSeries;
use crate::units::linear_to_mdb;

use super::drift::{COUPLED_EPOCH_FRACTION, REFERENCE_EPOCH_START};

/// Transmission threshold selecting strongly coupled intervals.
pub const T_COUPLED_MAX: f64 = 0.04;
/// Transmission threshold selecting empty-cavity reference intervals.
pub const T_REFERENCE_MIN: f64 = 0.7;
/// Lags beyond this delay are uncorrelated and define the baseline.
pub const BASELINE_MIN_LAG_US: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IntervalLabel {
    Coupled,
    Reference,
    Discarded,
}

/// Gate intervals on the transmission channel.
pub fn classify_intervals(transmission: &[f64]) -> Vec<IntervalLabel> {
    transmission
        .iter()
        .map(|&t| {
            if t <= T_COUPLED_MAX {
                IntervalLabel::Coupled
            } else if t >= T_REFERENCE_MIN {
                IntervalLabel::Reference
            } else {
                IntervalLabel::Discarded
            }
        })
        .collect()
}

/// Averaged autocorrelation with per-lag standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct AutocorrEstimate {
    pub lag_us: Vec<f64>,
    /// Baseline-subtracted averaged autocorrelation (counts² until
    /// calibrated by [`differential_autocorrelation`]).
    pub values: Vec<f64>,
    pub std_err: Vec<f64>,
    pub n_intervals: usize,
    /// Mean over lags > 1 µs that was subtracted.
    pub baseline: f64,
}

/// Streaming accumulator of per-interval autocorrelations.
#[derive(Debug, Clone)]
pub struct AutocorrAccum {
    dt_us: f64,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    n: usize,
}

impl AutocorrAccum {
    pub fn new(n_lags: usize, dt_us: f64) -> Self {
        Self {
            dt_us,
            sum: vec![0.0; n_lags + 1],
            sumsq: vec![0.0; n_lags + 1],
            n: 0,
        }
    }

    /// Add one interval of samples (ADC counts).
    pub fn add_interval(&mut self, x: &[f64]) {
        let n = x.len();
        for (m, (s, sq)) in self.sum.iter_mut().zip(self.sumsq.iter_mut()).enumerate() {
            let dot: f64 = x[..n - m].iter().zip(&x[m..]).map(|(a, b)| a * b).sum();
            let c = dot / (n - m) as f64;
            *s += c;
            *sq += c * c;
        }
        self.n += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        debug_assert_eq!(self.sum.len(), other.sum.len());
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sumsq.iter_mut().zip(&other.sumsq) {
            *a += b;
        }
        self.n += other.n;
    }

    pub fn n_intervals(&self) -> usize {
        self.n
    }

    /// Average, subtract the long-delay baseline, attach standard errors.
    pub fn finalize(&self) -> Result<AutocorrEstimate> {
        if self.n == 0 {
            return Err(Error::Estimator("no intervals selected".into()));
        }
        let n = self.n as f64;
        let mean: Vec<f64> = self.sum.iter().map(|s| s / n).collect();
        let std_err: Vec<f64> = self
            .sumsq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| {
                let var = (sq / n - m * m).max(0.0);
                (var / n.max(2.0 - 1.0)).sqrt() * (n / (n - 1.0).max(1.0)).sqrt()
            })
            .collect();
        let lag_us: Vec<f64> = (0..mean.len()).map(|m| m as f64 * self.dt_us).collect();
        let tail: Vec<f64> = lag_us
            .iter()
            .zip(&mean)
            .filter(|(l, _)| **l > BASELINE_MIN_LAG_US)
            .map(|(_, v)| *v)
            .collect();
        let baseline = if tail.is_empty() {
            0.0
        } else {
            tail.iter().sum::<f64>() / tail.len() as f64
        };
        Ok(AutocorrEstimate {
            lag_us,
            values: mean.iter().map(|v| v - baseline).collect(),
            std_err,
            n_intervals: self.n,
            baseline,
        })
    }
}

/// Averaged one-sided periodogram with per-bin standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumEstimate {
    pub freq_mhz: Vec<f64>,
    /// Mean periodogram per bin, in counts²·sample (only ratios matter).
    pub values: Vec<f64>,
    pub std_err: Vec<f64>,
    pub n_windows: usize,
}

/// Streaming accumulator of window periodograms.
#[derive(Debug, Clone)]
pub struct SpectrumAccum {
    window_len: usize,
    df_mhz: f64,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    n: usize,
}

impl SpectrumAccum {
    pub fn new(window_len: usize, sample_rate_hz: f64) -> Self {
        let bins = window_len / 2 + 1;
        Self {
            window_len,
            df_mhz: sample_rate_hz / 1e6 / window_len as f64,
            sum: vec![0.0; bins],
            sumsq: vec![0.0; bins],
            n: 0,
        }
    }

    /// Add one window (length must equal `window_len`).
    pub fn add_window(&mut self, x: &[f64], fft: &Arc<dyn Fft<f64>>, scratch: &mut Vec<Complex64>) {
        debug_assert_eq!(x.len(), self.window_len);
        scratch.clear();
        scratch.extend(x.iter().map(|&v| Complex64::new(v, 0.0)));
        fft.process(scratch);
        let norm = 1.0 / self.window_len as f64;
        for (k, (s, sq)) in self.sum.iter_mut().zip(self.sumsq.iter_mut()).enumerate() {
            let p = scratch[k].norm_sqr() * norm;
            *s += p;
            *sq += p * p;
        }
        self.n += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sumsq.iter_mut().zip(&other.sumsq) {
            *a += b;
        }
        self.n += other.n;
    }

    pub fn n_windows(&self) -> usize {
        self.n
    }

    pub fn finalize(&self) -> Result<SpectrumEstimate> {
        if self.n == 0 {
            return Err(Error::Estimator("no spectrum windows selected".into()));
        }
        let n = self.n as f64;
        let values: Vec<f64> = self.sum.iter().map(|s| s / n).collect();
        let std_err = self
            .sumsq
            .iter()
            .zip(&values)
            .map(|(sq, m)| {
                let var = (sq / n - m * m).max(0.0);
                (var / n).sqrt() * (n / (n - 1.0).max(1.0)).sqrt()
            })
            .collect();
        Ok(SpectrumEstimate {
            freq_mhz: (0..values.len()).map(|k| k as f64 * self.df_mhz).collect(),
            values,
            std_err,
            n_windows: self.n,
        })
    }
}

/// Shot-noise drift estimate from untrapped acquisitions.
#[derive(Debug, Clone, Serialize)]
pub struct DriftEstimate {
    /// Mean variance over the coupled epoch divided by the reference epoch.
    pub zeta: f64,
    /// Per-interval shot-noise variance profile across the acquisition,
    /// averaged over untrapped sequences.
    pub profile: Vec<f64>,
    pub n_acquisitions: usize,
}

/// Accumulates the per-interval variance profile of untrapped acquisitions.
#[derive(Debug, Clone)]
pub struct DriftAccum {
    sum_var: Vec<f64>,
    n: usize,
}

impl DriftAccum {
    pub fn new(intervals_per_acq: usize) -> Self {
        Self {
            sum_var: vec![0.0; intervals_per_acq],
            n: 0,
        }
    }

    pub fn add_untrapped(&mut self, samples: &[f64], intervals: usize) {
        let n = samples.len() / intervals;
        for (k, v) in self.sum_var.iter_mut().enumerate().take(intervals) {
            let seg = &samples[k * n..(k + 1) * n];
            let mean = seg.iter().sum::<f64>() / n as f64;
            *v += seg.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        }
        self.n += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.sum_var.iter_mut().zip(&other.sum_var) {
            *a += b;
        }
        self.n += other.n;
    }

    pub fn n_acquisitions(&self) -> usize {
        self.n
    }

    pub fn finalize(&self) -> Result<DriftEstimate> {
        if self.n < 10 {
            return Err(Error::Estimator(format!(
                "drift estimate needs ≥ 10 untrapped acquisitions, have {}",
                self.n
            )));
        }
        let profile: Vec<f64> = self.sum_var.iter().map(|v| v / self.n as f64).collect();
        let m = profile.len();
        let cpl_end = ((m as f64) * COUPLED_EPOCH_FRACTION).round() as usize;
        let ref_start = ((m as f64) * REFERENCE_EPOCH_START).round() as usize;
        let first = profile[..cpl_end].iter().sum::<f64>() / cpl_end as f64;
        let last = profile[ref_start..].iter().sum::<f64>() / (m - ref_start) as f64;
        Ok(DriftEstimate {
            zeta: first / last,
            profile,
            n_acquisitions: self.n,
        })
    }
}

/// Detector percussional-response kernel D(τ): the shot-noise
/// autocorrelation renormalized to unit integral over its symmetric support.
#[derive(Debug, Clone, Serialize)]
pub struct DetectorKernel {
    pub lag_us: Vec<f64>,
    /// One-sided kernel values, units 1/µs; D(−τ) = D(τ).
    pub values: Vec<f64>,
}

impl DetectorKernel {
    /// ∫D dτ over the symmetric support (= 1 after estimation).
    pub fn integral(&self) -> f64 {
        let dt = self.lag_us[1] - self.lag_us[0];
        (self.values[0] + 2.0 * self.values[1..].iter().sum::<f64>()) * dt
    }
}

/// Estimate D(τ) from the (unsubtracted) reference autocorrelation,
/// truncated to `support_us`. Requires ≥ 1 s of reference data.
pub fn detector_response_estimate(
    reference: &AutocorrEstimate,
    interval_us: f64,
    support_us: f64,
) -> Result<DetectorKernel> {
    let data_seconds = reference.n_intervals as f64 * interval_us * 1e-6;
    if data_seconds < 1.0 {
        return Err(Error::Estimator(format!(
            "detector response needs ≥ 1 s of reference data, have {data_seconds:.3} s"
        )));
    }
    let dt = reference.lag_us[1] - reference.lag_us[0];
    let n_keep = (support_us / dt).round() as usize;
    if n_keep + 1 > reference.values.len() {
        return Err(Error::Estimator("requested support exceeds the lag grid".into()));
    }
    let raw: Vec<f64> = reference.values[..=n_keep]
        .iter()
        .map(|v| v + reference.baseline)
        .collect();
    let integral = (raw[0] + 2.0 * raw[1..].iter().sum::<f64>()) * dt;
    if integral <= 0.0 {
        return Err(Error::Estimator("shot-noise autocorrelation has no positive integral".into()));
    }
    Ok(DetectorKernel {
        lag_us: reference.lag_us[..=n_keep].to_vec(),
        values: raw.iter().map(|v| v / integral).collect(),
    })
}

/// Differential autocorrelation, coupled − ζ·reference, calibrated into
/// quadrature units by the unlocked-cavity coherent offset (⟨X⟩ = √2.0):
/// the divisor cal²/2 equals G²η_d, so the output is corrected for the
/// detection efficiency but still contains every loss upstream of it.
pub fn differential_autocorrelation(
    coupled: &AutocorrEstimate,
    reference: &AutocorrEstimate,
    zeta: f64,
    cal_offset_counts: f64,
) -> Result<AutocorrEstimate> {
    if coupled.lag_us != reference.lag_us {
        return Err(Error::Estimator("autocorrelation lag grids differ".into()));
    }
    let norm = cal_offset_counts * cal_offset_counts / 2.0;
    if norm <= 0.0 {
        return Err(Error::Estimator("calibration offset must be nonzero".into()));
    }
    let values = coupled
        .values
        .iter()
        .zip(&reference.values)
        .map(|(c, r)| (c - zeta * r) / norm)
        .collect();
    let std_err = coupled
        .std_err
        .iter()
        .zip(&reference.std_err)
        .map(|(sc, sr)| (sc * sc + zeta * zeta * sr * sr).sqrt() / norm)
        .collect();
    Ok(AutocorrEstimate {
        lag_us: coupled.lag_us.clone(),
        values,
        std_err,
        n_intervals: coupled.n_intervals,
        baseline: 0.0,
    })
}

/// Convolve a one-sided theory curve with the detector kernel, using the
/// stationarity extension ⟨:ΔX(−τ)ΔX(0):⟩ = ⟨:ΔX(τ)ΔX(0):⟩ and treating the
/// theory as fully decayed beyond its grid.
pub fn convolve_theory(
    theory: &AutocorrelationSeries,
    kernel: &DetectorKernel,
) -> Result<AutocorrelationSeries> {
    let dt = theory
        .tau_us
        .windows(2)
        .map(|w| w[1] - w[0])
        .next()
        .ok_or_else(|| Error::Estimator("theory grid too short".into()))?;
    let kdt = kernel.lag_us[1] - kernel.lag_us[0];
    if (dt - kdt).abs() > 1e-9 * dt {
        return Err(Error::Estimator("theory and kernel grids are incompatible".into()));
    }
    let support = kernel.values.len() - 1;
    let n = theory.values.len();
    if support >= n {
        return Err(Error::Estimator("kernel support exceeds the theory series".into()));
    }
    let sample = |idx: isize| -> f64 {
        let j = idx.unsigned_abs();
        if j < n {
            theory.values[j]
        } else {
            0.0
        }
    };
    let values = (0..n)
        .map(|i| {
            let mut acc = kernel.values[0] * sample(i as isize);
            for (j, k) in kernel.values.iter().enumerate().skip(1) {
                acc += k * (sample(i as isize - j as isize) + sample(i as isize + j as isize));
            }
            acc * dt
        })
        .collect();
    Ok(AutocorrelationSeries {
        theta: theory.theta,
        tau_us: theory.tau_us.clone(),
        values,
        std_err: None,
    })
}

/// Lorentzian smoothing of a uniformly gridded spectrum-domain curve,
/// realized as multiplication by e^{−π·FWHM·|τ|} in the lag domain (an even
/// extension removes edge artifacts).
pub fn lorentzian_smooth(values: &[f64], df_mhz: f64, fwhm_mhz: f64) -> Vec<f64> {
    smooth_with_multiplier(values, df_mhz, fwhm_mhz, false)
}

fn smooth_with_multiplier(values: &[f64], df_mhz: f64, fwhm_mhz: f64, square_kernel: bool) -> Vec<f64> {
    let m = values.len();
    if m < 3 || fwhm_mhz <= 0.0 {
        return values.to_vec();
    }
    // Even extension [v0 .. v_{M-1}, v_{M-2} .. v_1], length 2M − 2.
    let ext_len = 2 * m - 2;
    let mut ext: Vec<Complex64> = Vec::with_capacity(ext_len);
    ext.extend(values.iter().map(|&v| Complex64::from(v)));
    ext.extend(values[1..m - 1].iter().rev().map(|&v| Complex64::from(v)));
    let mut planner = rustfft::FftPlanner::new();
    let fft = planner.plan_fft_forward(ext_len);
    let ifft = planner.plan_fft_inverse(ext_len);
    fft.process(&mut ext);
    if square_kernel {
        // Multiply by the transform of k², where k is the smoothing kernel:
        // used for variance propagation. k² transform = self-convolution of
        // the multiplier, done here numerically.
        let mult: Vec<f64> = (0..ext_len).map(|j| lag_multiplier(j, ext_len, df_mhz, fwhm_mhz)).collect();
        let mut kernel: Vec<Complex64> = mult.iter().map(|&w| Complex64::from(w)).collect();
        ifft.process(&mut kernel);
        let mut k2: Vec<Complex64> = kernel
            .iter()
            .map(|k| Complex64::from((k.re / ext_len as f64).powi(2)))
            .collect();
        fft.process(&mut k2);
        for (e, k) in ext.iter_mut().zip(&k2) {
            *e *= k.re;
        }
    } else {
        for (j, e) in ext.iter_mut().enumerate() {
            *e *= lag_multiplier(j, ext_len, df_mhz, fwhm_mhz);
        }
    }
    ifft.process(&mut ext);
    ext[..m].iter().map(|c| c.re / ext_len as f64).collect()
}

fn lag_multiplier(j: usize, len: usize, df_mhz: f64, fwhm_mhz: f64) -> f64 {
    let jj = if j <= len / 2 { j as f64 } else { len as f64 - j as f64 };
    let tau_us = jj / (len as f64 * df_mhz);
    (-std::f64::consts::PI * fwhm_mhz * tau_us).exp()
}

/// Differential spectrum at native and smoothed resolution.
#[derive(Debug, Clone, Serialize)]
pub struct DifferentialSpectrum {
    pub freq_mhz: Vec<f64>,
    /// Unsmoothed log-difference corrected for η_d, mdB.
    pub raw_mdb: Vec<f64>,
    pub raw_std_err_mdb: Vec<f64>,
    /// Lorentzian-smoothed version of the same curve, mdB.
    pub smoothed_mdb: Vec<f64>,
    pub smoothed_std_err_mdb: Vec<f64>,
    pub zeta: f64,
    pub n_signal_windows: usize,
    pub n_reference_windows: usize,
}

/// 10·log₁₀(signal) − 10·log₁₀(ζ·reference), Lorentzian-smoothed, divided by
/// η_d in linear relative units. The DC bin is dropped.
pub fn differential_spectrum(
    signal: &SpectrumEstimate,
    reference: &SpectrumEstimate,
    zeta: f64,
    smoothing_fwhm_mhz: f64,
    eta_d: f64,
) -> Result<DifferentialSpectrum> {
    if signal.freq_mhz != reference.freq_mhz {
        return Err(Error::Estimator("spectrum grids differ".into()));
    }
    if !(eta_d > 0.0 && eta_d <= 1.0) {
        return Err(Error::Estimator("eta_d must be in (0, 1]".into()));
    }
    let df = signal.freq_mhz[1] - signal.freq_mhz[0];
    let n = signal.values.len();
    let mut raw_db = Vec::with_capacity(n - 1);
    let mut raw_sigma_db = Vec::with_capacity(n - 1);
    for k in 1..n {
        let (s, r) = (signal.values[k], reference.values[k]);
        if s <= 0.0 || r <= 0.0 {
            return Err(Error::Estimator(format!("non-positive spectrum at bin {k}")));
        }
        raw_db.push(10.0 * (s / (zeta * r)).log10());
        let rel = (signal.std_err[k] / s).hypot(reference.std_err[k] / r);
        raw_sigma_db.push(10.0 / std::f64::consts::LN_10 * rel);
    }
    let smoothed_db = lorentzian_smooth(&raw_db, df, smoothing_fwhm_mhz);
    let var_db: Vec<f64> = raw_sigma_db.iter().map(|s| s * s).collect();
    let smoothed_var_db = smooth_with_multiplier(&var_db, df, smoothing_fwhm_mhz, true);

    let correct = |db: f64| -> f64 {
        let lin = 10f64.powf(db / 10.0);
        linear_to_mdb(1.0 + (lin - 1.0) / eta_d)
    };
    let raw_mdb: Vec<f64> = raw_db.iter().map(|&d| correct(d)).collect();
    let smoothed_mdb: Vec<f64> = smoothed_db.iter().map(|&d| correct(d)).collect();
    // d(corrected dB)/d(raw dB) ≈ 1/η_d near 0 dB; exact enough for errors.
    let raw_std_err_mdb: Vec<f64> = raw_sigma_db.iter().map(|s| 1e3 * s / eta_d).collect();
    let smoothed_std_err_mdb: Vec<f64> = smoothed_var_db
        .iter()
        .map(|v| 1e3 * v.max(0.0).sqrt() / eta_d)
        .collect();
    Ok(DifferentialSpectrum {
        freq_mhz: signal.freq_mhz[1..].to_vec(),
        raw_mdb,
        raw_std_err_mdb,
        smoothed_mdb,
        smoothed_std_err_mdb,
        zeta,
        n_signal_windows: signal.n_windows,
        n_reference_windows: reference.n_windows,
    })
}

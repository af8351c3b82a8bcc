//! End-to-end pipeline orchestration: model embedding, parallel synthesis,
//! estimation, and the round-trip comparison against the embedded truth.
//!
//! Acquisitions are independent given their stream keys, so synthesis and
//! per-acquisition estimation run in parallel; partial accumulators are
//! merged in acquisition order, keeping every output bit-reproducible
//! regardless of thread count.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::analytic::squeezing_spectrum;
use crate::error::Result;
use crate::metrics::{drive_calibration, DriveConvention};
use crate::params::ExperimentPreset;
use crate::series::SpectrumSeries;
use crate::units::{linear_to_mdb, mhz_to_rad_us};

use super::detector::DetectorModel;
use super::drift::{DriftModel, REFERENCE_EPOCH_START};
use super::estimate::{
    classify_intervals, detector_response_estimate, differential_autocorrelation,
    differential_spectrum, AutocorrAccum, AutocorrEstimate, DetectorKernel, DifferentialSpectrum,
    DriftAccum, DriftEstimate, IntervalLabel, SpectrumAccum,
};
use super::synth::{EmbeddedModel, QuadLabel, SynthConfig, SynthContext};
use super::trace::{AcquisitionRecord, TraceMeta};

/// Full configuration of a synthesis + analysis round trip.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub preset: ExperimentPreset,
    /// Model phase assigned to the "X" quadrature label. The experimental LO
    /// phase contains an arbitrary reflection offset; π/2 matches the
    /// conventional labeling (X squeezed on the empty-cavity resonance).
    pub theta0: f64,
    /// Fraction of the full experimental data volume (0.05 = desk scale).
    pub scale: f64,
    pub seed: u64,
    /// Relative shot-noise droop between the coupled and reference epochs.
    pub drift_droop: f64,
    pub convention: DriveConvention,
    /// Common-mode technical tone (MHz, power relative to shot noise).
    pub tone: Option<(f64, f64)>,
    pub electronic_noise_db: Option<f64>,
    pub max_lag_us: f64,
    pub smoothing_fwhm_mhz: f64,
    /// When false the traces carry pure filtered shot noise (null case).
    pub embed_signal: bool,
}

impl PipelineConfig {
    pub fn new(preset: ExperimentPreset) -> Self {
        Self {
            preset,
            theta0: FRAC_PI_2,
            scale: 0.05,
            seed: 0x5153,
            drift_droop: 0.002,
            convention: DriveConvention::InputCoupling,
            tone: None,
            electronic_noise_db: None,
            max_lag_us: 2.0,
            smoothing_fwhm_mhz: 1.0,
            embed_signal: true,
        }
    }
}

/// Model spectra embedded into the traces: the closed-form squeezing spectra
/// at the cavity output (η = η_out), on the estimator's 10 kHz grid.
pub fn build_model_pair(
    preset: &ExperimentPreset,
    theta0: f64,
    convention: DriveConvention,
) -> Result<(SpectrumSeries, SpectrumSeries)> {
    let eps = drive_calibration(
        preset.p_in,
        preset.params.wavelength,
        preset.params.kappa,
        preset.eta_out,
        convention,
    )?;
    let params = preset.params.with_epsilon(eps);
    let grid: Vec<f64> = (0..=5000).map(|k| mhz_to_rad_us(k as f64 * 0.01)).collect();
    let x = squeezing_spectrum(&params, theta0, preset.eta_out, &grid, true)?;
    let p = squeezing_spectrum(&params, theta0 + FRAC_PI_2, preset.eta_out, &grid, true)?;
    Ok((x, p))
}

/// Assemble the synthesis configuration for a pipeline run.
pub fn build_synth_config(cfg: &PipelineConfig) -> Result<SynthConfig> {
    let model = if cfg.embed_signal {
        let (x, p) = build_model_pair(&cfg.preset, cfg.theta0, cfg.convention)?;
        EmbeddedModel::from_series(&x, &p)?
    } else {
        EmbeddedModel::unity()
    };
    let mut detector = DetectorModel::standard(cfg.preset.eta_d);
    detector.electronic_noise_db = cfg.electronic_noise_db;
    let drift = if cfg.drift_droop == 0.0 {
        DriftModel::flat()
    } else {
        DriftModel::linear_droop(cfg.drift_droop)
    };
    let mut synth = SynthConfig::new(
        cfg.preset.clone(),
        cfg.theta0,
        cfg.convention,
        cfg.embed_signal,
        detector,
        drift,
        model,
        cfg.seed,
        cfg.scale,
    )?;
    synth.tone = cfg.tone;
    Ok(synth)
}

impl PipelineConfig {
    /// Reconstruct the run configuration recorded in a trace file header.
    /// Analysis-side knobs (`max_lag_us`, smoothing) keep their defaults.
    pub fn from_meta(meta: &TraceMeta) -> Self {
        Self {
            preset: meta.preset.clone(),
            theta0: meta.theta0,
            scale: meta.scale,
            seed: meta.seed,
            drift_droop: 1.0 - meta.drift.zeta,
            convention: meta.convention,
            tone: meta.tone,
            electronic_noise_db: meta.detector.electronic_noise_db,
            max_lag_us: 2.0,
            smoothing_fwhm_mhz: 1.0,
            embed_signal: meta.embed_signal,
        }
    }
}

/// Per-quadrature estimation accumulators.
struct QuadAccums {
    ac_coupled: AutocorrAccum,
    ac_reference: AutocorrAccum,
    sp_signal: SpectrumAccum,
    sp_reference: SpectrumAccum,
}

impl QuadAccums {
    fn new(n_lags: usize, dt_us: f64, window_len: usize, fs_hz: f64) -> Self {
        Self {
            ac_coupled: AutocorrAccum::new(n_lags, dt_us),
            ac_reference: AutocorrAccum::new(n_lags, dt_us),
            sp_signal: SpectrumAccum::new(window_len, fs_hz),
            sp_reference: SpectrumAccum::new(window_len, fs_hz),
        }
    }

    fn merge(&mut self, other: &Self) {
        self.ac_coupled.merge(&other.ac_coupled);
        self.ac_reference.merge(&other.ac_reference);
        self.sp_signal.merge(&other.sp_signal);
        self.sp_reference.merge(&other.sp_reference);
    }
}

/// All accumulators of an analysis pass.
pub struct Accumulators {
    x: QuadAccums,
    p: QuadAccums,
    drift: DriftAccum,
    n_lags: usize,
    dt_us: f64,
    window_len: usize,
    sample_rate_hz: f64,
    intervals_per_acq: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Accumulators {
    pub fn new(meta: &TraceMeta, max_lag_us: f64, intervals_per_acq: usize) -> Self {
        let fs = meta.detector.sample_rate_hz;
        let dt_us = meta.detector.dt_us();
        let n_lags = (max_lag_us / dt_us).round() as usize;
        let samples_per_interval = (meta.interval_us / dt_us).round() as usize;
        let window_len = samples_per_interval / 2;
        let fft = FftPlanner::new().plan_fft_forward(window_len);
        Self {
            x: QuadAccums::new(n_lags, dt_us, window_len, fs),
            p: QuadAccums::new(n_lags, dt_us, window_len, fs),
            drift: DriftAccum::new(intervals_per_acq),
            n_lags,
            dt_us,
            window_len,
            sample_rate_hz: fs,
            intervals_per_acq,
            fft,
        }
    }

    /// Empty accumulator set with the same geometry, sharing the FFT plan.
    pub fn fresh(&self) -> Self {
        Self {
            x: QuadAccums::new(self.n_lags, self.dt_us, self.window_len, self.sample_rate_hz),
            p: QuadAccums::new(self.n_lags, self.dt_us, self.window_len, self.sample_rate_hz),
            drift: DriftAccum::new(self.intervals_per_acq),
            n_lags: self.n_lags,
            dt_us: self.dt_us,
            window_len: self.window_len,
            sample_rate_hz: self.sample_rate_hz,
            intervals_per_acq: self.intervals_per_acq,
            fft: Arc::clone(&self.fft),
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.x.merge(&other.x);
        self.p.merge(&other.p);
        self.drift.merge(&other.drift);
    }

    /// Analyze one acquisition into this accumulator set.
    pub fn add_acquisition(&mut self, acq: &AcquisitionRecord) -> Result<()> {
        let labels = classify_intervals(&acq.transmission);
        let n_int = labels.len();
        let spi = acq.samples_per_interval();
        let quad = QuadLabel::from_theta(acq.theta)?;
        let target = match quad {
            QuadLabel::X => &mut self.x,
            QuadLabel::P => &mut self.p,
        };
        let untrapped = !labels.contains(&IntervalLabel::Coupled);
        if untrapped {
            let samples: Vec<f64> = acq.samples.iter().map(|&s| s as f64).collect();
            self.drift.add_untrapped(&samples, n_int);
            return Ok(());
        }
        let ref_start = ((n_int as f64) * REFERENCE_EPOCH_START).round() as usize;
        let mut scratch = Vec::with_capacity(self.window_len);
        for (k, label) in labels.iter().enumerate() {
            let seg: Vec<f64> = acq.samples[k * spi..(k + 1) * spi]
                .iter()
                .map(|&s| s as f64)
                .collect();
            match label {
                IntervalLabel::Coupled => {
                    target.ac_coupled.add_interval(&seg);
                    target.sp_signal.add_window(&seg[..self.window_len], &self.fft, &mut scratch);
                    target.sp_signal.add_window(&seg[self.window_len..], &self.fft, &mut scratch);
                }
                // Reference intervals are taken from the empty-cavity epoch
                // the drift factor is defined against.
                IntervalLabel::Reference if k >= ref_start => {
                    target.ac_reference.add_interval(&seg);
                    target
                        .sp_reference
                        .add_window(&seg[..self.window_len], &self.fft, &mut scratch);
                    target
                        .sp_reference
                        .add_window(&seg[self.window_len..], &self.fft, &mut scratch);
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn finalize_drift(&self) -> Result<DriftEstimate> {
        self.drift.finalize()
    }

    /// (coupled, reference) averaged autocorrelations for one label.
    pub fn finalize_autocorrs(&self, label: QuadLabel) -> Result<(AutocorrEstimate, AutocorrEstimate)> {
        let q = match label {
            QuadLabel::X => &self.x,
            QuadLabel::P => &self.p,
        };
        Ok((q.ac_coupled.finalize()?, q.ac_reference.finalize()?))
    }

    /// (signal, reference) averaged periodograms for one label.
    pub fn finalize_spectra(
        &self,
        label: QuadLabel,
    ) -> Result<(super::estimate::SpectrumEstimate, super::estimate::SpectrumEstimate)> {
        let q = match label {
            QuadLabel::X => &self.x,
            QuadLabel::P => &self.p,
        };
        Ok((q.sp_signal.finalize()?, q.sp_reference.finalize()?))
    }

    /// Reference autocorrelation pooled over both quadratures, as used for
    /// the detector-kernel estimate.
    pub fn finalize_pooled_reference(&self) -> Result<AutocorrEstimate> {
        let mut pooled = self.x.ac_reference.clone();
        pooled.merge(&self.p.ac_reference);
        pooled.finalize()
    }
}

/// Differential results for one quadrature label.
#[derive(Debug, Clone, Serialize)]
pub struct QuadResults {
    pub label: String,
    pub autocorr: AutocorrEstimate,
    /// Forward model of the differential autocorrelation (embedded theory
    /// through the detector kernel), same units and grid.
    pub autocorr_expected: Vec<f64>,
    pub autocorr_chi2_per_bin: f64,
    pub spectrum: DifferentialSpectrum,
    /// Embedded model in mdB on the spectrum grid.
    pub spectrum_model_mdb: Vec<f64>,
    /// χ²/bin of the unsmoothed differential spectrum against the model
    /// over 0.05–40 MHz.
    pub spectrum_chi2_per_bin: f64,
    pub n_coupled_intervals: usize,
    pub n_reference_intervals: usize,
}

/// Everything a round trip produces.
#[derive(Debug, Clone, Serialize)]
pub struct RoundTripReport {
    pub preset: String,
    pub seed: u64,
    pub scale: f64,
    pub zeta_measured: f64,
    pub zeta_true: f64,
    pub drift: DriftEstimate,
    /// Estimated percussional response; absent below 1 s of reference data.
    pub detector_kernel: Option<DetectorKernel>,
    pub x: QuadResults,
    pub p: QuadResults,
    /// χ²/bin of (X + P) against zero: quadrature antisymmetry.
    pub antisymmetry_chi2_per_bin: f64,
    /// Max |smoothed| − 2σ over bins above 30 MHz, mdB (≤ 1 when flat).
    pub high_freq_excess_mdb: f64,
}

/// Run synthesis and analysis in-process without materializing the trace set.
pub fn run_round_trip(cfg: &PipelineConfig) -> Result<RoundTripReport> {
    let synth_cfg = build_synth_config(cfg)?;
    let ctx = SynthContext::new(synth_cfg)?;
    let meta = ctx.cfg().meta();
    let n_acq = ctx.cfg().n_acquisitions();
    let intervals = ctx.cfg().intervals_per_acq;
    let mut acc = Accumulators::new(&meta, cfg.max_lag_us, intervals);
    let chunk = rayon::current_num_threads().max(1) * 4;
    let mut base = 0;
    while base < n_acq {
        let hi = (base + chunk).min(n_acq);
        let partials: Vec<Result<Accumulators>> = (base..hi)
            .into_par_iter()
            .map(|idx| {
                let mut part = acc.fresh();
                let acq = ctx.synthesize_acquisition(idx);
                part.add_acquisition(&acq)?;
                Ok(part)
            })
            .collect();
        for part in partials {
            acc.merge(&part?);
        }
        base = hi;
    }
    finalize_report(cfg, ctx.cfg(), &meta, acc)
}

/// Analyze a stream of acquisitions (e.g. from a trace file) and compare to
/// the embedded model reconstructed from the file metadata.
///
/// Accumulation goes through one partial per acquisition exactly like
/// [`run_round_trip`], so a file-based analysis is bit-identical to the
/// streaming one.
pub fn analyze_acquisitions(
    cfg: &PipelineConfig,
    meta: &TraceMeta,
    acquisitions: impl Iterator<Item = Result<AcquisitionRecord>>,
) -> Result<RoundTripReport> {
    let synth_cfg = build_synth_config(cfg)?;
    let intervals = synth_cfg.intervals_per_acq;
    let mut acc = Accumulators::new(meta, cfg.max_lag_us, intervals);
    for acq in acquisitions {
        let mut part = acc.fresh();
        part.add_acquisition(&acq?)?;
        acc.merge(&part);
    }
    finalize_report(cfg, &synth_cfg, meta, acc)
}

fn finalize_report(
    cfg: &PipelineConfig,
    synth_cfg: &SynthConfig,
    meta: &TraceMeta,
    acc: Accumulators,
) -> Result<RoundTripReport> {
    let drift = acc.drift.finalize()?;
    // Pool both quadratures' reference data for the detector kernel.
    let kernel =
        detector_response_estimate(&acc.finalize_pooled_reference()?, meta.interval_us, 1.0).ok();

    let quad = |label: QuadLabel, q: &QuadAccums| -> Result<QuadResults> {
        let coupled = q.ac_coupled.finalize()?;
        let reference = q.ac_reference.finalize()?;
        let autocorr =
            differential_autocorrelation(&coupled, &reference, drift.zeta, meta.cal_offset_counts)?;
        let expected =
            synth_cfg.expected_differential_autocorr(label, autocorr.values.len() - 1);
        let ac_chi2 = chi2_per_bin(
            autocorr.values.iter().zip(&expected).map(|(v, e)| v - e),
            autocorr.std_err.iter().copied(),
        );
        let spectrum = differential_spectrum(
            &q.sp_signal.finalize()?,
            &q.sp_reference.finalize()?,
            drift.zeta,
            cfg.smoothing_fwhm_mhz,
            meta.detector.eta_d,
        )?;
        let model_mdb: Vec<f64> = spectrum
            .freq_mhz
            .iter()
            .map(|&f| linear_to_mdb(synth_cfg.model.eval(label, f)))
            .collect();
        let in_band: Vec<usize> = spectrum
            .freq_mhz
            .iter()
            .enumerate()
            .filter(|(_, f)| **f >= 0.05 && **f <= 40.0)
            .map(|(i, _)| i)
            .collect();
        let sp_chi2 = chi2_per_bin(
            in_band.iter().map(|&i| spectrum.raw_mdb[i] - model_mdb[i]),
            in_band.iter().map(|&i| spectrum.raw_std_err_mdb[i]),
        );
        Ok(QuadResults {
            label: match label {
                QuadLabel::X => "X".into(),
                QuadLabel::P => "P".into(),
            },
            autocorr,
            autocorr_expected: expected,
            autocorr_chi2_per_bin: ac_chi2,
            spectrum,
            spectrum_model_mdb: model_mdb,
            spectrum_chi2_per_bin: sp_chi2,
            n_coupled_intervals: q.ac_coupled.n_intervals(),
            n_reference_intervals: q.ac_reference.n_intervals(),
        })
    };
    let x = quad(QuadLabel::X, &acc.x)?;
    let p = quad(QuadLabel::P, &acc.p)?;

    let antisym = chi2_per_bin(
        x.spectrum
            .raw_mdb
            .iter()
            .zip(&p.spectrum.raw_mdb)
            .map(|(a, b)| a + b),
        x.spectrum
            .raw_std_err_mdb
            .iter()
            .zip(&p.spectrum.raw_std_err_mdb)
            .map(|(a, b)| a.hypot(*b)),
    );

    let mut high_excess = f64::NEG_INFINITY;
    for q in [&x, &p] {
        for (i, f) in q.spectrum.freq_mhz.iter().enumerate() {
            if *f > 30.0 && *f <= 48.0 {
                let excess = q.spectrum.smoothed_mdb[i].abs()
                    - 2.0 * q.spectrum.smoothed_std_err_mdb[i];
                high_excess = high_excess.max(excess);
            }
        }
    }

    Ok(RoundTripReport {
        preset: meta.preset.name.clone(),
        seed: meta.seed,
        scale: cfg.scale,
        zeta_measured: drift.zeta,
        zeta_true: meta.drift.zeta,
        drift,
        detector_kernel: kernel,
        x,
        p,
        antisymmetry_chi2_per_bin: antisym,
        high_freq_excess_mdb: high_excess,
    })
}

fn chi2_per_bin(
    deviations: impl Iterator<Item = f64>,
    sigmas: impl Iterator<Item = f64>,
) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (d, s) in deviations.zip(sigmas) {
        if s > 0.0 {
            sum += (d / s) * (d / s);
            n += 1;
        }
    }
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

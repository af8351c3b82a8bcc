//! Synthetic homodyne trace generation.
//!
//! Each 200 µs interval is an independent stationary Gaussian process built
//! by spectral-factorization filtering: white Gaussian noise is shaped in the
//! frequency domain by the anti-alias gain and, during coupled spans, by the
//! embedded squeezing model, 1 + η_d(S_θ(f) − 1). The slow shot-noise drift
//! scales the variance across the 20 ms acquisition, and the result is
//! quantized to the ADC grid. Every interval derives its own stream key from
//! (seed, acquisition, interval), so synthesis is deterministic per seed and
//! embarrassingly parallel across acquisitions.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::metrics::DriveConvention;
use crate::params::ExperimentPreset;
use crate::series::SpectrumSeries;

use super::detector::{bin_freq_mhz, DetectorModel};
use super::drift::DriftModel;
use super::trace::{AcquisitionRecord, TraceMeta};

/// Embedded model spectra for the two quadrature labels, linear scale,
/// on an ascending frequency grid (MHz). Outside the grid S = 1.
#[derive(Debug, Clone)]
pub struct EmbeddedModel {
    pub freq_mhz: Vec<f64>,
    pub s_x: Vec<f64>,
    pub s_p: Vec<f64>,
}

impl EmbeddedModel {
    pub fn from_series(x: &SpectrumSeries, p: &SpectrumSeries) -> Result<Self> {
        if x.omega_rad_us != p.omega_rad_us {
            return Err(Error::Estimator("X and P model grids differ".into()));
        }
        if x.omega_rad_us.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Estimator("model grid must be ascending".into()));
        }
        Ok(Self {
            freq_mhz: x.freq_mhz(),
            s_x: x.values.clone(),
            s_p: p.values.clone(),
        })
    }

    /// Flat shot-noise-only model.
    pub fn unity() -> Self {
        Self {
            freq_mhz: vec![0.0, 50.0],
            s_x: vec![1.0, 1.0],
            s_p: vec![1.0, 1.0],
        }
    }

    /// Linear interpolation of the labeled spectrum at `f_mhz`.
    pub fn eval(&self, label: QuadLabel, f_mhz: f64) -> f64 {
        let s = match label {
            QuadLabel::X => &self.s_x,
            QuadLabel::P => &self.s_p,
        };
        let grid = &self.freq_mhz;
        if f_mhz <= grid[0] || f_mhz >= *grid.last().unwrap() {
            return 1.0;
        }
        let hi = grid.partition_point(|&g| g < f_mhz).max(1);
        let (f0, f1) = (grid[hi - 1], grid[hi]);
        let w = (f_mhz - f0) / (f1 - f0);
        s[hi - 1] * (1.0 - w) + s[hi] * w
    }
}

/// Quadrature label of an acquisition; X ↦ θ = 0, P ↦ θ = π/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadLabel {
    X,
    P,
}

impl QuadLabel {
    pub fn theta(&self) -> f64 {
        match self {
            Self::X => 0.0,
            Self::P => FRAC_PI_2,
        }
    }

    pub fn from_theta(theta: f64) -> Result<Self> {
        if (theta - 0.0).abs() < 1e-9 {
            Ok(Self::X)
        } else if (theta - FRAC_PI_2).abs() < 1e-9 {
            Ok(Self::P)
        } else {
            Err(Error::Estimator(format!("unlabeled quadrature phase {theta}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcqKind {
    Trapped(QuadLabel),
    /// Atom left within the first 100 µs; shot noise throughout. Used for
    /// the drift measurement.
    Untrapped(QuadLabel),
}

/// Full synthesis configuration.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub preset: ExperimentPreset,
    pub theta0: f64,
    pub convention: DriveConvention,
    pub embed_signal: bool,
    pub scale: f64,
    pub detector: DetectorModel,
    pub drift: DriftModel,
    pub model: EmbeddedModel,
    pub n_trapped_per_quad: usize,
    pub n_untrapped: usize,
    pub seed: u64,
    pub tone: Option<(f64, f64)>,
    pub intervals_per_acq: usize,
    pub samples_per_interval: usize,
}

/// The full experiment logged ~3 s coupled / ~30 s reference per quadrature;
/// `scale` shrinks it (0.05 is the desk-scale default).
pub fn desk_scale_counts(scale: f64) -> (usize, usize) {
    let trapped = ((scale * 1875.0).round() as usize).max(2);
    let untrapped = ((scale * 1920.0).round() as usize).max(4);
    (trapped, untrapped)
}

impl SynthConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        preset: ExperimentPreset,
        theta0: f64,
        convention: DriveConvention,
        embed_signal: bool,
        detector: DetectorModel,
        drift: DriftModel,
        model: EmbeddedModel,
        seed: u64,
        scale: f64,
    ) -> Result<Self> {
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::Config("pipeline scale must be in (0, 1]".into()));
        }
        let (n_trapped_per_quad, n_untrapped) = desk_scale_counts(scale);
        Ok(Self {
            preset,
            theta0,
            convention,
            embed_signal,
            scale,
            detector,
            drift,
            model,
            n_trapped_per_quad,
            n_untrapped,
            seed,
            tone: None,
            intervals_per_acq: 100,
            samples_per_interval: 20_000,
        })
    }

    pub fn n_acquisitions(&self) -> usize {
        2 * self.n_trapped_per_quad + self.n_untrapped
    }

    pub fn plan(&self, idx: usize) -> AcqKind {
        let n = self.n_trapped_per_quad;
        if idx < n {
            AcqKind::Trapped(QuadLabel::X)
        } else if idx < 2 * n {
            AcqKind::Trapped(QuadLabel::P)
        } else if (idx - 2 * n).is_multiple_of(2) {
            AcqKind::Untrapped(QuadLabel::X)
        } else {
            AcqKind::Untrapped(QuadLabel::P)
        }
    }

    pub fn meta(&self) -> TraceMeta {
        TraceMeta {
            preset: self.preset.clone(),
            theta0: self.theta0,
            convention: self.convention,
            scale: self.scale,
            embed_signal: self.embed_signal,
            seed: self.seed,
            detector: self.detector,
            drift: self.drift,
            acquisition_ms: self.intervals_per_acq as f64 * self.samples_per_interval as f64
                / self.detector.sample_rate_hz
                * 1e3,
            interval_us: self.samples_per_interval as f64 / self.detector.sample_rate_hz * 1e6,
            cal_offset_counts: self.detector.calibration_offset_counts(),
            tone: self.tone,
        }
    }

    /// Expected differential autocorrelation (in the calibrated ⟨:ΔXΔX:⟩
    /// units the analysis emits) for the embedded model at label θ:
    /// e[m] = (1/4N) Σ_k |H(f_k)|² (S_θ(f_k) − 1) cos(2πkm/N).
    /// This is the exact forward model of synthesis + estimator, i.e. the
    /// detector-kernel convolution of the embedded theory.
    pub fn expected_differential_autocorr(&self, label: QuadLabel, n_lags: usize) -> Vec<f64> {
        let n = self.samples_per_interval;
        let fs_mhz = self.detector.sample_rate_hz / 1e6;
        let gains: Vec<f64> = (0..n)
            .map(|k| {
                let f = bin_freq_mhz(k, n, fs_mhz);
                self.detector.filter.gain_sq(f) * (self.model.eval(label, f) - 1.0)
            })
            .collect();
        (0..=n_lags)
            .map(|m| {
                let mut acc = 0.0;
                for (k, g) in gains.iter().enumerate() {
                    acc += g * (TAU * (k * m) as f64 / n as f64).cos();
                }
                acc / (4.0 * n as f64)
            })
            .collect()
    }
}

/// Shared per-run tables: FFT plans and frequency-domain gain curves.
pub struct SynthContext {
    cfg: SynthConfig,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    gain_ref: Vec<f64>,
    gain_x: Vec<f64>,
    gain_p: Vec<f64>,
}

impl SynthContext {
    pub fn new(cfg: SynthConfig) -> Result<Self> {
        let n = cfg.samples_per_interval;
        let fs_mhz = cfg.detector.sample_rate_hz / 1e6;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let mut gain_ref = Vec::with_capacity(n);
        let mut gain_x = Vec::with_capacity(n);
        let mut gain_p = Vec::with_capacity(n);
        for k in 0..n {
            let f = bin_freq_mhz(k, n, fs_mhz);
            let h2 = cfg.detector.filter.gain_sq(f);
            gain_ref.push(h2.sqrt());
            for (label, out) in [(QuadLabel::X, &mut gain_x), (QuadLabel::P, &mut gain_p)] {
                let s = cfg.model.eval(label, f);
                let factor = 1.0 + cfg.detector.eta_d * (s - 1.0);
                if factor < 0.0 {
                    return Err(Error::Estimator(format!(
                        "embedded spectrum requires negative variance at {f} MHz"
                    )));
                }
                out.push((h2 * factor).sqrt());
            }
        }
        Ok(Self {
            cfg,
            fft,
            ifft,
            gain_ref,
            gain_x,
            gain_p,
        })
    }

    pub fn cfg(&self) -> &SynthConfig {
        &self.cfg
    }

    /// Synthesize acquisition `idx`. Pure function of (config, idx).
    pub fn synthesize_acquisition(&self, idx: usize) -> AcquisitionRecord {
        let cfg = &self.cfg;
        let kind = cfg.plan(idx);
        let n_int = cfg.intervals_per_acq;
        let n = cfg.samples_per_interval;
        let mut acq_rng = ChaCha12Rng::seed_from_u64(mix_seed(cfg.seed, idx as u64, u64::MAX));

        // Coupled span: 4..=12 intervals (mean 8 ≙ 1.6 ms), then one
        // in-between interval while the atom leaves, then empty cavity.
        let coupled_span = match kind {
            AcqKind::Trapped(_) => (4 + (acq_rng.random::<u64>() % 9) as usize).min(n_int / 2),
            AcqKind::Untrapped(_) => 0,
        };
        let tone_phase: f64 = acq_rng.random::<f64>() * TAU;

        let label = match kind {
            AcqKind::Trapped(l) | AcqKind::Untrapped(l) => l,
        };
        let mut transmission = Vec::with_capacity(n_int);
        for k in 0..n_int {
            let jitter: f64 = acq_rng.random();
            let t = match kind {
                AcqKind::Trapped(_) if k < coupled_span => 0.015 + 0.01 * jitter,
                AcqKind::Trapped(_) if k == coupled_span => 0.45,
                AcqKind::Untrapped(_) if k == 0 => 0.5,
                _ => 0.92 + 0.08 * jitter,
            };
            transmission.push(t);
        }

        let clip = cfg.detector.clip_counts();
        let sigma = cfg.detector.shot_rms_counts;
        let mut samples = Vec::with_capacity(n_int * n);
        let mut buf: Vec<Complex64> = vec![Complex64::ZERO; n];
        for k in 0..n_int {
            let coupled = matches!(kind, AcqKind::Trapped(_)) && k < coupled_span;
            let gains = if coupled {
                match label {
                    QuadLabel::X => &self.gain_x,
                    QuadLabel::P => &self.gain_p,
                }
            } else {
                &self.gain_ref
            };
            let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(cfg.seed, idx as u64, k as u64));
            for b in buf.iter_mut() {
                *b = Complex64::new(rng.sample(StandardNormal), 0.0);
            }
            self.fft.process(&mut buf);
            for (b, g) in buf.iter_mut().zip(gains) {
                *b *= *g;
            }
            self.ifft.process(&mut buf);
            let t_frac = (k as f64 + 0.5) / n_int as f64;
            let scale = sigma * cfg.drift.variance_factor(t_frac).sqrt() / n as f64;
            let elec_rms = cfg
                .detector
                .electronic_noise_db
                .map(|db| sigma * 10f64.powf(-db / 20.0));
            let (tone_amp, tone_omega) = match cfg.tone {
                Some((f_mhz, rel)) => {
                    let h = cfg.detector.filter.gain_sq(f_mhz).sqrt();
                    // A²/2 = rel·σ² before quantization.
                    (h * sigma * (2.0 * rel).sqrt(), TAU * f_mhz * 1e6 / cfg.detector.sample_rate_hz)
                }
                None => (0.0, 0.0),
            };
            // The tone rides the same analog chain as the shot noise, so it
            // follows the slow gain drift and is fully common-mode.
            let tone_scale = tone_amp * cfg.drift.variance_factor(t_frac).sqrt();
            let base_index = (k * n) as f64;
            for (j, b) in buf.iter().enumerate() {
                let mut v = b.re * scale;
                if tone_amp != 0.0 {
                    v += tone_scale * (tone_omega * (base_index + j as f64) + tone_phase).sin();
                }
                if let Some(erms) = elec_rms {
                    let e: f64 = rng.sample(StandardNormal);
                    v += erms * e;
                }
                let q = v.round().clamp(-(clip as f64) - 1.0, clip as f64);
                samples.push(q as i16);
            }
        }
        AcquisitionRecord {
            theta: label.theta(),
            transmission,
            samples,
        }
    }
}

/// SplitMix64-style mixing of (seed, acquisition, interval) into a stream key.
fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9e3779b97f4a7c15) ^ b.wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

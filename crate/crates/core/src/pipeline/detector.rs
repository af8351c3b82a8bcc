//! Detector model of the balanced homodyne + digitizer chain.
//!
//! The digitizer samples at 100 MHz with 14-bit resolution behind an
//! anti-alias filter rolling off at 40 MHz. The filter's exact shape is not
//! critical — only its shot-noise autocorrelation kernel D(τ) is, and that is
//! estimated from reference data anyway — so a 6th-order low-pass is the
//! default, with an ideal brick wall available for tests.

use serde::{Deserialize, Serialize};

/// Anti-alias filter magnitude response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AntiAliasFilter {
    /// |H(f)|² = 1 / (1 + (f/f_c)¹²).
    Butterworth6 { cutoff_mhz: f64 },
    /// Ideal low-pass: |H| = 1 below f_c, 0 above.
    BrickWall { cutoff_mhz: f64 },
}

impl AntiAliasFilter {
    /// Power gain |H(f)|² at frequency `f_mhz` (MHz, non-negative).
    pub fn gain_sq(&self, f_mhz: f64) -> f64 {
        match *self {
            Self::Butterworth6 { cutoff_mhz } => {
                let r = (f_mhz / cutoff_mhz).powi(12);
                1.0 / (1.0 + r)
            }
            Self::BrickWall { cutoff_mhz } => {
                if f_mhz.abs() <= cutoff_mhz {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Acquisition-chain description used by both synthesis and analysis.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Digitizer rate, Hz.
    pub sample_rate_hz: f64,
    /// ADC resolution in bits (signed counts, clipped symmetrically).
    pub adc_bits: u32,
    pub filter: AntiAliasFilter,
    /// Homodyne detection efficiency η_d.
    pub eta_d: f64,
    /// RMS of the unfiltered shot noise in ADC counts; sets the digitization
    /// head-room. The quantization penalty is ≪ 0.1 mdB at the default.
    pub shot_rms_counts: f64,
    /// Electronic noise power relative to shot noise, dB below shot
    /// (the hardware spec guarantees ≥ 9 dB). `None` disables it.
    pub electronic_noise_db: Option<f64>,
}

impl DetectorModel {
    /// The experiment's detection chain: 100 MHz, 14 bit, 40 MHz bandwidth,
    /// η_d = 0.55, no electronic noise.
    pub fn standard(eta_d: f64) -> Self {
        Self {
            sample_rate_hz: 100e6,
            adc_bits: 14,
            filter: AntiAliasFilter::Butterworth6 { cutoff_mhz: 40.0 },
            eta_d,
            shot_rms_counts: 160.0,
            electronic_noise_db: None,
        }
    }

    /// Sample spacing in µs.
    pub fn dt_us(&self) -> f64 {
        1e6 / self.sample_rate_hz
    }

    /// Largest representable count (symmetric clip).
    pub fn clip_counts(&self) -> i32 {
        (1 << (self.adc_bits - 1)) - 1
    }

    /// Counts per unit of the quadrature X (shot-noise variance ¼ maps to
    /// `shot_rms_counts`²).
    pub fn counts_per_x(&self) -> f64 {
        2.0 * self.shot_rms_counts
    }

    /// Mean homodyne offset, in counts, measured for the unlocked-cavity
    /// coherent calibration state |α⟩ with ⟨X⟩ = α = √2.0: G·√η_d·√2.
    pub fn calibration_offset_counts(&self) -> f64 {
        self.counts_per_x() * (2.0 * self.eta_d).sqrt()
    }

    /// Shot-noise autocorrelation kernel of the filter on the sample grid,
    /// C_h[m] = (1/N)Σ_k |H(f_k)|² e^{2πikm/N}, for |m| ≤ `max_lag` (returned
    /// one-sided, m = 0..=max_lag). Unit DC gain makes Σ_m C_h[m]·dt ≈ 1/f_s·Σ…
    pub fn shot_kernel(&self, n: usize, max_lag: usize) -> Vec<f64> {
        let fs_mhz = self.sample_rate_hz / 1e6;
        (0..=max_lag)
            .map(|m| {
                let mut acc = 0.0;
                for k in 0..n {
                    let f = bin_freq_mhz(k, n, fs_mhz);
                    acc += self.filter.gain_sq(f) * (std::f64::consts::TAU * (k * m) as f64 / n as f64).cos();
                }
                acc / n as f64
            })
            .collect()
    }
}

/// Signed frequency magnitude of FFT bin `k` out of `n` at sample rate
/// `fs_mhz`: bins above n/2 alias to negative frequencies.
pub fn bin_freq_mhz(k: usize, n: usize, fs_mhz: f64) -> f64 {
    let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    (kk * fs_mhz / n as f64).abs()
}

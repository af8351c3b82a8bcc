//! Slow shot-noise drift of the sample-and-hold local-oscillator control.
//!
//! During the 20 ms acquisition the shot-noise variance ramps linearly. The
//! compensation factor ζ is defined as the mean variance over the coupled
//! epoch (first 1.6 ms) divided by the mean over the reference epoch (last
//! 16 ms); the default 0.2 % droop is parametrized so that ζ = 0.998 exactly.

use serde::{Deserialize, Serialize};

/// Fraction of the acquisition occupied by the coupled epoch (1.6 of 20 ms).
pub const COUPLED_EPOCH_FRACTION: f64 = 0.08;
/// Start of the reference epoch as a fraction of the acquisition (4 of 20 ms).
pub const REFERENCE_EPOCH_START: f64 = 0.2;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DriftModel {
    /// Target compensation factor ζ = ⟨var⟩_coupled-epoch / ⟨var⟩_ref-epoch.
    pub zeta: f64,
    /// Linear variance slope: var(t) = 1 + slope·(t/T_acq).
    pub slope: f64,
}

impl DriftModel {
    /// Linear ramp sized so the epoch-mean ratio is exactly ζ = 1 − droop.
    ///
    /// The epoch means of t/T are 0.04 and 0.6, so
    /// slope = droop / (0.6(1 − droop) − 0.04).
    pub fn linear_droop(droop: f64) -> Self {
        let zeta = 1.0 - droop;
        Self {
            zeta,
            slope: droop / (0.6 * zeta - 0.04),
        }
    }

    pub fn flat() -> Self {
        Self { zeta: 1.0, slope: 0.0 }
    }

    /// Variance multiplier at fractional acquisition time t/T ∈ [0, 1].
    pub fn variance_factor(&self, t_frac: f64) -> f64 {
        1.0 + self.slope * t_frac
    }
}

//! System parameters, validation, and the two experimental presets.
//!
//! The model is a single two-state atom coupled to one cavity mode, driven by
//! a coherent probe of amplitude ε at frequency ω. Detunings are defined with
//! respect to the probe: Δ꜀ = ω − ω꜀, Δₐ = ω − ωₐ.

use std::collections::BTreeMap;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::mhz_to_rad_us;

/// Physical rates and detunings, all angular (rad/µs).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Atom-cavity coupling g.
    pub g: f64,
    /// Cavity field decay rate κ.
    pub kappa: f64,
    /// Atomic dipole decay rate γ.
    pub gamma: f64,
    /// Extra decoherence rate attributed to atomic motion. Enters ω̃ₐ only
    /// when an operation is asked to include it; never adds radiated flux.
    pub gamma_motion: f64,
    /// Probe–cavity detuning Δ꜀ = ω − ω꜀.
    pub delta_c: f64,
    /// Probe–atom detuning Δₐ = ω − ωₐ.
    pub delta_a: f64,
    /// Drive amplitude ε.
    pub epsilon: f64,
    /// Probe wavelength in m, used for power conversion.
    pub wavelength: f64,
}

impl SystemParams {
    /// Build from linear frequencies in MHz, as quoted in the literature.
    #[allow(clippy::too_many_arguments)]
    pub fn from_linear_mhz(
        g_mhz: f64,
        kappa_mhz: f64,
        gamma_mhz: f64,
        gamma_motion_mhz: f64,
        delta_c_mhz: f64,
        delta_a_mhz: f64,
        epsilon_mhz: f64,
        wavelength_m: f64,
    ) -> Self {
        Self {
            g: mhz_to_rad_us(g_mhz),
            kappa: mhz_to_rad_us(kappa_mhz),
            gamma: mhz_to_rad_us(gamma_mhz),
            gamma_motion: mhz_to_rad_us(gamma_motion_mhz),
            delta_c: mhz_to_rad_us(delta_c_mhz),
            delta_a: mhz_to_rad_us(delta_a_mhz),
            epsilon: mhz_to_rad_us(epsilon_mhz),
            wavelength: wavelength_m,
        }
    }

    /// List every violated invariant; empty iff the parameters are physical.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.kappa.is_nan() || self.kappa <= 0.0 {
            violations.push("kappa must be positive".to_string());
        }
        if self.gamma.is_nan() || self.gamma <= 0.0 {
            violations.push("gamma must be positive".to_string());
        }
        if self.g < 0.0 {
            violations.push("g must be non-negative".to_string());
        }
        if self.epsilon < 0.0 {
            violations.push("epsilon must be non-negative".to_string());
        }
        if self.gamma_motion < 0.0 {
            violations.push("gamma_motion must be non-negative".to_string());
        }
        if self.wavelength.is_nan() || self.wavelength <= 0.0 {
            violations.push("wavelength must be positive".to_string());
        }
        for (name, v) in [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("gamma_motion", self.gamma_motion),
            ("delta_c", self.delta_c),
            ("delta_a", self.delta_a),
            ("epsilon", self.epsilon),
        ] {
            if !v.is_finite() {
                violations.push(format!("{name} must be finite"));
            }
        }
        ValidationReport { violations }
    }

    /// Validate and convert into a hard error on any violation.
    pub fn checked(&self) -> Result<&Self> {
        let report = self.validate();
        if report.is_ok() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(report.to_string()))
        }
    }

    /// Complex detunings ω̃꜀ = Δ꜀ + iκ and ω̃ₐ = Δₐ + i·γ_eff, where γ_eff is
    /// γ + γ_motion when `include_motion` is set and bare γ otherwise.
    pub fn complex_detunings(&self, include_motion: bool) -> (Complex64, Complex64) {
        let gamma_eff = if include_motion {
            self.gamma + self.gamma_motion
        } else {
            self.gamma
        };
        (
            Complex64::new(self.delta_c, self.kappa),
            Complex64::new(self.delta_a, gamma_eff),
        )
    }

    /// Copy with a different drive amplitude (rad/µs).
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..*self }
    }
}

/// Report-style validation outcome.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            write!(f, "ok")
        } else {
            write!(f, "{}", self.violations.join("; "))
        }
    }
}

/// A complex detuning: real part is the detuning, imaginary part the
/// half-linewidth. Physical values have im ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexFrequency {
    pub re: f64,
    pub im: f64,
}

impl ComplexFrequency {
    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn is_physical(&self) -> bool {
        self.im >= 0.0
    }
}

impl From<Complex64> for ComplexFrequency {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// The two probe configurations of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PresetName {
    /// Probe on the empty-cavity resonance, atom detuned by +8 MHz.
    ConfigA,
    /// Probe near the two-photon resonance: Δ꜀/2π = −12 MHz, Δₐ/2π = +3 MHz.
    ConfigB,
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "configa" | "config-a" | "a" => Ok(Self::ConfigA),
            "configb" | "config-b" | "b" => Ok(Self::ConfigB),
            _ => Err(Error::Config(format!("unknown preset '{s}'"))),
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConfigA => write!(f, "configA"),
            Self::ConfigB => write!(f, "configB"),
        }
    }
}

/// Full experimental configuration: system rates plus the detection budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPreset {
    pub name: String,
    pub params: SystemParams,
    /// Fraction of the intracavity loss rate that exits through the output
    ///(input) mirror: T / (2(T + L)) for a symmetric two-mirror cavity.
    pub eta_out: f64,
    /// Homodyne detection efficiency.
    pub eta_d: f64,
    /// Probe power impinging on the cavity, W.
    pub p_in: f64,
}

/// Per-mirror transmission of the resonator, ppm.
pub const MIRROR_TRANSMISSION_PPM: f64 = 2.8;
/// Per-mirror absorption/scatter loss of the resonator, ppm.
pub const MIRROR_LOSS_PPM: f64 = 4.0;

/// Output-port extraction efficiency from the mirror budget of a symmetric
/// cavity: 2.8 / (2·(2.8 + 4.0)) ≈ 0.206.
pub fn eta_out_from_mirror_budget() -> f64 {
    MIRROR_TRANSMISSION_PPM / (2.0 * (MIRROR_TRANSMISSION_PPM + MIRROR_LOSS_PPM))
}

/// Probe wavelength, m (the 780.24 nm D2 line of ⁸⁵Rb).
pub const PROBE_WAVELENGTH_M: f64 = 780.24e-9;

/// Probe power impinging on the cavity, W.
pub const PROBE_POWER_W: f64 = 8.5e-12;

/// Look up one of the two experimental presets.
///
/// Both share g/2π = 12 MHz, κ/2π = 1.3 MHz, γ/2π = 3 MHz, a 1 MHz motional
/// decoherence rate, P_in = 8.5 pW and η_d = 0.55; they differ only in the
/// probe detunings. The preset drive amplitude is left at zero; use
/// [`crate::metrics::drive_calibration`] to set ε for a chosen convention.
pub fn preset(name: PresetName) -> ExperimentPreset {
    let (delta_c_mhz, delta_a_mhz) = match name {
        PresetName::ConfigA => (0.0, 8.0),
        PresetName::ConfigB => (-12.0, 3.0),
    };
    ExperimentPreset {
        name: name.to_string(),
        params: SystemParams::from_linear_mhz(
            12.0,
            1.3,
            3.0,
            1.0,
            delta_c_mhz,
            delta_a_mhz,
            0.0,
            PROBE_WAVELENGTH_M,
        ),
        eta_out: eta_out_from_mirror_budget(),
        eta_d: 0.55,
        p_in: PROBE_POWER_W,
    }
}

/// Keys accepted by the flat key-value preset file and by CLI overrides.
pub const CONFIG_KEYS: [&str; 9] = [
    "g_mhz",
    "kappa_mhz",
    "gamma_mhz",
    "gamma_motion_mhz",
    "delta_c_mhz",
    "delta_a_mhz",
    "p_in_pw",
    "eta_d",
    "eta_out",
];

/// Parse a flat `key = value` configuration file body. Lines starting with
/// `#` and blank lines are ignored; unknown keys are rejected.
pub fn parse_config_str(body: &str) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in body.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
        let key = key.trim().to_string();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key '{key}'", lineno + 1)));
        }
        let value: f64 = value.trim().parse().map_err(|_| {
            Error::Config(format!("line {}: value for '{key}' is not a number", lineno + 1))
        })?;
        map.insert(key, value);
    }
    Ok(map)
}

/// Apply key-value overrides to a preset (keys as in [`CONFIG_KEYS`]).
pub fn apply_overrides(preset: &mut ExperimentPreset, overrides: &BTreeMap<String, f64>) -> Result<()> {
    for (key, &v) in overrides {
        match key.as_str() {
            "g_mhz" => preset.params.g = mhz_to_rad_us(v),
            "kappa_mhz" => preset.params.kappa = mhz_to_rad_us(v),
            "gamma_mhz" => preset.params.gamma = mhz_to_rad_us(v),
            "gamma_motion_mhz" => preset.params.gamma_motion = mhz_to_rad_us(v),
            "delta_c_mhz" => preset.params.delta_c = mhz_to_rad_us(v),
            "delta_a_mhz" => preset.params.delta_a = mhz_to_rad_us(v),
            "p_in_pw" => preset.p_in = v * 1e-12,
            "eta_d" => preset.eta_d = v,
            "eta_out" => preset.eta_out = v,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
    }
    if !(preset.eta_out > 0.0 && preset.eta_out <= 1.0) {
        return Err(Error::Config("eta_out must be in (0, 1]".into()));
    }
    if !(preset.eta_d > 0.0 && preset.eta_d <= 1.0) {
        return Err(Error::Config("eta_d must be in (0, 1]".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_kappa_is_flagged() {
        let mut p = preset(PresetName::ConfigA).params;
        p.kappa = 0.0;
        let report = p.validate();
        assert!(report.violations.iter().any(|v| v.contains("kappa")));
    }

    #[test]
    fn negative_g_is_flagged() {
        let mut p = preset(PresetName::ConfigA).params;
        p.g = -1.0;
        assert!(p.validate().violations.iter().any(|v| v.contains("g must")));
    }

    #[test]
    fn presets_are_valid_by_construction() {
        for name in [PresetName::ConfigA, PresetName::ConfigB] {
            assert!(preset(name).params.validate().is_ok());
        }
    }

    #[test]
    fn preset_detunings() {
        let a = preset(PresetName::ConfigA);
        assert_relative_eq!(a.params.delta_c, 0.0);
        assert_relative_eq!(a.params.delta_a, TAU * 8.0);
        let b = preset(PresetName::ConfigB);
        assert_relative_eq!(b.params.delta_c, -TAU * 12.0);
        assert_relative_eq!(b.params.delta_a, TAU * 3.0);
    }

    #[test]
    fn eta_out_from_budget() {
        // 2.8/13.6; the reciprocal is the "perfect cavity" enhancement ≈ 4.9.
        let eta = eta_out_from_mirror_budget();
        assert_relative_eq!(eta, 0.205882352941, max_relative = 1e-9);
        assert_relative_eq!(1.0 / eta, 4.857, max_relative = 1e-3);
    }

    #[test]
    fn complex_detunings_with_and_without_motion() {
        let p = preset(PresetName::ConfigA).params;
        let (wc, wa) = p.complex_detunings(false);
        assert_relative_eq!(wc.im, TAU * 1.3);
        assert_relative_eq!(wa.re, TAU * 8.0);
        assert_relative_eq!(wa.im, TAU * 3.0);
        let (_, wa_m) = p.complex_detunings(true);
        assert_relative_eq!(wa_m.im, TAU * 4.0);
    }

    #[test]
    fn config_file_round_trip() {
        let m = parse_config_str("# comment\n g_mhz = 11.5 \n\n eta_d = 0.5\n").unwrap();
        assert_eq!(m.len(), 2);
        let mut pre = preset(PresetName::ConfigA);
        apply_overrides(&mut pre, &m).unwrap();
        assert_relative_eq!(pre.params.g, TAU * 11.5);
        assert_relative_eq!(pre.eta_d, 0.5);
    }

    #[test]
    fn config_rejects_unknown_key_and_bad_number() {
        assert!(parse_config_str("bogus = 1\n").is_err());
        let err = parse_config_str("g_mhz = twelve\n").unwrap_err();
        assert!(err.to_string().contains("g_mhz"));
    }

    #[test]
    fn unknown_preset_name_errors() {
        assert!("configC".parse::<PresetName>().is_err());
    }
}

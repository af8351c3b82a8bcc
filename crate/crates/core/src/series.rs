//! Shared series containers and their CSV serialization.
//!
//! CSV files carry '#'-prefixed metadata header lines followed by a column
//! header and rows formatted at 12 significant digits, so byte-identical
//! output for identical inputs is guaranteed.

use std::f64::consts::TAU;
use std::io::Write;

use crate::error::Result;
use crate::units::linear_to_mdb;

/// Real quadrature autocorrelation ⟨:ΔX_θ(τ)ΔX_θ(0):⟩ on a τ grid (µs).
/// Shot-noise-¼ convention; estimated series carry per-lag standard errors.
#[derive(Debug, Clone)]
pub struct AutocorrelationSeries {
    pub theta: f64,
    pub tau_us: Vec<f64>,
    pub values: Vec<f64>,
    pub std_err: Option<Vec<f64>>,
}

/// Squeezing spectrum S_θ(Ω), linear, shot noise = 1, on an angular grid.
#[derive(Debug, Clone)]
pub struct SpectrumSeries {
    pub theta: f64,
    /// Efficiency folded into the values.
    pub eta: f64,
    pub omega_rad_us: Vec<f64>,
    pub values: Vec<f64>,
    pub std_err: Option<Vec<f64>>,
}

impl SpectrumSeries {
    pub fn freq_mhz(&self) -> Vec<f64> {
        self.omega_rad_us.iter().map(|w| w / TAU).collect()
    }

    pub fn values_mdb(&self) -> Vec<f64> {
        self.values.iter().map(|&s| linear_to_mdb(s)).collect()
    }

    /// Bin of minimum S: (frequency in MHz, depth in mdB).
    pub fn min_bin(&self) -> (f64, f64) {
        let (idx, min) = self
            .values
            .iter()
            .enumerate()
            .fold((0usize, f64::INFINITY), |acc, (i, &v)| {
                if v < acc.1 {
                    (i, v)
                } else {
                    acc
                }
            });
        (self.omega_rad_us[idx] / TAU, linear_to_mdb(min))
    }
}

/// Fixed float formatting at 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        // Avoid "-0" leaking into golden files.
        return "0.00000000000e0".to_string();
    }
    format!("{x:.11e}")
}

/// Write a CSV table: metadata lines, a header row, and data columns.
pub fn write_csv<W: Write>(
    w: &mut W,
    metadata: &[(&str, String)],
    columns: &[(&str, &[f64])],
) -> Result<()> {
    for (k, v) in metadata {
        writeln!(w, "# {k} = {v}")?;
    }
    let names: Vec<&str> = columns.iter().map(|(n, _)| *n).collect();
    writeln!(w, "{}", names.join(","))?;
    let rows = columns.first().map(|(_, c)| c.len()).unwrap_or(0);
    for (name, col) in columns {
        debug_assert_eq!(col.len(), rows, "column {name} length mismatch");
    }
    for i in 0..rows {
        let row: Vec<String> = columns.iter().map(|(_, c)| format_sig12(c[i])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

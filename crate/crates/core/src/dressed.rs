//! Dressed-state spectral algebra of the coupled atom-cavity system.
//!
//! The states |n±⟩ sharing n excitations have complex detunings
//!
//! ```text
//! ω̃ₙ± = (n−1)ω̃꜀ + (ω̃꜀ + ω̃ₐ)/2 ∓ ½√(4ng² + (ω̃꜀ − ω̃ₐ)²)
//! ```
//!
//! with the principal branch of the square root. The real part is the probe
//! detuning from the dressed state, the imaginary part its half-linewidth.
//! Two product identities pin the branch-independent content:
//!
//! ```text
//! ω̃₁₊ ω̃₁₋ = ω̃꜀ ω̃ₐ − g²
//! ω̃₂₊ ω̃₂₋ = 2 (ω̃꜀ (ω̃꜀ + ω̃ₐ) − g²)
//! ```

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{ComplexFrequency, SystemParams};

/// Complex detunings ω̃ₙ± of the n-excitation dressed doublet.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DressedManifold {
    pub n: u32,
    pub omega_plus: ComplexFrequency,
    pub omega_minus: ComplexFrequency,
}

impl DressedManifold {
    pub fn omega_plus_c(&self) -> Complex64 {
        self.omega_plus.as_complex()
    }

    pub fn omega_minus_c(&self) -> Complex64 {
        self.omega_minus.as_complex()
    }

    /// ω̃ₙ₊·ω̃ₙ₋, the branch-independent product.
    pub fn product(&self) -> Complex64 {
        self.omega_plus_c() * self.omega_minus_c()
    }
}

/// Dressed detunings for the n-excitation manifold, n ≥ 1.
///
/// `include_motion` selects whether γ_motion is folded into ω̃ₐ.
pub fn dressed_detunings(p: &SystemParams, n: u32, include_motion: bool) -> Result<DressedManifold> {
    if n < 1 {
        return Err(Error::Domain("dressed manifold index n must be ≥ 1".into()));
    }
    p.checked()?;
    let (wc, wa) = p.complex_detunings(include_motion);
    let mid = (n - 1) as f64 * wc + 0.5 * (wc + wa);
    let root = (4.0 * n as f64 * p.g * p.g + (wc - wa) * (wc - wa)).sqrt();
    Ok(DressedManifold {
        n,
        omega_plus: (mid - 0.5 * root).into(),
        omega_minus: (mid + 0.5 * root).into(),
    })
}

//! Brute-force Lindblad master-equation oracle on a truncated atom ⊗ Fock
//! space: steady states, quantum-regression two-time correlations, and
//! squeezing spectra free of any weak-drive approximation.
//!
//! This module is the numerical ground truth against which the closed forms
//! in [`crate::analytic`] are checked. Everything is dense: at the sizes that
//! matter here (Fock truncation N ≲ 14, Hilbert dimension ≤ 30) dense linear
//! algebra is simpler and more than fast enough.

mod dynamics;
mod operators;
mod superop;

pub use dynamics::{
    convergence_scan, full_quadrature_autocorrelation, numeric_spectrum, two_time_correlation,
    ConvergenceReport, ConvergenceRow, CorrelationResult, OracleCurves, Propagator,
};
pub use operators::{build_operators, HilbertSpace, OperatorSet};
pub use superop::{
    build_liouvillian, expectation, expectation_values, kernel_dimension, steady_state,
    Liouvillian, MomentSet, MotionMode,
};

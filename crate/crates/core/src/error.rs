//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameters violate a physical invariant (κ ≤ 0, negative rates, ...).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An argument is outside the domain of an operation (n < 1, τ < 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// ω̃ₐω̃꜀ − g² vanished; impossible for κ, γ > 0 but guarded anyway.
    #[error("singular denominator: {0}")]
    Singularity(String),

    /// Degenerate one-excitation manifold ω̃₁₊ = ω̃₁₋. The double-pole form of
    /// f(τ) is measure-zero in parameter space and deliberately not provided.
    #[error("confluent dressed manifold: ω̃₁₊ = ω̃₁₋ = {0}")]
    ConfluentManifold(String),

    /// Hilbert-space truncation refused or too small.
    #[error("hilbert space: {0}")]
    HilbertSpace(String),

    /// Linear solve / propagation failure in the master-equation oracle.
    #[error("numerical failure: {0}")]
    Numerics(String),

    /// Pipeline estimator preconditions (empty selections, grid mismatches, ...).
    #[error("estimator error: {0}")]
    Estimator(String),

    /// Configuration file / CLI configuration problems.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

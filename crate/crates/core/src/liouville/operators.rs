//! Truncated Hilbert space and the dense operator set on atom ⊗ Fock.
//!
//! Basis ordering: the atom index is slow, |s, n⟩ ↦ s·(N+1) + n with
//! s ∈ {0 = g, 1 = e} and n ∈ 0..=N, so dim = 2(N+1).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type CMat = DMatrix<Complex64>;

/// Atom ⊗ Fock space with photon-number truncation N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    n_max: usize,
}

impl HilbertSpace {
    /// Two-photon physics needs at least |2⟩, so N ≥ 2.
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::HilbertSpace(format!(
                "Fock truncation N must be ≥ 2, got {n_max}"
            )));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    /// Basis index of |s, n⟩.
    pub fn index(&self, atom_excited: bool, n: usize) -> usize {
        (atom_excited as usize) * (self.n_max + 1) + n
    }
}

/// Dense matrices for every labeled operator the oracle needs.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub space: HilbertSpace,
    pub a: CMat,
    pub a_dag: CMat,
    pub sigma: CMat,
    pub sigma_dag: CMat,
    pub sigma_z: CMat,
    pub identity: CMat,
    /// a†a, cached for Hamiltonian and dissipator assembly.
    pub number: CMat,
    /// σ†σ = |e⟩⟨e|.
    pub excited: CMat,
}

impl OperatorSet {
    /// Quadrature X_θ = (e^{−iθ}a + e^{iθ}a†)/2.
    pub fn x_theta(&self, theta: f64) -> CMat {
        let em = (-Complex64::I * theta).exp();
        let ep = (Complex64::I * theta).exp();
        (&self.a * em + &self.a_dag * ep).scale(0.5)
    }
}

/// Build the labeled operator set on the given space.
pub fn build_operators(space: HilbertSpace) -> OperatorSet {
    let nf = space.n_max() + 1;
    let dim = space.dim();
    let mut a = CMat::zeros(dim, dim);
    for s in [false, true] {
        for n in 1..nf {
            a[(space.index(s, n - 1), space.index(s, n))] = Complex64::from((n as f64).sqrt());
        }
    }
    let mut sigma = CMat::zeros(dim, dim);
    for n in 0..nf {
        sigma[(space.index(false, n), space.index(true, n))] = Complex64::ONE;
    }
    let mut sigma_z = CMat::zeros(dim, dim);
    for n in 0..nf {
        sigma_z[(space.index(false, n), space.index(false, n))] = -Complex64::ONE;
        sigma_z[(space.index(true, n), space.index(true, n))] = Complex64::ONE;
    }
    let a_dag = a.adjoint();
    let sigma_dag = sigma.adjoint();
    let number = &a_dag * &a;
    let excited = &sigma_dag * &sigma;
    OperatorSet {
        space,
        a,
        a_dag,
        sigma,
        sigma_dag,
        sigma_z,
        identity: CMat::identity(dim, dim),
        number,
        excited,
    }
}

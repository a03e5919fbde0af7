//! Exceptional-point physics of a single lossy waveguide beamsplitter,
//! restricted to the N-photon subspace.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`]: basis, angular-momentum matrices and the non-Hermitian
//!   Hamiltonian `(ω0 − iΓ/2)N + 2κ Jx − iΓ Jz`.
//! * [`spectral`]: analytic and numeric spectra, eigenvalue flow and the
//!   nilpotency certificate at `Γ = 2κ`.
//! * [`propagator`]: the factored (Wei–Norman) evolution operator, its
//!   exceptional-point limit, and two independent oracles (scaling-and-squaring
//!   exponential, adaptive integration of the coefficient ODEs).
//! * [`observables`]: post-selection intensity, normalized occupations, input
//!   states, order extraction and period detection.
//! * [`cli`]: configuration, scenario runner and file exporters behind the
//!   `epbs` binary.
//!
//! Grid sweeps go through [`exec`], which uses rayon when the `parallel`
//! feature is enabled and runs sequentially otherwise.

pub mod cli;
pub mod error;
pub mod exec;
pub mod fock;
pub mod observables;
pub mod propagator;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::Execution;
pub use fock::{BeamsplitterParams, HamiltonianMatrix, OperatorSet};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix used throughout.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex vector used throughout.
pub type CVector = nalgebra::DVector<C64>;

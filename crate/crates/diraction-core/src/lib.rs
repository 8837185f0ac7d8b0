//! Spectral search for critical points of Dirac-type action functionals.
//!
//! The target space is a flat torus `W = V/Λ` where `V = ℝⁿ` carries `r`
//! anti-commuting orthogonal complex structures `J₁,…,J_r` (a Clifford
//! module). Maps `f: M → W` from a time manifold `M` (either `Tʳ` or, for
//! hyperkähler `V`, `SU(2)`) are acted on by the first-order operator
//!
//! ```text
//! ∂̸f = Σ_l J_l L_{v_l} f
//! ```
//!
//! which is the L²-gradient of a quadratic action. Adding a Hamiltonian
//! term turns critical points into solutions of `∂̸f = ∇H(f)`. This crate
//! block-diagonalizes `∂̸` exactly in the Fourier (resp. Peter–Weyl) basis,
//! performs the contraction-mapping reduction onto finitely many low modes,
//! and runs a multistart Newton search on the reduced generating function.
//! Located points are classified, deduplicated modulo the lattice, and
//! compared against cup-length and Betti-number lower bounds.
//!
//! IO, configuration files, and the command-line driver live in the
//! companion `diraction-cli` crate; this crate is `no_std`-compatible
//! (with `alloc`) when built without the default `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod clifford;
pub mod error;
pub mod hamiltonian;
pub mod lattice;
pub mod reduction;
pub mod solver;
pub mod su2;
pub mod torus;

pub use clifford::{radon_hurwitz_bound, CliffordModule};
pub use error::CoreError;
pub use hamiltonian::{TimeDomain, TimePoint, TrigHamiltonian, TrigTerm};
pub use lattice::Lattice;
pub use reduction::{ReducedPoint, ReducedProblem, ReductionOptions};
pub use solver::{CountReport, CriticalPointRecord, SearchOutcome, SearchParams};
pub use su2::{Su2Field, Su2Point};
pub use torus::TorusField;

/// Crate result alias.
pub type Result<T> = core::result::Result<T, CoreError>;

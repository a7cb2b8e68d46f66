//! Trapped-ion dynamics in the high-intensity regime.
//!
//! The ion Hamiltonian `ν n̂ + (δ/2) σz + Ω [σ⁺ D(iη) + σ⁻ D†(iη)]` is split
//! as `Ω (h0 + λ hp)` with `λ = ν/Ω`, and the state is expanded with the
//! normalized matrix perturbation method (NMPM): the order-k correction kets
//! are read off the exponential of a block upper-bidiagonal matrix and the
//! truncated sum is renormalized.
//!
//! Modules, bottom-up:
//! - [`fock`]: truncated Fock ⊗ spin space, ladder/displacement operators, coherent kets.
//! - [`expm`]: spectral and Padé matrix exponentials.
//! - [`ion`]: the ion Hamiltonian, its high-intensity split and an exact propagator.
//! - [`nmpm`]: the generic engine (block matrix and nested quadrature) and normalization.
//! - [`closed_form`]: hand-integrated first- and second-order solutions and Pe(τ).
//! - [`rabi`]: the unitary map onto the quantum Rabi model.
//! - [`report`]: deviation records for closed forms that disagree with the engine.

pub mod closed_form;
pub mod error;
pub mod expm;
pub mod fock;
pub mod ion;
pub mod linalg;
pub mod nmpm;
pub mod rabi;
pub mod report;

pub use error::{Error, Result};
pub use fock::{DenseOperator, FockKet, FockSpinState, Spin, TruncationConfig};
pub use ion::{InitialStateSpec, IonParams, TimeGrid};
pub use linalg::{CMatrix, CVector, C64};
pub use nmpm::{PerturbativeKets, QuadratureConfig, QuadratureScheme};

//! Truncated-Fock-space simulator for parametrically pumped Kerr magnon modes
//! under Lindblad dissipation.
//!
//! The crate provides:
//!
//! - [`hilbert`]: dense operators and states on one or two truncated bosonic
//!   modes (coherent states, cat states, fidelity, partial trace);
//! - [`dynamics`]: Hamiltonian builders, the Lindblad generator and a
//!   fixed-step RK4 integrator for density matrices;
//! - [`quadrature`]: momentum-space representations and Wigner functions;
//! - [`modular`]: modular-variable projection of continuous-variable states
//!   onto effective spin states;
//! - [`bell`]: CHSH entanglement qualifier on effective spin states;
//! - [`analysis`]: trajectory-level metrics (fidelity series, cat fits,
//!   qualifier series);
//! - [`sweep`]: parameter sweeps with threshold location;
//! - [`cli`]: config-driven batch front end used by the `magnon-cat` binary.
//!
//! All physical parameters are dimensionless, expressed in units of the
//! effective detuning (Δ = 1); times are in units of 1/Δ.

pub mod analysis;
pub mod bell;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod modular;
pub(crate) mod numerics;
pub mod quadrature;
pub mod sweep;

pub use error::{Error, Result};

/// Shorthand for the complex scalar used throughout.
pub type C64 = num_complex::Complex64;

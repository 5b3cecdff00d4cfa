//! Diffraction of a cold gas by a continuous optical grating.
//!
//! The crate propagates momentum-ladder states under the lattice Hamiltonian,
//! provides the two-state and finite-temperature closed forms for the
//! zeroth-order population, and fits lattice depth and gas temperature to
//! measured population series.
//!
//! Units are rescaled throughout: momenta in `ħK`, time `τ = tħK²/M`, depth
//! `V_eff = VM/(ħK)²`. See [`units`] for the conversion.

pub mod error;
pub mod exec;
pub mod fit;
pub mod propagator;
pub mod thermal;
pub mod twostate;
pub mod units;

pub use error::{Error, Result, SeriesFailure};
pub use exec::Execution;

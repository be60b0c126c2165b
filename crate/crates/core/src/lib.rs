//! Simulation and analysis of interferometric phase estimation by adiabatic
//! sweeps through quantum phase transitions.
//!
//! Two models are supported: the Bose-Josephson (two-mode) Hamiltonian in the
//! Dicke basis ([`collective_spin`]) and the transverse-field Ising chain with
//! power-law couplings ([`ising`]). Both are driven by piecewise-linear
//! [`schedule`]s through the time-dependent [`propagator`]; [`protocol`] runs
//! split-imprint-recombine cycles and [`analysis`] turns them into fringes,
//! uncertainties and scaling exponents.

pub mod analysis;
pub mod collective_spin;
pub mod error;
pub mod ising;
pub mod manifest;
pub mod propagator;
pub mod protocol;
pub mod runner;
pub mod schedule;
pub mod vector;

pub use error::{Error, Result};

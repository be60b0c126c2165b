//! Prepare, split, imprint, recombine and read out.
//!
//! Both interferometers evolve the prepared state through the splitting
//! sweep once and cache the result; every phase value then only pays for
//! the imprint and the recombination. Recombination sweeps that stop at
//! different endpoints share their prefix, so the engines also expose
//! readouts at several endpoints from a single trajectory.

mod bj;
mod ising;

use num_complex::Complex64;

pub use bj::{
    bj_roundtrip_fidelity, bj_splitting_adiabaticity, bj_splitting_state, run_bj, AdiabaticityCheck,
    BjInterferometer, BjProtocolConfig,
};
pub use ising::{
    ghz_fidelity, ising_roundtrip_fidelity, ising_splitting_state, run_ising, IsingInterferometer,
    IsingProtocolConfig,
};

/// Integrity numbers attached to every outcome.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Diagnostics {
    /// Largest `|‖ψ‖² change|` over the sweeps of this run.
    pub norm_drift: f64,
    /// Largest change of the conserved parity over any single sweep.
    pub parity_drift: f64,
    /// `|⟨ψ_initial|ψ_recombined⟩|²`, when requested.
    pub roundtrip_fidelity: Option<f64>,
}

/// Moments of the readout observable (`Ĵz` after the pulse, or `M̂z`).
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub final_state: Option<Vec<Complex64>>,
    pub diagnostics: Diagnostics,
}

impl ProtocolOutcome {
    /// Outcome carrying only moments, e.g. from an analytic model.
    pub fn from_moments(mean: f64, second_moment: f64) -> Self {
        Self {
            mean,
            second_moment,
            variance: second_moment - mean * mean,
            final_state: None,
            diagnostics: Diagnostics::default(),
        }
    }
}

/// A phase-to-outcome map with a particle number, the interface the
/// analysis layer consumes.
pub trait Interferometer: Send + Sync {
    fn n_particles(&self) -> usize;

    fn run(&self, phi: f64) -> crate::Result<ProtocolOutcome>;
}

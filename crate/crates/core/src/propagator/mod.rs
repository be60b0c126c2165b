//! Ground states and norm-conserving time evolution (ħ = 1), shared by the
//! Bose-Josephson and Ising models.

mod eigen;
mod generator;
mod integrator;

pub use eigen::{
    dense_matrix, ground_state, lanczos_ground_state, EigenMethod, GroundState, LanczosOptions,
    DENSE_LIMIT,
};
pub use generator::{apply_real_band, check_hermitian, Frozen, Generator, HermitianOperator, SweptGenerator};
pub use integrator::{evolve, evolve_in_place, fidelity, EvolutionReport, EvolutionSettings};

//! State simulation: statevectors, dense and Pauli-basis density matrices,
//! exact diagonalization and circuit runners.

mod density;
mod eigen;
mod gates;
mod kernels;
mod pauli_density;
mod rdm;
mod runner;
mod state;

pub use density::{DensityMatrix, MAX_DENSITY_SITES};
pub use eigen::{
    circuit_unitary, dense_matrix, diagonal_ensemble, evolve_exact, phases, EigenObservable, EigenSystem, SpectralState,
    DEGENERACY_TOL, MAX_EIGEN_SITES,
};
pub use pauli_density::{PauliDensity, MAX_PAULI_DENSITY_SITES};
pub use rdm::{mean_trace_distance, OneRdm};
pub use runner::{apply_circuit_trajectory, evolve_pauli_density, run_trajectory};
pub use state::{StateVector, MAX_STATE_SITES};

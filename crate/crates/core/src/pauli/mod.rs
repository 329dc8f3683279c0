//! Pauli-string algebra and the spin-model operators built from it.

mod model;
mod operator;
mod string;

pub use model::{
    build_hamiltonian, error_shift_operator, floquet_hamiltonian, ising_split,
    group_sum, local_energy_density, trotter_groups, Boundary, TrotterGroup, FloquetHamiltonian, Lattice, ModelKind,
    ModelParams, DEFAULT_G, DEFAULT_H, EAST_DISORDER,
};
pub use operator::{Operator, TermRecord, ZERO_TOL};
pub use string::{pauli_anticommutes, Pauli, PauliString, MAX_SITES};

//! Model Hamiltonians, random Clifford circuits and Clifford+T states.

pub mod clifford;
pub mod hamiltonian;

pub use clifford::{
    clifford_t_state, random_clifford, transition_constants, Circuit, CliffordTSpec, Gate,
    SymplecticMatrix,
};
pub use hamiltonian::{
    build_hamiltonian, lanczos_ground_state, total_magnetization, GroundState, Hamiltonian,
    HamiltonianSpec, LocalTerm, Model,
};

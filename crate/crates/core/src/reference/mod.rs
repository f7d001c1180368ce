//! Exact dense evolution used as ground truth for the stochastic scheme.

mod bloch;
mod density;
mod evolve;
mod generator;

pub use bloch::BlochTensor;
pub use density::{
    bloch_from_density, bloch_from_operator, density_from_bloch, operator_from_bloch, DensityMatrix,
};
pub use evolve::{
    evolve_bloch, evolve_bloch_series, evolve_von_neumann, evolve_von_neumann_series, segments, Segment,
};
pub use generator::{build_hamiltonian, generator_from_hamiltonian, quantum_generator, QuantumGenerator};

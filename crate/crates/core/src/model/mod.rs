//! Lattices, the XXZ Hamiltonian, magnetization sectors and exact spectra.

mod hamiltonian;
mod lattice;
mod spectrum;

pub use hamiltonian::{build_hamiltonian, magnetization, sz_sectors, z_eigenvalue, Sector, XxzParams, MAX_SITES};
pub use lattice::{Lattice, LatticeKind};
pub use spectrum::{full_spectrum, ground_state, EigenBlock, GroundState, Spectrum, SpectrumOptions, DEFAULT_DIM_CAP};

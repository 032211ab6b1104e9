//! Simulation core for a topological zero-mode router on an SSH-type lattice
//! with long-range hopping: lattice model, spectra, adiabatic routing and
//! driven-dissipative read-out.

pub mod cli;
pub mod detection;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{
    build_hamiltonian, chiral_defect, chiral_operator, sample_disorder, DisorderKind, DisorderRealization, Hamiltonian,
    LatticeSpec, SiteIndex, StateVector, Variant,
};

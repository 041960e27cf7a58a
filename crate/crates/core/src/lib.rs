//! Exact-diagonalization toolkit for the spin formulation of the lattice
//! Schwinger model with random background charges.

pub mod basis;
pub mod dpt;
pub mod entanglement;
pub mod dynamics;
pub mod error;
pub mod fragmentation;
pub mod jumps;
pub mod model;
pub mod numeric;
pub mod rmt;
pub mod spectral;

pub use basis::{enumerate_basis, sample_charge_sectors, ChargeSector, HalfFillingBasis, SpinConfig};
pub use error::{Error, Result};
pub use dpt::{build_effective, dpt_compare, DptConvention, DptTrace, EffectiveHamiltonian};
pub use dynamics::{aggregate_sectors, quench, EntropyAggregate, EntropySeries, TimeGrid};
pub use entanglement::{entropy_decomposition, CutMap, Entropies};
pub use fragmentation::{decompose_all, decompose_tower, is_resonant, p_cross_estimate, KrylovDecomposition, Tower};
pub use jumps::{detect_jumps, fit_entropy_powerlaw, fit_jump_histogram, JumpEvent, JumpOptions, PowerLawFit};
pub use model::{build_hamiltonian, build_scaled_hamiltonian, build_xxz, ModelParams, SectorHamiltonian, XxzParams};
pub use spectral::{diagonalize, eigenvalues, SpectralDecomposition};

pub use faer;
pub use num_complex::Complex64;

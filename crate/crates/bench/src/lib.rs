//! Fixtures shared by the benchmarks.

use schwinger_core::{
    build_hamiltonian, enumerate_basis, sample_charge_sectors, HalfFillingBasis, ModelParams, SectorHamiltonian,
};

/// Basis and Hamiltonian of the first sampled sector for `(n, j)`.
pub fn fixture(n: usize, j: f64, seed: u64) -> (HalfFillingBasis, SectorHamiltonian) {
    let basis = enumerate_basis(n).expect("even N in range");
    let sector = &sample_charge_sectors(n, 1, seed)[0];
    let h = build_hamiltonian(&ModelParams::new(n, j), sector, &basis).expect("valid sector");
    (basis, h)
}

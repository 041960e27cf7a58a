//! Entanglement of eigenstates around the DOS peak.

use super::{dos_peak, nearest_window, SpectralDecomposition};
use crate::basis::HalfFillingBasis;
use crate::entanglement::CutMap;
use crate::error::{Error, Result};
use crate::numeric::{mean, std_dev};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenstateEntropyStats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

/// `S_E` of every eigenstate in index range `lo..hi`.
pub fn eigenstate_entropies(
    spec: &SpectralDecomposition,
    basis: &HalfFillingBasis,
    cut: usize,
    range: std::ops::Range<usize>,
) -> Result<Vec<f64>> {
    let map = CutMap::new(basis, cut)?;
    Ok(range.map(|i| map.entropies_real(spec.vector(i)).s_e).collect())
}

/// Mean and standard deviation of `S_E` over the fraction of eigenstates
/// nearest the DOS peak.
pub fn eigenstate_entropy_stats(
    spec: &SpectralDecomposition,
    basis: &HalfFillingBasis,
    cut: usize,
    fraction: f64,
) -> Result<EigenstateEntropyStats> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("fraction must lie in (0, 1], got {fraction}")));
    }
    let k = ((fraction * spec.dim() as f64).round() as usize).max(1);
    let (lo, hi) = nearest_window(&spec.energies, dos_peak(&spec.energies), k);
    let s = eigenstate_entropies(spec, basis, cut, lo..hi)?;
    Ok(EigenstateEntropyStats {
        mean: mean(&s),
        std: std_dev(&s),
        count: s.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_basis, sample_charge_sectors, ChargeSector};
    use crate::model::{build_hamiltonian, ModelParams};
    use crate::spectral::diagonalize;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    #[test]
    fn two_site_eigenstates_carry_ln2() {
        let b = enumerate_basis(2).unwrap();
        let h = build_hamiltonian(&ModelParams::new(2, 0.0), &ChargeSector::neutral(2), &b).unwrap();
        let s = diagonalize(&h).unwrap();
        let st = eigenstate_entropy_stats(&s, &b, 1, 1.0).unwrap();
        assert!((st.mean - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(st.std < 1e-12);
    }

    #[test]
    fn isolated_levels_at_huge_coupling_are_products() {
        let n = 6;
        let b = enumerate_basis(n).unwrap();
        let p = ModelParams::new(n, 1e6).with_theta(0.5).with_mass(0.731e6);
        let sec = &sample_charge_sectors(n, 1, 8)[0];
        let h = build_hamiltonian(&p, sec, &b).unwrap();
        let s = diagonalize(&h).unwrap();
        let e = eigenstate_entropies(&s, &b, 3, 0..s.dim()).unwrap();
        let mut checked = 0;
        for i in 0..s.dim() {
            let left = if i > 0 { s.energies[i] - s.energies[i - 1] } else { f64::MAX };
            let right = if i + 1 < s.dim() { s.energies[i + 1] - s.energies[i] } else { f64::MAX };
            if left.min(right) > 1e3 {
                assert!(e[i] < 1e-6, "level {i}: {}", e[i]);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn haar_exceeds_strong_coupling_eigenstates() {
        let n = 12;
        let b = enumerate_basis(n).unwrap();
        let map = CutMap::new(&b, n / 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let psi: Vec<Complex64> = (0..b.dim())
            .map(|_| {
                let z: (f64, f64) = (
                    rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng),
                    rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng),
                );
                Complex64::new(z.0, z.1)
            })
            .collect();
        let haar = map.entropies(&psi).s_e;
        // Page value for a 64-dim half with the number constraint is ~3.4.
        assert!(haar > 3.0, "{haar}");
        let sec = &sample_charge_sectors(n, 1, rng.random())[0];
        let h = build_hamiltonian(&ModelParams::new(n, 5.0), sec, &b).unwrap();
        let s = diagonalize(&h).unwrap();
        let all = eigenstate_entropies(&s, &b, n / 2, 0..s.dim()).unwrap();
        let max = all.iter().cloned().fold(0.0, f64::max);
        assert!(haar > max, "haar {haar} vs max {max}");
    }
}

//! Many-body Thouless parameter under a local `sigma^z` perturbation.

use faer::Side;
use serde::{Deserialize, Serialize};

use super::{dos_peak, nearest_window, spectral_width, SpectralDecomposition};
use crate::basis::HalfFillingBasis;
use crate::error::{Error, Result};
use crate::model::SectorHamiltonian;
use crate::numeric::mean;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThoulessSector {
    /// Mean of `ln(|V_{n,n+1}| / (E'_{n+1} - E'_n))`; NaN if no pair counts.
    pub mean_g: f64,
    pub pairs: usize,
}

/// Thouless parameter of one sector with `V = strength * sigma^z_site`,
/// averaged over the `fraction` of states nearest the DOS peak.
pub fn thouless_parameter(
    h: &SectorHamiltonian,
    spec: &SpectralDecomposition,
    basis: &HalfFillingBasis,
    site: usize,
    strength: f64,
    fraction: f64,
) -> Result<ThoulessSector> {
    let n = basis.n();
    if !(1..=n).contains(&site) {
        return Err(Error::Config(format!("perturbation site must lie in 1..={n}, got {site}")));
    }
    let sz: Vec<f64> = basis.states().iter().map(|s| s.sigma(site) as f64).collect();

    let mut m = h.to_dense();
    for (i, z) in sz.iter().enumerate() {
        m[(i, i)] += strength * z;
    }
    let mut perturbed = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::Eigensolver { seed: h.seed })?;
    perturbed.sort_by(|a, b| a.total_cmp(b));

    let k = ((fraction * spec.dim() as f64).round() as usize).max(2);
    let (lo, hi) = nearest_window(&spec.energies, dos_peak(&spec.energies), k);
    let floor = 1e-14 * spectral_width(&perturbed);
    let mut g = Vec::new();
    for i in lo..hi.saturating_sub(1) {
        let gap = perturbed[i + 1] - perturbed[i];
        let (a, b) = (spec.vector(i), spec.vector(i + 1));
        let v: f64 = strength * a.iter().zip(b).zip(&sz).map(|((x, y), z)| x * y * z).sum::<f64>();
        if gap < floor || v == 0.0 {
            continue;
        }
        g.push((v.abs() / gap).ln());
    }
    Ok(ThoulessSector {
        mean_g: if g.is_empty() { f64::NAN } else { mean(&g) },
        pairs: g.len(),
    })
}

/// Mean of the finite per-sector values.
pub fn aggregate_thouless(sectors: &[ThoulessSector]) -> f64 {
    let v: Vec<f64> = sectors.iter().map(|s| s.mean_g).filter(|x| x.is_finite()).collect();
    mean(&v)
}

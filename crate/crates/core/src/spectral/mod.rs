//! Dense diagonalization and spectrum-level diagnostics.

pub mod dos;
pub mod eigenstates;
pub mod rstat;
pub mod sff;
pub mod thouless;

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::model::SectorHamiltonian;

pub use dos::{dominant_period, dos_histogram, dos_peak, skewness, Histogram};
pub use eigenstates::{eigenstate_entropies, eigenstate_entropy_stats, EigenstateEntropyStats};
pub use rstat::{aggregate_rstat, default_window, r_statistic, r_values, RStatResult, RStatSector};
pub use sff::{connected_sff, k_goe, log_tau_grid, unfold, SffResult};
pub use thouless::{aggregate_thouless, thouless_parameter, ThoulessSector};

/// Full eigendecomposition of one sector.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending eigenvalues.
    pub energies: Vec<f64>,
    /// Column `i` is the eigenvector of `energies[i]`.
    pub vectors: Mat<f64>,
    pub seed: u64,
}

/// Full spectrum with eigenvectors.
pub fn diagonalize(h: &SectorHamiltonian) -> Result<SpectralDecomposition> {
    let m = h.to_dense();
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::Eigensolver { seed: h.seed })?;
    let s = evd.S().column_vector();
    let energies: Vec<f64> = (0..h.dim()).map(|i| s[i]).collect();
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::Eigensolver { seed: h.seed });
    }
    Ok(SpectralDecomposition {
        energies,
        vectors: evd.U().to_owned(),
        seed: h.seed,
    })
}

/// Ascending eigenvalues only (cheaper than [`diagonalize`]).
pub fn eigenvalues(h: &SectorHamiltonian) -> Result<Vec<f64>> {
    let mut e = h
        .to_dense()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::Eigensolver { seed: h.seed })?;
    if e.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigensolver { seed: h.seed });
    }
    e.sort_by(|a, b| a.total_cmp(b));
    Ok(e)
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn width(&self) -> f64 {
        spectral_width(&self.energies)
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        self.vectors.col_as_slice(i)
    }

    /// `max |V^T V - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.vectors.transpose() * &self.vectors;
        let mut r: f64 = 0.0;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                let want = if i == j { 1.0 } else { 0.0 };
                r = r.max((g[(i, j)] - want).abs());
            }
        }
        r
    }

    /// `max |H V - V E|`.
    pub fn reconstruction_residual(&self, h: &SectorHamiltonian) -> f64 {
        let mut r: f64 = 0.0;
        let mut y = vec![0.0; self.dim()];
        for (j, &e) in self.energies.iter().enumerate() {
            let v = self.vector(j);
            for ((yi, vi), d) in y.iter_mut().zip(v).zip(&h.diag) {
                *yi = (d - e) * vi;
            }
            for hop in &h.hops {
                let (a, b) = (hop.a as usize, hop.b as usize);
                y[a] += hop.amplitude * v[b];
                y[b] += hop.amplitude * v[a];
            }
            r = y.iter().fold(r, |r, x| r.max(x.abs()));
        }
        r
    }
}

pub(crate) fn spectral_width(sorted: &[f64]) -> f64 {
    match (sorted.first(), sorted.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    }
}

/// Indices `lo..hi` of the `k` sorted levels nearest `center`.
pub(crate) fn nearest_window(sorted: &[f64], center: f64, k: usize) -> (usize, usize) {
    let n = sorted.len();
    let k = k.min(n);
    let mut lo = sorted.partition_point(|&e| e < center);
    let mut hi = lo;
    while hi - lo < k {
        let take_left = if lo == 0 {
            false
        } else if hi == n {
            true
        } else {
            center - sorted[lo - 1] <= sorted[hi] - center
        };
        if take_left {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    (lo, hi)
}

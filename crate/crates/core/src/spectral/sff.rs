//! Spectral unfolding and the connected spectral form factor.

use std::f64::consts::TAU;

use faer::prelude::*;
use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::mean;

/// Deviation threshold (in decades) separating "tracks GOE" from "does not".
pub const GOE_LOG_THRESHOLD: f64 = 0.08;
/// Half-width of the moving window applied before thresholding.
const SMOOTH_HALF: usize = 2;

/// Fraction of levels dropped at each end after unfolding; a low-degree fit
/// of the staircase cannot follow the thin spectral tails.
pub const UNFOLD_EDGE_FRACTION: f64 = 0.05;

/// Maps sorted levels onto unit mean spacing with a polynomial fit of the
/// integrated density of states (Chebyshev basis on the rescaled range).
/// The fit uses every level; the returned levels exclude the outer
/// [`UNFOLD_EDGE_FRACTION`] at each end.
pub fn unfold(sorted: &[f64], degree: usize) -> Result<Vec<f64>> {
    let n = sorted.len();
    if n < 50 {
        return Err(Error::InsufficientData(format!("unfolding needs at least 50 levels, got {n}")));
    }
    if degree == 0 || degree + 1 >= n {
        return Err(Error::DegenerateFit(format!("unusable polynomial degree {degree}")));
    }
    let (lo, hi) = (sorted[0], sorted[n - 1]);
    if !(hi > lo) {
        return Err(Error::DegenerateFit("spectrum has zero width".into()));
    }
    let x: Vec<f64> = sorted.iter().map(|e| 2.0 * (e - lo) / (hi - lo) - 1.0).collect();
    let cheb = |x: f64, out: &mut [f64]| {
        out[0] = 1.0;
        if out.len() > 1 {
            out[1] = x;
        }
        for k in 2..out.len() {
            out[k] = 2.0 * x * out[k - 1] - out[k - 2];
        }
    };
    let mut row = vec![0.0; degree + 1];
    let mut a = Mat::<f64>::zeros(n, degree + 1);
    for (i, &xi) in x.iter().enumerate() {
        cheb(xi, &mut row);
        for (k, &v) in row.iter().enumerate() {
            a[(i, k)] = v;
        }
    }
    let y = Mat::<f64>::from_fn(n, 1, |i, _| i as f64 + 0.5);
    let coef = a.col_piv_qr().solve_lstsq(&y);
    let eps: Vec<f64> = (0..n)
        .map(|i| (0..=degree).map(|k| a[(i, k)] * coef[(k, 0)]).sum())
        .collect();
    if eps.iter().any(|e| !e.is_finite()) {
        return Err(Error::DegenerateFit("non-finite unfolded levels".into()));
    }
    let edge = (UNFOLD_EDGE_FRACTION * n as f64) as usize;
    let eps = eps[edge..n - edge].to_vec();
    let m = eps.len();
    let spacing = (eps[m - 1] - eps[0]) / (m - 1) as f64;
    if (spacing - 1.0).abs() > 0.05 {
        return Err(Error::DegenerateFit(format!("unfolded mean spacing {spacing} is not 1 +- 0.05")));
    }
    Ok(eps)
}

/// GOE connected form factor in units of the Heisenberg time.
pub fn k_goe(tau: f64) -> f64 {
    if tau <= 0.0 {
        0.0
    } else if tau < 1.0 {
        tau * (2.0 - (1.0 + 2.0 * tau).ln())
    } else {
        2.0 - tau * ((2.0 * tau + 1.0) / (2.0 * tau - 1.0)).ln()
    }
}

/// Log-spaced grid from `lo` to `hi` inclusive.
pub fn log_tau_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    (0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n.max(1) as f64))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SffResult {
    pub tau_grid: Vec<f64>,
    pub k_c: Vec<f64>,
    /// `k_c` after a five-point geometric moving average.
    pub k_c_smoothed: Vec<f64>,
    /// Last grid time whose smoothed value deviates from GOE by at least
    /// 0.08 decades; the first grid time if none does.
    pub tau_goe: f64,
    /// Late-time normalization `Z`.
    pub z: f64,
    /// Weight `A` of the disconnected part.
    pub a: f64,
    pub sectors: usize,
}

fn sector_sums(levels: &[f64], taus: &[f64]) -> Vec<(f64, f64)> {
    taus.iter()
        .map(|&t| {
            let (mut re, mut im) = (0.0, 0.0);
            for &e in levels {
                let (s, c) = (-TAU * e * t).sin_cos();
                re += c;
                im += s;
            }
            (re, im)
        })
        .collect()
}

/// `(<|Z|^2>, |<Z>|^2)` over sectors at each time.
fn raw_moments(ensembles: &[Vec<f64>], taus: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let sums: Vec<Vec<(f64, f64)>> = ensembles.par_iter().map(|e| sector_sums(e, taus)).collect();
    let mut k = Vec::with_capacity(taus.len());
    let mut d = Vec::with_capacity(taus.len());
    for i in 0..taus.len() {
        let sq: Vec<f64> = sums.iter().map(|z| z[i].0 * z[i].0 + z[i].1 * z[i].1).collect();
        let re: Vec<f64> = sums.iter().map(|z| z[i].0).collect();
        let im: Vec<f64> = sums.iter().map(|z| z[i].1).collect();
        k.push(mean(&sq));
        let (mr, mi) = (mean(&re), mean(&im));
        d.push(mr * mr + mi * mi);
    }
    (k, d)
}

/// Connected form factor of unfolded spectra, one per sector.
///
/// `K_c = (K - A D) / Z` with `A` fixed by `K_c(0) = 0` and `Z` by the
/// mean of `K - A D` over the late window `tau in [10, 100]`.
pub fn connected_sff(ensembles: &[Vec<f64>], tau_grid: &[f64]) -> Result<SffResult> {
    let s = ensembles.len();
    if s < 2 {
        return Err(Error::DegenerateFit(
            "a single spectrum makes the connected and disconnected parts identical".into(),
        ));
    }
    if s < 100 {
        log::warn!("connected SFF from only {s} sectors; expect large fluctuations");
    }
    let dims: Vec<f64> = ensembles.iter().map(|e| e.len() as f64).collect();
    let sq: Vec<f64> = dims.iter().map(|d| d * d).collect();
    let k0 = mean(&sq);
    let d0 = mean(&dims).powi(2);
    let a = k0 / d0;

    let late = log_tau_grid(10.0, 100.0, 100);
    let (kl, dl) = raw_moments(ensembles, &late);
    let conn: Vec<f64> = kl.iter().zip(&dl).map(|(k, d)| k - a * d).collect();
    let z = mean(&conn);
    if !(z > 1e-9 * mean(&kl)) {
        return Err(Error::DegenerateFit(format!("late-time normalization {z} is not positive")));
    }

    let (k, d) = raw_moments(ensembles, tau_grid);
    let k_c: Vec<f64> = k.iter().zip(&d).map(|(k, d)| (k - a * d) / z).collect();
    let k_c_smoothed = geometric_smooth(&k_c, SMOOTH_HALF);
    let tau_goe = tau_grid
        .iter()
        .zip(&k_c_smoothed)
        .filter(|(t, k)| (k.max(1e-300) / k_goe(**t)).log10().abs() >= GOE_LOG_THRESHOLD)
        .map(|(t, _)| *t)
        .last()
        .unwrap_or(tau_grid[0]);
    Ok(SffResult {
        tau_grid: tau_grid.to_vec(),
        k_c,
        k_c_smoothed,
        tau_goe,
        z,
        a,
        sectors: s,
    })
}

/// Moving geometric mean over `2 half + 1` points (clipped at the ends);
/// non-positive values are floored at 1e-12.
pub fn geometric_smooth(xs: &[f64], half: usize) -> Vec<f64> {
    let logs: Vec<f64> = xs.iter().map(|x| x.max(1e-12).ln()).collect();
    (0..xs.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(xs.len());
            mean(&logs[lo..hi]).exp()
        })
        .collect()
}

/// Local slope `d ln K_c / d ln tau` of the smoothed form factor around
/// `tau`, from the grid points two steps either side of the nearest one.
pub fn log_slope_at(r: &SffResult, tau: f64) -> f64 {
    let i = r
        .tau_grid
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.ln() - tau.ln()).abs().total_cmp(&(b.1.ln() - tau.ln()).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let lo = i.saturating_sub(2);
    let hi = (i + 2).min(r.tau_grid.len() - 1);
    (r.k_c_smoothed[hi].ln() - r.k_c_smoothed[lo].ln()) / (r.tau_grid[hi].ln() - r.tau_grid[lo].ln())
}

//! Ratio of consecutive level spacings.

use serde::{Deserialize, Serialize};

use super::{dos_peak, nearest_window, spectral_width};
use crate::numeric::mean;

/// Result for one sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RStatSector {
    pub mean_r: f64,
    /// Number of ratios that entered the mean.
    pub pairs: usize,
    pub window: usize,
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RStatResult {
    pub per_sector_mean_r: Vec<f64>,
    pub grand_mean: f64,
    /// Window size and per-sector window centers.
    pub window: (usize, Vec<f64>),
}

/// `min(1000, D / 3)`.
pub fn default_window(dim: usize) -> usize {
    (dim / 3).min(1000)
}

/// Ratios `min(s_n, s_n+1) / max(s_n, s_n+1)` of a sorted sequence. Pairs
/// whose larger gap is below `floor` are skipped.
pub fn r_values(sorted: &[f64], floor: f64) -> Vec<f64> {
    sorted
        .windows(3)
        .filter_map(|w| {
            let (a, b) = (w[1] - w[0], w[2] - w[1]);
            let hi = a.max(b);
            (hi >= floor && hi > 0.0).then(|| a.min(b) / hi)
        })
        .collect()
}

/// Mean ratio over the `k` levels nearest the DOS peak.
pub fn r_statistic(sorted: &[f64], k: usize) -> RStatSector {
    let center = dos_peak(sorted);
    let (lo, hi) = nearest_window(sorted, center, k);
    let floor = 1e-12 * spectral_width(sorted);
    let r = r_values(&sorted[lo..hi], floor);
    if r.is_empty() {
        log::warn!("no usable level-spacing pairs in a window of {k} levels");
    }
    RStatSector {
        mean_r: if r.is_empty() { f64::NAN } else { mean(&r) },
        pairs: r.len(),
        window: hi - lo,
        center,
    }
}

/// Grand mean over sectors with a defined mean.
pub fn aggregate_rstat(sectors: &[RStatSector]) -> RStatResult {
    let per: Vec<f64> = sectors.iter().map(|s| s.mean_r).collect();
    let finite: Vec<f64> = per.iter().cloned().filter(|x| x.is_finite()).collect();
    RStatResult {
        grand_mean: mean(&finite),
        window: (
            sectors.first().map_or(0, |s| s.window),
            sectors.iter().map(|s| s.center).collect(),
        ),
        per_sector_mean_r: per,
    }
}

//! Density of states: histograms, peak location and periodicity.

use crate::numeric::{mean, pairwise_sum};

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// Left edge of the first bin.
    pub lo: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|i| self.lo + (i as f64 + 0.5) * self.bin_width)
            .collect()
    }

    /// Bins of width `bin_width` covering `[lo, hi]`.
    pub fn build(values: &[f64], lo: f64, hi: f64, bin_width: f64) -> Histogram {
        let nb = (((hi - lo) / bin_width).ceil() as usize).max(1);
        let mut counts = vec![0u64; nb];
        for &v in values {
            if v < lo || v > hi {
                continue;
            }
            let i = (((v - lo) / bin_width) as usize).min(nb - 1);
            counts[i] += 1;
        }
        Histogram { lo, bin_width, counts }
    }
}

/// Histogram of `E / J` over the full spectrum with `bins` equal bins.
pub fn dos_histogram(energies: &[f64], j: f64, bins: usize) -> Histogram {
    let scaled: Vec<f64> = energies.iter().map(|e| e / j).collect();
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bw = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    Histogram::build(&scaled, lo, hi, bw)
}

/// Center of the fullest band of width `(max - min) / 100`.
pub fn dos_peak(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let width = sorted[n - 1] - sorted[0];
    if !(width > 0.0) {
        return sorted[0];
    }
    let band = width / 100.0;
    let (mut best, mut best_i) = (0usize, 0usize);
    let mut j = 0usize;
    for i in 0..n {
        if j < i {
            j = i;
        }
        while j + 1 < n && sorted[j + 1] <= sorted[i] + band {
            j += 1;
        }
        if j + 1 - i > best {
            best = j + 1 - i;
            best_i = i;
        }
    }
    sorted[best_i] + 0.5 * band
}

/// Sample skewness.
pub fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let d2: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
    let d3: Vec<f64> = xs.iter().map(|x| (x - m).powi(3)).collect();
    let n = xs.len() as f64;
    let var = pairwise_sum(&d2) / n;
    pairwise_sum(&d3) / n / var.powf(1.5)
}

/// Dominant nonzero period of the level density on `[lo, hi]`, from the
/// autocorrelation of a histogram with bins of `bin_width`. The central
/// lobe is skipped by starting after the first non-positive value.
pub fn dominant_period(values: &[f64], lo: f64, hi: f64, bin_width: f64) -> Option<f64> {
    let h = Histogram::build(values, lo, hi, bin_width);
    let c: Vec<f64> = h.counts.iter().map(|&x| x as f64).collect();
    let m = mean(&c);
    let c: Vec<f64> = c.iter().map(|x| x - m).collect();
    let n = c.len();
    let acf: Vec<f64> = (0..n / 2)
        .map(|l| pairwise_sum(&(0..n - l).map(|i| c[i] * c[i + l]).collect::<Vec<_>>()))
        .collect();
    let start = acf.iter().position(|&a| a <= 0.0)?;
    let (lag, &val) = acf
        .iter()
        .enumerate()
        .skip(start)
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))?;
    (val > 0.0).then_some(lag as f64 * bin_width)
}

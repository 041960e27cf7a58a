//! Small numerical kernels shared across modules: order-independent
//! summation, robust statistics, double-double phase reduction and
//! weighted straight-line fits.

use std::f64::consts::TAU;

/// Pairwise (cascade) summation. The result depends only on the order of
/// `xs`, never on how work was scheduled to produce it.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Population standard deviation (divides by `n`).
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    (pairwise_sum(&sq) / xs.len() as f64).sqrt()
}

/// Median of a sample; the mean of the two central values for even length.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// SplitMix64 finalizer, used to derive independent child seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for item `index` of a stream rooted at `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const TWO_PI: DoubleDouble = DoubleDouble {
        hi: 6.283_185_307_179_586,
        lo: 2.449_293_598_294_706_4e-16,
    };

    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    /// Exact difference of two doubles.
    pub fn diff(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, -b);
        let (hi, lo) = quick_two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    pub fn add(self, o: DoubleDouble) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = quick_two_sum(s, e);
        DoubleDouble { hi, lo }
    }

    pub fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Result of reducing a large phase into `(-pi, pi]`.
#[derive(Debug, Clone, Copy)]
pub struct ReducedPhase {
    pub radians: f64,
    /// Upper bound on the absolute error of `radians`.
    pub error_bound: f64,
}

/// Computes `(energy - reference) * t` modulo `2 pi` in double-double
/// arithmetic, treating the three inputs as exact binary numbers.
pub fn reduced_phase(energy: f64, reference: f64, t: f64) -> ReducedPhase {
    let phase = DoubleDouble::diff(energy, reference).mul_f64(t);
    let k = (phase.hi / DoubleDouble::TWO_PI.hi).round();
    let r = phase.add(DoubleDouble::TWO_PI.mul_f64(k).neg());
    // Rounding in the two multiplications and the truncated 2 pi constant
    // (good to ~2^-107 relative) dominate the residual error.
    let error_bound = phase.hi.abs() * 2f64.powi(-100) + f64::EPSILON * r.hi.abs();
    let mut radians = r.to_f64();
    if radians > std::f64::consts::PI {
        radians -= TAU;
    } else if radians <= -std::f64::consts::PI {
        radians += TAU;
    }
    ReducedPhase {
        radians,
        error_bound,
    }
}

/// Weighted least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    /// Weighted residual variance per degree of freedom.
    pub scale: f64,
}

/// Fits a straight line with weights `w_i ∝ 1/var(y_i)`. Standard errors are
/// scaled by the residual variance, so only relative weights matter.
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 3 || y.len() != n || w.len() != n {
        return None;
    }
    let sw = pairwise_sum(w);
    let wx: Vec<f64> = x.iter().zip(w).map(|(x, w)| x * w).collect();
    let wy: Vec<f64> = y.iter().zip(w).map(|(y, w)| y * w).collect();
    let xm = pairwise_sum(&wx) / sw;
    let ym = pairwise_sum(&wy) / sw;
    let sxx: Vec<f64> = x.iter().zip(w).map(|(x, w)| w * (x - xm) * (x - xm)).collect();
    let sxy: Vec<f64> = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((x, y), w)| w * (x - xm) * (y - ym))
        .collect();
    let sxx = pairwise_sum(&sxx);
    if !(sxx > 0.0) {
        return None;
    }
    let slope = pairwise_sum(&sxy) / sxx;
    let intercept = ym - slope * xm;
    let res: Vec<f64> = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((x, y), w)| {
            let r = y - intercept - slope * x;
            w * r * r
        })
        .collect();
    let scale = pairwise_sum(&res) / (n as f64 - 2.0);
    let slope_err = (scale / sxx).sqrt();
    let intercept_err = (scale * (1.0 / sw + xm * xm / sxx)).sqrt();
    Some(LineFit {
        intercept,
        slope,
        slope_err,
        intercept_err,
        scale,
    })
}

/// `-x ln x` with the convention `0 ln 0 = 0`; negative round-off is clamped.
#[inline]
pub fn xlnx_neg(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Binomial coefficient for small arguments.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

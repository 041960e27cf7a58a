//! Synthetic reference spectra.

use faer::{Mat, Side};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// Sorted eigenvalues of a `d x d` GOE matrix with off-diagonal variance 1.
pub fn goe_levels<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let mut m = Mat::<f64>::zeros(d, d);
    for j in 0..d {
        for i in j..d {
            let x: f64 = StandardNormal.sample(rng);
            let x = if i == j { x * std::f64::consts::SQRT_2 } else { x };
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    let mut e = m.self_adjoint_eigenvalues(Side::Lower).expect("GOE eigenvalues");
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

/// `n` levels with independent unit-mean exponential gaps.
pub fn poisson_levels<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut acc = 0.0;
    (0..n)
        .map(|_| {
            let g: f64 = Exp1.sample(rng);
            acc += g;
            acc
        })
        .collect()
}

//! Quench dynamics from a spectral decomposition, entropy time series and
//! sector averaging.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::HalfFillingBasis;
use crate::entanglement::{CutMap, Entropies};
use crate::error::{Error, Result};
use crate::model::staggered_values;
use crate::numeric::{mean, median, pairwise_sum, reduced_phase, std_dev};
use crate::spectral::SpectralDecomposition;

/// Largest tolerated error of a reduced phase, in radians.
pub const PHASE_TOLERANCE: f64 = 1e-6;

/// Log-spaced times in units of `1/w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub points: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, per_decade: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && per_decade > 0) {
            return Err(Error::Config(format!(
                "time grid needs 0 < t_min < t_max and points per decade > 0 (got {t_min}, {t_max}, {per_decade})"
            )));
        }
        let decades = (t_max / t_min).log10();
        let n = (decades * per_decade as f64).round().max(1.0) as usize;
        let lmin = t_min.log10();
        let points = (0..=n)
            .map(|i| 10f64.powf(lmin + decades * i as f64 / n as f64))
            .collect();
        Ok(TimeGrid {
            points,
            t_min,
            t_max,
            per_decade,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for TimeGrid {
    /// `10^-1 .. 10^12` with 20 points per decade.
    fn default() -> Self {
        TimeGrid::new(0.1, 1e12, 20).expect("valid default grid")
    }
}

/// Evolves one initial state in the eigenbasis of a sector.
pub struct Evolver<'a> {
    spec: &'a SpectralDecomposition,
    /// Overlaps `<n|psi_0>`.
    coeffs: Vec<Complex64>,
    e_ref: f64,
}

impl<'a> Evolver<'a> {
    pub fn new(spec: &'a SpectralDecomposition, initial: &[Complex64]) -> Result<Self> {
        let d = spec.dim();
        if initial.len() != d {
            return Err(Error::Dimension {
                what: "initial state length",
                expected: d,
                got: initial.len(),
            });
        }
        let coeffs = (0..d)
            .map(|n| {
                let v = spec.vector(n);
                v.iter().zip(initial).map(|(a, b)| b * a).sum()
            })
            .collect();
        Ok(Evolver {
            spec,
            coeffs,
            e_ref: spec.energies[0],
        })
    }

    /// `e^{-i (E_n - E_ref) t}` for every level.
    fn phases(&self, t: f64) -> Result<Vec<Complex64>> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        for &e in &self.spec.energies {
            let r = reduced_phase(e, self.e_ref, t);
            if r.error_bound > PHASE_TOLERANCE {
                return Err(Error::PhasePrecision {
                    time: t,
                    bound: r.error_bound,
                });
            }
            let (s, c) = r.radians.sin_cos();
            out.push(Complex64::new(c, -s));
        }
        Ok(out)
    }

    /// States at each of `times`, as columns (global phase `e^{-i E_ref t}`
    /// dropped).
    pub fn states_at(&self, times: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        let d = self.coeffs.len();
        let mut re = Mat::<f64>::zeros(d, times.len());
        let mut im = Mat::<f64>::zeros(d, times.len());
        for (k, &t) in times.iter().enumerate() {
            let ph = self.phases(t)?;
            for n in 0..d {
                let z = self.coeffs[n] * ph[n];
                re[(n, k)] = z.re;
                im[(n, k)] = z.im;
            }
        }
        let pr = &self.spec.vectors * &re;
        let pi = &self.spec.vectors * &im;
        Ok((0..times.len())
            .map(|k| (0..d).map(|i| Complex64::new(pr[(i, k)], pi[(i, k)])).collect())
            .collect())
    }

    /// Calls `f(t, state)` for each time, evolving in batches.
    pub fn for_each(&self, times: &[f64], mut f: impl FnMut(usize, f64, &[Complex64])) -> Result<()> {
        const BATCH: usize = 64;
        for (b, chunk) in times.chunks(BATCH).enumerate() {
            for (k, psi) in self.states_at(chunk)?.iter().enumerate() {
                let i = b * BATCH + k;
                f(i, times[i], psi);
            }
        }
        Ok(())
    }
}

/// `|psi(t)>` at each grid time.
pub fn evolve_exact(spec: &SpectralDecomposition, initial: &[Complex64], times: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    Evolver::new(spec, initial)?.states_at(times)
}

/// Entropy and magnetization time series of one sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySeries {
    pub times: Vec<f64>,
    pub s_e: Vec<f64>,
    pub s_n: Vec<f64>,
    pub s_c: Vec<f64>,
    /// Staggered magnetization.
    pub mu: Vec<f64>,
    pub sector_seed: u64,
    pub cut: usize,
    /// Largest deviation of the state norm from its initial value.
    pub norm_drift: f64,
}

/// Full quench of one sector from `initial`.
pub fn quench(
    spec: &SpectralDecomposition,
    basis: &HalfFillingBasis,
    initial: &[Complex64],
    times: &[f64],
    cut: usize,
) -> Result<EntropySeries> {
    let map = CutMap::new(basis, cut)?;
    let stag = staggered_values(basis);
    let ev = Evolver::new(spec, initial)?;
    let n0: f64 = initial.iter().map(|c| c.norm_sqr()).sum();
    let mut out = EntropySeries {
        times: times.to_vec(),
        s_e: Vec::with_capacity(times.len()),
        s_n: Vec::with_capacity(times.len()),
        s_c: Vec::with_capacity(times.len()),
        mu: Vec::with_capacity(times.len()),
        sector_seed: spec.seed,
        cut,
        norm_drift: 0.0,
    };
    ev.for_each(times, |_, _, psi| {
        let e: Entropies = map.entropies(psi);
        out.s_e.push(e.s_e);
        out.s_n.push(e.s_n);
        out.s_c.push(e.s_c);
        let p: Vec<f64> = psi.iter().map(|c| c.norm_sqr()).collect();
        let mu: Vec<f64> = p.iter().zip(&stag).map(|(p, m)| p * m).collect();
        out.mu.push(pairwise_sum(&mu));
        out.norm_drift = out.norm_drift.max((pairwise_sum(&p) - n0).abs());
    })?;
    Ok(out)
}

/// Computational basis state as a complex vector.
pub fn basis_state(basis: &HalfFillingBasis, index: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); basis.dim()];
    v[index] = Complex64::new(1.0, 0.0);
    v
}

/// Gaussian smoothing in `log10 t` with standard deviation `sigma` decades,
/// renormalized by the weight that falls inside the grid.
pub fn smooth_log_time(times: &[f64], values: &[f64], sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return values.to_vec();
    }
    let x: Vec<f64> = times.iter().map(|t| t.log10()).collect();
    (0..x.len())
        .map(|i| {
            let mut num = Vec::new();
            let mut den = Vec::new();
            for j in 0..x.len() {
                let z = (x[j] - x[i]) / sigma;
                if z.abs() > 8.0 {
                    continue;
                }
                let w = (-0.5 * z * z).exp();
                num.push(w * values[j]);
                den.push(w);
            }
            pairwise_sum(&num) / pairwise_sum(&den)
        })
        .collect()
}

/// Pointwise statistics over sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub std: Vec<f64>,
}

/// Pointwise mean, median and (population) standard deviation of series
/// sharing one time grid.
pub fn aggregate_series(grids: &[&[f64]], values: &[&[f64]]) -> Result<Aggregate> {
    let Some(first) = grids.first() else {
        return Err(Error::InsufficientData("no series to aggregate".into()));
    };
    if grids.iter().any(|g| g != first) || values.iter().any(|v| v.len() != first.len()) {
        return Err(Error::Config("series do not share one time grid".into()));
    }
    let mut agg = Aggregate {
        mean: Vec::with_capacity(first.len()),
        median: Vec::with_capacity(first.len()),
        std: Vec::with_capacity(first.len()),
    };
    for i in 0..first.len() {
        let col: Vec<f64> = values.iter().map(|v| v[i]).collect();
        agg.mean.push(mean(&col));
        agg.median.push(median(&col));
        agg.std.push(std_dev(&col));
    }
    Ok(agg)
}

/// Aggregates of `S_E`, `S_N`, `S_C` and `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyAggregate {
    pub times: Vec<f64>,
    pub s_e: Aggregate,
    pub s_n: Aggregate,
    pub s_c: Aggregate,
    pub mu: Aggregate,
}

pub fn aggregate_sectors(series: &[EntropySeries]) -> Result<EntropyAggregate> {
    let grids: Vec<&[f64]> = series.iter().map(|s| s.times.as_slice()).collect();
    let pick = |f: fn(&EntropySeries) -> &[f64]| -> Result<Aggregate> {
        let v: Vec<&[f64]> = series.iter().map(f).collect();
        aggregate_series(&grids, &v)
    };
    Ok(EntropyAggregate {
        times: grids.first().map(|g| g.to_vec()).unwrap_or_default(),
        s_e: pick(|s| &s.s_e)?,
        s_n: pick(|s| &s.s_n)?,
        s_c: pick(|s| &s.s_c)?,
        mu: pick(|s| &s.mu)?,
    })
}

/// Time-averaged `S_C` over `times` for every computational basis state
/// taken as the initial state.
pub fn basis_state_saturation(
    spec: &SpectralDecomposition,
    basis: &HalfFillingBasis,
    cut: usize,
    times: &[f64],
) -> Result<Vec<f64>> {
    let map = CutMap::new(basis, cut)?;
    let d = spec.dim();
    let v = &spec.vectors;
    let mut acc = vec![0.0; d];
    for &t in times {
        let mut cre = Mat::<f64>::zeros(d, d);
        let mut cim = Mat::<f64>::zeros(d, d);
        // Column s of diag(phase) V^T is the coefficient vector of |s>.
        for n in 0..d {
            let r = reduced_phase(spec.energies[n], spec.energies[0], t);
            if r.error_bound > PHASE_TOLERANCE {
                return Err(Error::PhasePrecision {
                    time: t,
                    bound: r.error_bound,
                });
            }
            let (s, c) = r.radians.sin_cos();
            for col in 0..d {
                let x = v[(col, n)];
                cre[(n, col)] = c * x;
                cim[(n, col)] = -s * x;
            }
        }
        let pr = v * &cre;
        let pi = v * &cim;
        for (s, a) in acc.iter_mut().enumerate() {
            let psi: Vec<Complex64> = (0..d).map(|i| Complex64::new(pr[(i, s)], pi[(i, s)])).collect();
            *a += map.entropies(&psi).s_c;
        }
    }
    Ok(acc.into_iter().map(|a| a / times.len() as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_basis, sample_charge_sectors};
    use crate::model::{build_hamiltonian, ModelParams};
    use crate::spectral::diagonalize;

    #[test]
    fn default_grid() {
        let g = TimeGrid::default();
        assert_eq!(g.len(), 261);
        assert!((g.points[0] - 0.1).abs() < 1e-15);
        assert!((g.points[260] / 1e12 - 1.0).abs() < 1e-12);
        assert!(g.points.windows(2).all(|w| w[1] > w[0]));
        assert!(TimeGrid::new(1.0, 0.5, 10).is_err());
    }

    fn setup(n: usize, j: f64) -> (HalfFillingBasis, SpectralDecomposition, crate::model::SectorHamiltonian) {
        let b = enumerate_basis(n).unwrap();
        let sec = &sample_charge_sectors(n, 1, 31)[0];
        let h = build_hamiltonian(&ModelParams::new(n, j), sec, &b).unwrap();
        let s = diagonalize(&h).unwrap();
        (b, s, h)
    }

    #[test]
    fn zero_time_returns_initial_state() {
        let (b, s, _) = setup(8, 2.0);
        let psi0 = basis_state(&b, b.vacuum_index());
        let out = evolve_exact(&s, &psi0, &[0.0]).unwrap();
        for (a, c) in out[0].iter().zip(&psi0) {
            assert!((a - c).norm() < 1e-12);
        }
    }

    #[test]
    fn eigenstates_are_stationary() {
        let (b, s, _) = setup(8, 2.0);
        let k = 17;
        let psi0: Vec<Complex64> = s.vector(k).iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let q = quench(&s, &b, &psi0, &[1.0, 1e3, 1e9], 4).unwrap();
        for i in 1..3 {
            assert!((q.s_e[i] - q.s_e[0]).abs() < 1e-9);
            assert!((q.mu[i] - q.mu[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn norm_and_energy_conserved_to_late_times() {
        let (b, s, h) = setup(8, 5.0);
        let psi0 = basis_state(&b, b.vacuum_index());
        let e0 = h.expectation(&psi0);
        let grid = TimeGrid::default();
        let states = evolve_exact(&s, &psi0, &grid.points).unwrap();
        for psi in &states {
            let n: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-10);
            assert!((h.expectation(psi) - e0).abs() < 1e-10 * e0.abs().max(1.0));
        }
        let q = quench(&s, &b, &psi0, &grid.points, 4).unwrap();
        assert!(q.norm_drift < 1e-10);
        for i in 0..grid.len() {
            assert!((q.s_e[i] - q.s_n[i] - q.s_c[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn phase_precision_guard_fires() {
        let (b, mut s, _) = setup(4, 1.0);
        s.energies[5] = 1e200;
        let psi0 = basis_state(&b, 0);
        assert!(matches!(evolve_exact(&s, &psi0, &[1e20]), Err(Error::PhasePrecision { .. })));
    }

    #[test]
    fn smoothing_constant_and_spike() {
        let g = TimeGrid::new(1.0, 1e6, 20).unwrap();
        let c = smooth_log_time(&g.points, &vec![0.7; g.len()], 0.1);
        assert!(c.iter().all(|x| (x - 0.7).abs() < 1e-14));
        let mut spike = vec![0.0; g.len()];
        spike[60] = 1.0;
        let s = smooth_log_time(&g.points, &spike, 0.1);
        // Unit mass on the grid: sum times spacing equals sigma * sqrt(2 pi) * peak.
        let mass: f64 = s.iter().sum::<f64>();
        assert!((mass - 1.0).abs() < 1e-3, "{mass}");
        let peak = s[60];
        let half = s[62];
        // 2 grid points = 0.1 decade = one sigma.
        assert!((half / peak - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn aggregates() {
        let t = [1.0, 2.0, 3.0];
        let a = [1.0, 5.0, 2.0];
        let one = aggregate_series(&[&t], &[&a]).unwrap();
        assert_eq!(one.mean, a.to_vec());
        assert_eq!(one.median, a.to_vec());
        let b = [3.0, 1.0, 2.0];
        let two = aggregate_series(&[&t, &t], &[&a, &b]).unwrap();
        assert_eq!(two.mean, vec![2.0, 3.0, 2.0]);
        assert_eq!(two.std, vec![1.0, 2.0, 0.0]);
        let t2 = [1.0, 2.0, 4.0];
        assert!(aggregate_series(&[&t, &t2], &[&a, &b]).is_err());
    }

    #[test]
    fn saturation_scan_matches_single_quench() {
        let (b, s, _) = setup(6, 1.0);
        let times = [50.0, 500.0];
        let all = basis_state_saturation(&s, &b, 3, &times).unwrap();
        for idx in [0usize, 7, b.vacuum_index()] {
            let q = quench(&s, &b, &basis_state(&b, idx), &times, 3).unwrap();
            let want = (q.s_c[0] + q.s_c[1]) / 2.0;
            assert!((all[idx] - want).abs() < 1e-10);
        }
    }
}

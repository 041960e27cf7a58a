//! Sector Hamiltonians: the Schwinger spin chain with background charges,
//! its independently scaled Coulomb/disorder variant, and disordered XXZ
//! chains for comparison.
//!
//! Every Hamiltonian is stored as a real diagonal plus a list of
//! nearest-neighbour exchange pairs, which is all the structure the
//! downstream diagnostics need.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{ChargeSector, HalfFillingBasis, SpinConfig};
use crate::error::{Error, Result};

/// Couplings of the Schwinger spin chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    /// Coupling `J`.
    pub j: f64,
    /// Hopping `w`.
    pub w: f64,
    /// Mass `m`.
    pub m: f64,
    /// Background angle `theta` in radians.
    pub theta: f64,
}

impl ModelParams {
    /// Massless, deconfined (`theta = pi`) model with `w = 1`.
    pub fn new(n: usize, j: f64) -> Self {
        ModelParams {
            n,
            j,
            w: 1.0,
            m: 0.0,
            theta: PI,
        }
    }

    pub fn with_w(mut self, w: f64) -> Self {
        self.w = w;
        self
    }

    pub fn with_mass(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n % 2 != 0 || !(2..=crate::basis::MAX_SITES).contains(&self.n) {
            return Err(Error::Config(format!("N must be even and in 2..=16, got {}", self.n)));
        }
        if !(self.w > 0.0) {
            return Err(Error::Config(format!("hopping w must be positive, got {}", self.w)));
        }
        if !(self.j >= 0.0) {
            return Err(Error::Config(format!("coupling J must be non-negative, got {}", self.j)));
        }
        if !(0.0..2.0 * PI).contains(&self.theta) {
            return Err(Error::Config(format!("theta must lie in [0, 2 pi), got {}", self.theta)));
        }
        if !self.m.is_finite() {
            return Err(Error::Config("mass must be finite".into()));
        }
        Ok(())
    }

    /// `theta / pi` when it is an integer (to within 1e-12).
    pub fn theta_over_pi(&self) -> Option<i64> {
        theta_multiple(self.theta)
    }

    /// Whether exact integer tower labels exist: `m = 0` and `theta / pi`
    /// integral.
    pub fn has_integer_towers(&self) -> bool {
        self.m == 0.0 && self.theta_over_pi().is_some()
    }
}

pub(crate) fn theta_multiple(theta: f64) -> Option<i64> {
    let r = theta / PI;
    let k = r.round();
    if (r - k).abs() < 1e-12 {
        Some(k as i64)
    } else {
        None
    }
}

/// Parameters of the disordered XXZ comparison chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XxzParams {
    pub n: usize,
    pub j_xy: f64,
    pub j_z: f64,
    /// Disorder strength `W`.
    pub disorder: f64,
    pub kind: DisorderKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisorderKind {
    /// `W_j` uniform in `[-W, W]`.
    Uniform,
    /// `W_j` uniform over `{-W, 0, +W}`.
    Discrete,
}

/// What produced a [`SectorHamiltonian`].
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Schwinger {
        params: ModelParams,
        sector: ChargeSector,
        /// Multiplier of the Coulomb term (1 for the plain model).
        j_zz: f64,
        /// Multiplier of the background-charge term (1 for the plain model).
        j_q: f64,
    },
    Xxz {
        params: XxzParams,
        fields: Vec<f64>,
    },
}

/// One nearest-neighbour exchange `|..01..> <-> |..10..>`, stored once with
/// `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub a: u32,
    pub b: u32,
    /// Left site of the exchanged pair (1-based).
    pub bond: u8,
    pub amplitude: f64,
}

/// Real symmetric Hamiltonian of one sector in the half-filling basis.
#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    pub n: usize,
    pub kind: ModelKind,
    /// `<s|H|s>` per basis state.
    pub diag: Vec<f64>,
    pub hops: Vec<Hop>,
    /// Diagonal energy in units of `J/2`, present only when it is exactly
    /// integral (`m = 0`, integer `theta / pi`, integer term multipliers).
    pub diag_units: Option<Vec<i64>>,
    /// Seed of the charge sector or disorder realization.
    pub seed: u64,
}

/// `h_k` of the background-charge field, without the mass term.
pub fn local_field(k: usize, sector: &ChargeSector, params: &ModelParams) -> f64 {
    let n = params.n;
    let prefix = sector.prefix_sums();
    let suffix: i64 = (k..n).map(|j| prefix[j]).sum();
    let nk = (n - k) as f64;
    0.5 * params.j * (nk * params.theta / PI - ceil_half(n - k) as f64 + 2.0 * suffix as f64)
}

/// Full coefficient of `sigma^z_k`: `h_k + (m/2)(-1)^k`.
pub fn site_field(k: usize, sector: &ChargeSector, params: &ModelParams) -> f64 {
    local_field(k, sector, params) + 0.5 * params.m * parity_sign(k) as f64
}

#[inline]
fn ceil_half(x: usize) -> i64 {
    x.div_ceil(2) as i64
}

#[inline]
fn parity_sign(k: usize) -> i64 {
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Integer field coefficients `2 h_k / J` for integer `theta / pi`, indexed
/// `1..=N` (entry 0 unused).
pub fn field_units(n: usize, sector: &ChargeSector, theta_over_pi: i64) -> Vec<i64> {
    let prefix = sector.prefix_sums();
    let mut out = vec![0i64; n + 1];
    let mut suffix = 0i64;
    for k in (1..=n).rev() {
        if k < n {
            suffix += prefix[k];
        }
        out[k] = (n - k) as i64 * theta_over_pi - ceil_half(n - k) + 2 * suffix;
    }
    out
}

/// `sum_{j<k<=N-1} (N-k) s_j s_k`, the Coulomb energy in units of `J/2`.
pub fn coulomb_units(s: SpinConfig, n: usize) -> i64 {
    let mut left = 0i64;
    let mut acc = 0i64;
    for k in 1..n {
        let sk = s.sigma(k);
        acc += (n - k) as i64 * sk * left;
        left += sk;
    }
    acc
}

/// Background-field energy `sum_k (2 h_k / J) s_k`.
pub fn charge_units(s: SpinConfig, fields: &[i64]) -> i64 {
    (1..fields.len()).map(|k| fields[k] * s.sigma(k)).sum()
}

fn hop_list(basis: &HalfFillingBasis, amplitude: f64) -> Vec<Hop> {
    let n = basis.n();
    let mut hops = Vec::with_capacity(basis.dim() * n / 2);
    for (a, &s) in basis.states().iter().enumerate() {
        for bond in 1..n {
            if s.is_antialigned(bond) {
                let b = basis.index_of(s.exchanged(bond)).expect("exchange preserves filling");
                if a < b {
                    hops.push(Hop {
                        a: a as u32,
                        b: b as u32,
                        bond: bond as u8,
                        amplitude,
                    });
                }
            }
        }
    }
    hops
}

fn check_dims(params: &ModelParams, sector: &ChargeSector, basis: &HalfFillingBasis) -> Result<()> {
    params.validate()?;
    if basis.n() != params.n {
        return Err(Error::Dimension {
            what: "basis site count",
            expected: params.n,
            got: basis.n(),
        });
    }
    if sector.n() != params.n {
        return Err(Error::Dimension {
            what: "charge vector length",
            expected: params.n,
            got: sector.n(),
        });
    }
    Ok(())
}

/// `H = H_pm + H_ZZ + H_q` for one charge sector.
pub fn build_hamiltonian(
    params: &ModelParams,
    sector: &ChargeSector,
    basis: &HalfFillingBasis,
) -> Result<SectorHamiltonian> {
    build_scaled_hamiltonian(params, sector, basis, 1.0, 1.0)
}

/// `H = H_pm + j_zz H_ZZ + j_q H_q`, with `J` kept inside `H_ZZ` and `H_q`.
pub fn build_scaled_hamiltonian(
    params: &ModelParams,
    sector: &ChargeSector,
    basis: &HalfFillingBasis,
    j_zz: f64,
    j_q: f64,
) -> Result<SectorHamiltonian> {
    check_dims(params, sector, basis)?;
    let n = params.n;
    let half_j = 0.5 * params.j;

    let int_mult = |x: f64| (x.fract() == 0.0 && x.abs() < 1e6).then_some(x as i64);
    let exact = match (params.theta_over_pi(), params.m == 0.0, int_mult(j_zz), int_mult(j_q)) {
        (Some(tp), true, Some(a), Some(b)) => Some((tp, a, b)),
        _ => None,
    };

    let (diag, diag_units) = if let Some((tp, a, b)) = exact {
        let fields = field_units(n, sector, tp);
        let units: Vec<i64> = basis
            .states()
            .iter()
            .map(|&s| a * coulomb_units(s, n) + b * charge_units(s, &fields))
            .collect();
        let diag = units.iter().map(|&u| half_j * u as f64).collect();
        (diag, Some(units))
    } else {
        if params.theta_over_pi().is_none() {
            log::warn!(
                "theta = {} is not a multiple of pi; towers are not exactly degenerate",
                params.theta
            );
        }
        let fields: Vec<f64> = (0..=n)
            .map(|k| if k == 0 { 0.0 } else { site_field(k, sector, params) })
            .collect();
        let diag = basis
            .states()
            .iter()
            .map(|&s| {
                let zz = half_j * coulomb_units(s, n) as f64;
                let q: f64 = (1..=n).map(|k| fields[k] * s.sigma(k) as f64).sum();
                j_zz * zz + j_q * q
            })
            .collect();
        (diag, None)
    };

    Ok(SectorHamiltonian {
        n,
        kind: ModelKind::Schwinger {
            params: *params,
            sector: sector.clone(),
            j_zz,
            j_q,
        },
        diag,
        hops: hop_list(basis, params.w),
        diag_units,
        seed: sector.seed,
    })
}

/// On-site fields `W_1..W_N` of one XXZ disorder realization.
pub fn xxz_fields(params: &XxzParams, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = params.disorder;
    (0..params.n)
        .map(|_| match params.kind {
            DisorderKind::Uniform => {
                if w == 0.0 {
                    0.0
                } else {
                    rng.random_range(-w..=w)
                }
            }
            DisorderKind::Discrete => [-w, 0.0, w][rng.random_range(0..3usize)],
        })
        .collect()
}

/// Disordered XXZ chain on the half-filling sector.
pub fn build_xxz(params: &XxzParams, basis: &HalfFillingBasis, seed: u64) -> Result<SectorHamiltonian> {
    if params.n % 2 != 0 || basis.n() != params.n {
        return Err(Error::Config(format!(
            "XXZ chain needs an even N matching the basis (N = {}, basis N = {})",
            params.n,
            basis.n()
        )));
    }
    if !(params.disorder >= 0.0) {
        return Err(Error::Config("disorder strength must be non-negative".into()));
    }
    let n = params.n;
    let fields = xxz_fields(params, seed);
    let diag = basis
        .states()
        .iter()
        .map(|&s| {
            let zz: f64 = (1..n).map(|j| (s.sigma(j) * s.sigma(j + 1)) as f64).sum();
            let h: f64 = (1..=n).map(|j| fields[j - 1] * s.sigma(j) as f64).sum();
            0.5 * params.j_z * zz + h
        })
        .collect();
    Ok(SectorHamiltonian {
        n,
        kind: ModelKind::Xxz {
            params: *params,
            fields,
        },
        diag,
        hops: hop_list(basis, params.j_xy),
        diag_units: None,
        seed,
    })
}

impl SectorHamiltonian {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Dense symmetric matrix.
    pub fn to_dense(&self) -> Mat<f64> {
        let d = self.dim();
        let mut m = Mat::<f64>::zeros(d, d);
        for (i, &x) in self.diag.iter().enumerate() {
            m[(i, i)] = x;
        }
        for h in &self.hops {
            m[(h.a as usize, h.b as usize)] += h.amplitude;
            m[(h.b as usize, h.a as usize)] += h.amplitude;
        }
        m
    }

    /// `y = H x` without forming the matrix.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = xi * d;
        }
        for h in &self.hops {
            let (a, b) = (h.a as usize, h.b as usize);
            y[a] += x[b] * h.amplitude;
            y[b] += x[a] * h.amplitude;
        }
    }

    /// `<x|H|x>` for a (not necessarily normalized) state.
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        self.apply(x, &mut y);
        x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Charge sector for Schwinger Hamiltonians.
    pub fn sector(&self) -> Option<&ChargeSector> {
        match &self.kind {
            ModelKind::Schwinger { sector, .. } => Some(sector),
            ModelKind::Xxz { .. } => None,
        }
    }

    pub fn schwinger_params(&self) -> Option<&ModelParams> {
        match &self.kind {
            ModelKind::Schwinger { params, .. } => Some(params),
            ModelKind::Xxz { .. } => None,
        }
    }

    /// Energy scale used to express spectra in units of the coupling
    /// (`J` for Schwinger chains, `W` for XXZ chains).
    pub fn coupling_scale(&self) -> f64 {
        match &self.kind {
            ModelKind::Schwinger { params, .. } => params.j,
            ModelKind::Xxz { params, .. } => params.disorder,
        }
    }
}

/// Per-state value of `(1/N) sum_j (-1)^j sigma^z_j`.
pub fn staggered_values(basis: &HalfFillingBasis) -> Vec<f64> {
    let n = basis.n();
    basis
        .states()
        .iter()
        .map(|&s| (1..=n).map(|j| (parity_sign(j) * s.sigma(j)) as f64).sum::<f64>() / n as f64)
        .collect()
}

/// Staggered magnetization `<mu>` of a state over the half-filling basis.
pub fn staggered_magnetization(state: &[Complex64], basis: &HalfFillingBasis) -> f64 {
    staggered_values(basis)
        .iter()
        .zip(state)
        .map(|(m, c)| m * c.norm_sqr())
        .sum()
}

/// `<vac|H|vac>` in closed form, for any `theta` and `m`.
pub fn vacuum_energy(params: &ModelParams, sector: &ChargeSector) -> f64 {
    let n = params.n as f64;
    let half = 0.5 * n;
    -0.5 * params.j * half * (half - 1.0)
        + 0.5 * params.j * (params.theta / PI - 1.0) * half
        + params.j * weighted_charge(params.n, sector) as f64
        - 0.5 * params.m * n
}

fn weighted_charge(n: usize, sector: &ChargeSector) -> i64 {
    (1..n).map(|k| ceil_half(n - k) * sector.q[k - 1] as i64).sum()
}

/// The quoted closed form `-(J/2)(N^2/4 - sum_k ceil((N-k)/2) q_k)`.
///
/// It does not equal `<vac|H|vac>`: relative to [`vacuum_energy`] at
/// `theta = pi`, `m = 0` it is lower by `J N / 4` and its charge term
/// carries half the weight.
pub fn vacuum_energy_formula(params: &ModelParams, sector: &ChargeSector) -> f64 {
    let n = params.n;
    -0.5 * params.j * ((n * n) as f64 / 4.0 - weighted_charge(n, sector) as f64)
}

//! Resonant hopping, degenerate towers and their Krylov subspaces.
//!
//! At `m = 0` and integer `theta / pi` the diagonal energy takes values on
//! a lattice of spacing `2J`. An exchange at bond `l` keeps the energy only
//! if
//!
//! ```text
//! sum_{j<l} s_j + 2 sum_{j<=l} q_j = (l mod 2) - theta/pi
//! ```
//!
//! and the graph of such exchanges splits every tower into disconnected
//! subspaces.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{ChargeSector, HalfFillingBasis, SpinConfig};
use crate::error::{Error, Result};
use crate::model::{theta_multiple, SectorHamiltonian};
use crate::numeric::derive_seed;

/// `L` of the hop at `bond`: the energy change in units of `J` for
/// `sigma_l: -1 -> +1` (the reverse exchange costs `-L`).
fn resonance_lhs(config: SpinConfig, bond: usize, prefix: &[i64], theta_over_pi: i64) -> i64 {
    let left: i64 = (1..bond).map(|j| config.sigma(j)).sum();
    left + 2 * prefix[bond] + theta_over_pi - (bond % 2) as i64
}

/// Change of the diagonal energy, in units of `J/2`, when the antialigned
/// pair at `bond` is exchanged.
pub fn hop_delta_units(config: SpinConfig, bond: usize, sector: &ChargeSector, theta_over_pi: i64) -> Result<i64> {
    if !config.is_antialigned(bond) {
        return Err(Error::AlignedBond { bond });
    }
    let l = resonance_lhs(config, bond, &sector.prefix_sums(), theta_over_pi);
    let s = if config.is_up(bond) { -1 } else { 1 };
    Ok(2 * s * l)
}

/// Whether exchanging the pair at `bond` costs no diagonal energy.
pub fn is_resonant(config: SpinConfig, bond: usize, sector: &ChargeSector, theta: f64) -> Result<bool> {
    if !config.is_antialigned(bond) {
        return Err(Error::AlignedBond { bond });
    }
    match theta_multiple(theta) {
        Some(tp) => Ok(resonance_lhs(config, bond, &sector.prefix_sums(), tp) == 0),
        None => {
            log::warn!("theta / pi = {} is not an integer; no exchange is resonant", theta / std::f64::consts::PI);
            Ok(false)
        }
    }
}

/// One degenerate level of the `w = 0` Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Tower {
    /// Shared value of `diag_units`.
    pub label: i64,
    /// Basis indices, ascending.
    pub states: Vec<u32>,
}

/// All towers of a sector, ordered by label.
pub fn towers(h: &SectorHamiltonian) -> Result<Vec<Tower>> {
    let units = h
        .diag_units
        .as_ref()
        .ok_or(Error::NoTowerLabels("towers need exact integer diagonal labels"))?;
    let mut map: HashMap<i64, Vec<u32>> = HashMap::new();
    for (i, &u) in units.iter().enumerate() {
        map.entry(u).or_default().push(i as u32);
    }
    let mut out: Vec<Tower> = map.into_iter().map(|(label, states)| Tower { label, states }).collect();
    out.sort_by_key(|t| t.label);
    Ok(out)
}

/// Tower containing basis state `index`.
pub fn tower_of(h: &SectorHamiltonian, index: usize) -> Result<Tower> {
    let units = h
        .diag_units
        .as_ref()
        .ok_or(Error::NoTowerLabels("towers need exact integer diagonal labels"))?;
    let label = units[index];
    let states = (0..units.len() as u32).filter(|&i| units[i as usize] == label).collect();
    Ok(Tower { label, states })
}

/// One connected component of a tower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    /// Basis indices, ascending.
    pub states: Vec<u32>,
    /// Bit `l` set when some resonant exchange at bond `l` occurs.
    pub bond_mask: u32,
    /// Disjoint clusters of sites (1-based, ascending).
    pub active_regions: Vec<Vec<usize>>,
    /// Dimension of each region's restricted configuration set, reported
    /// only when their product equals the subspace dimension.
    pub factor_dims: Option<Vec<usize>>,
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Whether an active region contains both central sites.
    pub fn crosses_center(&self, n: usize) -> bool {
        self.bond_mask >> (n / 2) & 1 == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovDecomposition {
    pub tower_label: i64,
    /// Ordered by smallest basis index.
    pub subspaces: Vec<Subspace>,
}

/// Site clusters covered by the bonds in `mask`; bonds sharing a site merge.
pub fn active_regions(mask: u32, n: usize) -> Vec<Vec<usize>> {
    let mut regions: Vec<Vec<usize>> = Vec::new();
    let mut prev_bond = None;
    for bond in 1..n {
        if mask >> bond & 1 == 0 {
            continue;
        }
        match (prev_bond, regions.last_mut()) {
            (Some(p), Some(r)) if p + 1 == bond => r.push(bond + 1),
            _ => regions.push(vec![bond, bond + 1]),
        }
        prev_bond = Some(bond);
    }
    regions
}

fn factorization(configs: &[SpinConfig], regions: &[Vec<usize>]) -> Option<Vec<usize>> {
    if regions.is_empty() {
        return None;
    }
    let dims: Vec<usize> = regions
        .iter()
        .map(|r| {
            let mask: u32 = r.iter().map(|&s| 1u32 << (s - 1)).sum();
            configs.iter().map(|c| c.0 & mask).collect::<HashSet<u32>>().len()
        })
        .collect();
    (dims.iter().product::<usize>() == configs.len()).then_some(dims)
}

fn finish(n: usize, mut states: Vec<u32>, configs: &[SpinConfig], bond_mask: u32) -> Subspace {
    states.sort_unstable();
    let regions = active_regions(bond_mask, n);
    let factor_dims = factorization(configs, &regions);
    Subspace {
        states,
        bond_mask,
        active_regions: regions,
        factor_dims,
    }
}

/// Connected components of a tower under resonant exchanges.
pub fn decompose_tower(h: &SectorHamiltonian, basis: &HalfFillingBasis, tower: &Tower) -> Result<KrylovDecomposition> {
    let units = h
        .diag_units
        .as_ref()
        .ok_or(Error::NoTowerLabels("Krylov decomposition needs exact integer diagonal labels"))?;
    let n = basis.n();
    let mut seen: HashSet<u32> = HashSet::with_capacity(tower.states.len());
    let mut subspaces = Vec::new();
    for &start in &tower.states {
        if units[start as usize] != tower.label {
            return Err(Error::Config(format!("state {start} is not in tower {}", tower.label)));
        }
        if !seen.insert(start) {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        let mut comp = Vec::new();
        let mut configs = Vec::new();
        let mut mask = 0u32;
        while let Some(i) = queue.pop_front() {
            comp.push(i);
            let s = basis.state(i as usize);
            configs.push(s);
            for bond in 1..n {
                if !s.is_antialigned(bond) {
                    continue;
                }
                let j = basis.index_of(s.exchanged(bond)).expect("exchange stays at half filling") as u32;
                if units[j as usize] == tower.label {
                    mask |= 1 << bond;
                    if seen.insert(j) {
                        queue.push_back(j);
                    }
                }
            }
        }
        subspaces.push(finish(n, comp, &configs, mask));
    }
    subspaces.sort_by_key(|s| s.states[0]);
    Ok(KrylovDecomposition {
        tower_label: tower.label,
        subspaces,
    })
}

/// Decomposition of every tower of a sector, ordered by label.
pub fn decompose_all(h: &SectorHamiltonian, basis: &HalfFillingBasis) -> Result<Vec<KrylovDecomposition>> {
    towers(h)?.par_iter().map(|t| decompose_tower(h, basis, t)).collect()
}

/// Krylov subspace of one configuration, found without building the
/// Hamiltonian: BFS over exchanges satisfying the resonance condition.
pub fn subspace_of(config: SpinConfig, sector: &ChargeSector, theta_over_pi: i64) -> (Vec<SpinConfig>, u32) {
    let n = sector.n();
    let prefix = sector.prefix_sums();
    let mut seen = HashSet::from([config]);
    let mut queue = VecDeque::from([config]);
    let mut out = Vec::new();
    let mut mask = 0u32;
    while let Some(s) = queue.pop_front() {
        out.push(s);
        for bond in 1..n {
            if s.is_antialigned(bond) && resonance_lhs(s, bond, &prefix, theta_over_pi) == 0 {
                mask |= 1 << bond;
                let t = s.exchanged(bond);
                if seen.insert(t) {
                    queue.push_back(t);
                }
            }
        }
    }
    out.sort_by_key(|s| s.0);
    (out, mask)
}

/// Fraction with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl Estimate {
    fn from_counts(hits: usize, samples: usize) -> Self {
        let p = hits as f64 / samples as f64;
        Estimate {
            value: p,
            std_err: (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
        }
    }
}

fn random_half_filling<R: Rng>(n: usize, rng: &mut R) -> SpinConfig {
    let mut sites: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        sites.swap(i, rng.random_range(0..=i));
    }
    SpinConfig(sites[..n / 2].iter().map(|&s| 1u32 << s).sum())
}

/// Monte-Carlo estimate of the fraction of (state, sector) pairs whose
/// Krylov subspace has an active region across the central bond, with a
/// fresh random sector per sample.
pub fn p_cross_estimate(n: usize, samples: usize, master_seed: u64, theta: f64) -> Result<Estimate> {
    if n % 2 != 0 || !(2..=crate::basis::MAX_SITES).contains(&n) {
        return Err(Error::Config(format!("N must be even and in 2..=16, got {n}")));
    }
    if samples < 1000 {
        log::warn!("p_cross from only {samples} samples");
    }
    let Some(tp) = theta_multiple(theta) else {
        return Ok(Estimate::from_counts(0, samples.max(1)));
    };
    let hits = (0..samples)
        .into_par_iter()
        .filter(|&i| {
            let seed = derive_seed(master_seed, i as u64);
            let sector = ChargeSector::sample(n, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5_A5A5_A5A5_A5A5);
            let s = random_half_filling(n, &mut rng);
            let (_, mask) = subspace_of(s, &sector, tp);
            mask >> (n / 2) & 1 == 1
        })
        .count();
    Ok(Estimate::from_counts(hits, samples))
}

/// Monte-Carlo estimate restricted to a fixed list of sectors (drawn
/// uniformly), for checks against exhaustive counts.
pub fn p_cross_in_sectors(
    sectors: &[ChargeSector],
    samples: usize,
    master_seed: u64,
    theta: f64,
) -> Result<Estimate> {
    let n = sectors.first().ok_or(Error::Config("no sectors given".into()))?.n();
    let Some(tp) = theta_multiple(theta) else {
        return Ok(Estimate::from_counts(0, samples.max(1)));
    };
    let hits = (0..samples)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, i as u64));
            let sector = &sectors[rng.random_range(0..sectors.len())];
            let s = random_half_filling(n, &mut rng);
            subspace_of(s, sector, tp).1 >> (n / 2) & 1 == 1
        })
        .count();
    Ok(Estimate::from_counts(hits, samples))
}

/// Exact fraction of basis states of `h` whose subspace crosses the center.
pub fn p_cross_exact(h: &SectorHamiltonian, basis: &HalfFillingBasis) -> Result<f64> {
    let mut hits = 0usize;
    for k in decompose_all(h, basis)? {
        for s in &k.subspaces {
            if s.crosses_center(basis.n()) {
                hits += s.dim();
            }
        }
    }
    Ok(hits as f64 / basis.dim() as f64)
}

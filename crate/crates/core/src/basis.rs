//! Zero-magnetization basis and background-charge sectors.
//!
//! Site `j` (1-based, counted from the left) is stored at bit `j - 1` of a
//! word; a set bit means `sigma^z_j = +1`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{binomial, derive_seed};

pub const MAX_SITES: usize = 16;

/// A computational basis state of up to [`MAX_SITES`] spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinConfig(pub u32);

impl SpinConfig {
    /// Whether site `j` (1-based) holds an up spin.
    #[inline]
    pub fn is_up(self, j: usize) -> bool {
        (self.0 >> (j - 1)) & 1 == 1
    }

    /// `sigma^z_j` as `+1` / `-1`.
    #[inline]
    pub fn sigma(self, j: usize) -> i64 {
        if self.is_up(j) {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn popcount(self) -> u32 {
        self.0.count_ones()
    }

    /// Exchanges the spins at sites `bond` and `bond + 1`.
    #[inline]
    pub fn exchanged(self, bond: usize) -> SpinConfig {
        SpinConfig(self.0 ^ (0b11 << (bond - 1)))
    }

    /// True if sites `bond` and `bond + 1` hold opposite spins.
    #[inline]
    pub fn is_antialigned(self, bond: usize) -> bool {
        self.is_up(bond) != self.is_up(bond + 1)
    }

    /// Néel-ordered vacuum `1010...10`: up spins on odd sites.
    pub fn vacuum(n: usize) -> SpinConfig {
        let mut w = 0u32;
        for j in (1..=n).step_by(2) {
            w |= 1 << (j - 1);
        }
        SpinConfig(w)
    }

    /// Renders the first `n` sites left to right, e.g. `"1010"`.
    pub fn to_string_n(self, n: usize) -> String {
        (1..=n).map(|j| if self.is_up(j) { '1' } else { '0' }).collect()
    }

    /// Parses a left-to-right `0/1` string.
    pub fn parse(s: &str) -> Result<SpinConfig> {
        if s.is_empty() || s.len() > MAX_SITES {
            return Err(Error::Parse(format!("bad spin string {s:?}")));
        }
        let mut w = 0u32;
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => w |= 1 << i,
                '0' => {}
                _ => return Err(Error::Parse(format!("bad spin string {s:?}"))),
            }
        }
        Ok(SpinConfig(w))
    }
}

/// All half-filling configurations of `n` sites in ascending word order,
/// with the inverse map.
#[derive(Debug, Clone)]
pub struct HalfFillingBasis {
    n: usize,
    states: Vec<SpinConfig>,
    // Dense lookup over all 2^n words; u32::MAX marks words outside the sector.
    index: Vec<u32>,
}

impl HalfFillingBasis {
    pub fn new(n: usize) -> Result<Self> {
        enumerate_basis(n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[SpinConfig] {
        &self.states
    }

    #[inline]
    pub fn state(&self, i: usize) -> SpinConfig {
        self.states[i]
    }

    #[inline]
    pub fn index_of(&self, s: SpinConfig) -> Option<usize> {
        match self.index.get(s.0 as usize) {
            Some(&i) if i != u32::MAX => Some(i as usize),
            _ => None,
        }
    }

    /// Index of the vacuum `1010...10`.
    pub fn vacuum_index(&self) -> usize {
        self.index_of(SpinConfig::vacuum(self.n))
            .expect("vacuum is a half-filling state")
    }
}

/// Enumerates the zero-magnetization sector for an even `n` in `2..=16`.
pub fn enumerate_basis(n: usize) -> Result<HalfFillingBasis> {
    if n % 2 != 0 || !(2..=MAX_SITES).contains(&n) {
        return Err(Error::Config(format!(
            "site count must be even and between 2 and {MAX_SITES}, got {n}"
        )));
    }
    let half = n / 2;
    let mut states = Vec::with_capacity(binomial(n, half));
    let mut index = vec![u32::MAX; 1 << n];
    // Gosper's hack walks fixed-popcount words in increasing order.
    let mut w: u32 = (1 << half) - 1;
    let limit: u32 = 1 << n;
    while w < limit {
        index[w as usize] = states.len() as u32;
        states.push(SpinConfig(w));
        let c = w & w.wrapping_neg();
        let r = w + c;
        w = (((r ^ w) >> 2) / c) | r;
    }
    Ok(HalfFillingBasis { n, states, index })
}

/// One background-charge configuration `q_1..q_N` with zero net charge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChargeSector {
    pub q: Vec<i8>,
    pub seed: u64,
}

impl ChargeSector {
    /// Builds a sector from explicit charges, checking `q_j ∈ {-1,0,1}` and
    /// zero sum.
    pub fn new(q: Vec<i8>, seed: u64) -> Result<Self> {
        if q.iter().any(|&x| !(-1..=1).contains(&x)) {
            return Err(Error::Config("background charges must lie in {-1, 0, 1}".into()));
        }
        let total: i64 = q.iter().map(|&x| x as i64).sum();
        if total != 0 {
            return Err(Error::Config(format!("background charges sum to {total}, not 0")));
        }
        Ok(ChargeSector { q, seed })
    }

    /// All charges zero.
    pub fn neutral(n: usize) -> Self {
        ChargeSector { q: vec![0; n], seed: 0 }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// Draws one sector from `seed`: i.i.d. uniform `{-1,0,1}` per site,
    /// redrawn until the sum vanishes.
    pub fn sample(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let q: Vec<i8> = (0..n).map(|_| rng.random_range(-1i8..=1)).collect();
            if q.iter().map(|&x| x as i32).sum::<i32>() == 0 {
                return ChargeSector { q, seed };
            }
        }
    }

    /// Partial sums `P_j = sum_{i<=j} q_i` for `j = 0..=N` (`P_0 = 0`).
    pub fn prefix_sums(&self) -> Vec<i64> {
        let mut p = Vec::with_capacity(self.q.len() + 1);
        p.push(0);
        let mut acc = 0i64;
        for &x in &self.q {
            acc += x as i64;
            p.push(acc);
        }
        p
    }

    /// `seed,q_1,...,q_N`
    pub fn to_line(&self) -> String {
        let mut s = self.seed.to_string();
        for &x in &self.q {
            s.push(',');
            s.push_str(&x.to_string());
        }
        s
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let mut parts = line.trim().split(',');
        let seed = parts
            .next()
            .and_then(|s| s.trim().parse::<u64>().ok())
            .ok_or_else(|| Error::Parse(format!("missing sector seed in {line:?}")))?;
        let q = parts
            .map(|p| p.trim().parse::<i8>().map_err(|e| Error::Parse(format!("{p:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if q.is_empty() {
            return Err(Error::Parse(format!("no charges in {line:?}")));
        }
        ChargeSector::new(q, seed)
    }
}

impl fmt::Display for ChargeSector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

impl FromStr for ChargeSector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ChargeSector::from_line(s)
    }
}

/// Seed of sector `index` in the stream rooted at `master_seed`.
pub fn sector_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, index as u64)
}

/// `count` sectors, each reproducible in isolation from
/// `(master_seed, index)`.
pub fn sample_charge_sectors(n: usize, count: usize, master_seed: u64) -> Vec<ChargeSector> {
    (0..count)
        .map(|i| ChargeSector::sample(n, sector_seed(master_seed, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_bases() {
        let b = enumerate_basis(2).unwrap();
        let strs: Vec<_> = b.states().iter().map(|s| s.to_string_n(2)).collect();
        assert_eq!(strs, vec!["10", "01"]);
        assert_eq!(enumerate_basis(4).unwrap().dim(), 6);
        assert_eq!(enumerate_basis(16).unwrap().dim(), binomial(16, 8));
        assert_eq!(enumerate_basis(16).unwrap().dim(), 12870);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(enumerate_basis(5).is_err());
        assert!(enumerate_basis(0).is_err());
        assert!(enumerate_basis(18).is_err());
    }

    #[test]
    fn ascending_and_bijective() {
        for n in (2..=12).step_by(2) {
            let b = enumerate_basis(n).unwrap();
            assert!(b.states().windows(2).all(|w| w[0] < w[1]));
            for (i, s) in b.states().iter().enumerate() {
                assert_eq!(s.popcount() as usize, n / 2);
                assert_eq!(b.index_of(*s), Some(i));
            }
            for w in 0u32..(1 << n) {
                let s = SpinConfig(w);
                match b.index_of(s) {
                    Some(i) => assert_eq!(b.state(i), s),
                    None => assert_ne!(w.count_ones() as usize, n / 2),
                }
            }
        }
    }

    #[test]
    fn vacuum_string() {
        assert_eq!(SpinConfig::vacuum(6).to_string_n(6), "101010");
        assert_eq!(SpinConfig::parse("1010").unwrap(), SpinConfig::vacuum(4));
    }

    #[test]
    fn example_sector_is_neutral() {
        let q = vec![1, -1, 0, 0, 1, -1, 1, 0, 0, 1, 0, 0, 0, -1, -1, 0, 0, 0];
        let s = ChargeSector::new(q, 7).unwrap();
        assert_eq!(s.q.iter().map(|&x| x as i32).sum::<i32>(), 0);
        assert!(ChargeSector::new(vec![1, 1, 0, 0], 0).is_err());
        assert!(ChargeSector::new(vec![2, -2], 0).is_err());
    }

    #[test]
    fn line_format_round_trip() {
        let s = ChargeSector::sample(8, 99);
        let line = s.to_line();
        assert!(line.starts_with("99,"));
        assert_eq!(ChargeSector::from_line(&line).unwrap(), s);
        assert!(ChargeSector::from_line("5,1,1").is_err());
        assert!(ChargeSector::from_line("x,1,-1").is_err());
    }

    #[test]
    fn marginal_matches_exhaustive_enumeration() {
        // Exact conditioned-uniform marginal at N = 6 by enumeration.
        let n = 6;
        let mut counts = [[0usize; 3]; 6];
        let mut total = 0usize;
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let q: Vec<i32> = (0..n)
                .map(|_| {
                    let d = (c % 3) as i32 - 1;
                    c /= 3;
                    d
                })
                .collect();
            if q.iter().sum::<i32>() == 0 {
                total += 1;
                for (j, &x) in q.iter().enumerate() {
                    counts[j][(x + 1) as usize] += 1;
                }
            }
        }
        let samples = 100_000;
        let sectors = sample_charge_sectors(n, samples, 2024);
        let mut emp = [[0usize; 3]; 6];
        for s in &sectors {
            for (j, &x) in s.q.iter().enumerate() {
                emp[j][(x + 1) as usize] += 1;
            }
        }
        for j in 0..n {
            for v in 0..3 {
                let exact = counts[j][v] as f64 / total as f64;
                let got = emp[j][v] as f64 / samples as f64;
                assert!((exact - got).abs() < 0.02, "site {j} value {v}: {exact} vs {got}");
            }
        }
    }

    proptest! {
        #[test]
        fn sampled_sectors_are_neutral_and_reproducible(master in any::<u64>(), idx in 0usize..1000, half in 1usize..=8) {
            let n = 2 * half;
            let a = ChargeSector::sample(n, sector_seed(master, idx));
            let b = ChargeSector::sample(n, sector_seed(master, idx));
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.q.iter().map(|&x| x as i32).sum::<i32>(), 0);
            prop_assert_eq!(a.q.len(), n);
        }
    }
}

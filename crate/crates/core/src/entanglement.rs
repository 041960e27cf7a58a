//! Bipartite entanglement across a bond, split by the particle number of
//! the left block into number and configurational parts.

use faer::Mat;
use num_complex::Complex64;

use crate::basis::HalfFillingBasis;
use crate::error::{Error, Result};
use crate::numeric::xlnx_neg;

/// Bipartite entropies of one state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Entropies {
    /// Von Neumann entropy of the left block.
    pub s_e: f64,
    /// Shannon entropy of the left particle-number distribution.
    pub s_n: f64,
    /// Number-weighted entropy of the fixed-number blocks.
    pub s_c: f64,
}

#[derive(Debug, Clone)]
struct Block {
    rows: usize,
    cols: usize,
}

/// Reshaping of the half-filling basis into `(left, right)` matrices, one per
/// left particle number. Built once per `(N, cut)`.
#[derive(Debug, Clone)]
pub struct CutMap {
    cut: usize,
    blocks: Vec<Block>,
    /// Per basis state: (block, row, col).
    place: Vec<(u8, u16, u16)>,
}

impl CutMap {
    /// Cut after site `cut` (left block = sites `1..=cut`).
    pub fn new(basis: &HalfFillingBasis, cut: usize) -> Result<Self> {
        let n = basis.n();
        if cut == 0 || cut >= n {
            return Err(Error::Config(format!("cut must lie in 1..{n}, got {cut}")));
        }
        let half = n / 2;
        let left_mask = (1u32 << cut) - 1;
        let right_sites = n - cut;
        // Dense index of each bit pattern among patterns of equal popcount.
        let rank = |width: usize| -> Vec<u16> {
            let mut counters = vec![0u16; width + 1];
            (0..(1u32 << width))
                .map(|w| {
                    let c = w.count_ones() as usize;
                    let r = counters[c];
                    counters[c] += 1;
                    r
                })
                .collect()
        };
        let left_rank = rank(cut);
        let right_rank = rank(right_sites);
        let mut blocks: Vec<Block> = (0..=half.min(cut))
            .map(|_| Block { rows: 0, cols: 0 })
            .collect();
        let mut place = Vec::with_capacity(basis.dim());
        for &s in basis.states() {
            let l = s.0 & left_mask;
            let r = s.0 >> cut;
            let na = l.count_ones() as usize;
            let row = left_rank[l as usize];
            let col = right_rank[r as usize];
            let b = &mut blocks[na];
            b.rows = b.rows.max(row as usize + 1);
            b.cols = b.cols.max(col as usize + 1);
            place.push((na as u8, row, col));
        }
        Ok(CutMap { cut, blocks, place })
    }

    pub fn cut(&self) -> usize {
        self.cut
    }

    /// Entropies of a state. The state is normalized internally, so
    /// projected (sub-normalized) states are accepted.
    pub fn entropies(&self, state: &[Complex64]) -> Entropies {
        assert_eq!(state.len(), self.place.len(), "state length does not match basis");
        let norm: f64 = state.iter().map(|c| c.norm_sqr()).sum();
        if !(norm > 0.0) {
            return Entropies::default();
        }
        let scale = 1.0 / norm.sqrt();
        let mut mats: Vec<Mat<Complex64>> = self
            .blocks
            .iter()
            .map(|b| Mat::zeros(b.rows, b.cols))
            .collect();
        for (c, &(b, r, col)) in state.iter().zip(&self.place) {
            mats[b as usize][(r as usize, col as usize)] = c * scale;
        }
        let mut out = Entropies::default();
        for m in &mats {
            if m.nrows() == 0 || m.ncols() == 0 {
                continue;
            }
            let p: f64 = m.norm_l2().powi(2);
            if p <= 0.0 {
                continue;
            }
            let lambdas: Vec<f64> = if m.nrows() == 1 || m.ncols() == 1 {
                vec![p]
            } else {
                m.singular_values()
                    .expect("singular values of a small block")
                    .into_iter()
                    .map(|s| s * s)
                    .collect()
            };
            let mut block = 0.0;
            for &l in &lambdas {
                out.s_e += xlnx_neg(l);
                block += xlnx_neg(l / p);
            }
            out.s_n += xlnx_neg(p);
            out.s_c += p * block;
        }
        out
    }

    /// Entropies of a real state (an eigenvector column).
    pub fn entropies_real(&self, state: &[f64]) -> Entropies {
        let c: Vec<Complex64> = state.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.entropies(&c)
    }
}

/// One-shot decomposition `(S_E, S_N, S_C)` across `cut`.
pub fn entropy_decomposition(state: &[Complex64], basis: &HalfFillingBasis, cut: usize) -> Result<Entropies> {
    Ok(CutMap::new(basis, cut)?.entropies(state))
}

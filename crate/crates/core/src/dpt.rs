//! Degenerate perturbation theory in the hopping `w / J` inside one tower.
//!
//! With `P` the tower projector, `X` the states one exchange away from the
//! tower and `e_x = E_x - E_0`, the standard Schrieffer-Wolff series reads
//!
//! ```text
//! H[0] = E_0 P
//! H[1] = P H_pm P
//! H[2] = - sum_x V_0x V_x0 / e_x
//! H[3] =   sum_{x,x'} V_0x V_xx' V_x'0 / (e_x e_x')
//!        - 1/2 sum_x (H[1] V_0x V_x0 + V_0x V_x0 H[1]) / e_x^2
//! ```

use std::collections::{BTreeMap, HashMap};

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::HalfFillingBasis;
use crate::dynamics::Evolver;
use crate::entanglement::CutMap;
use crate::error::{Error, Result};
use crate::fragmentation::Tower;
use crate::model::{staggered_values, SectorHamiltonian};
use crate::spectral::SpectralDecomposition;

/// Which closed form to use for the second- and third-order terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DptConvention {
    /// Schrieffer-Wolff series as in the module docs.
    #[default]
    Standard,
    /// Literal transcription of the published expressions:
    /// `H[2] = + sum_a T_0a T_a0 / (E_a - E_0)` and a cross-tower weight
    /// `Delta_ab = 3 / ((E_a - E_0)(E_b - E_0))`.
    AsPrinted,
}

/// One entry of a hopping block: `<to| H_pm |from>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TEntry {
    pub to: u32,
    pub from: u32,
    pub amplitude: f64,
}

/// `T_{a -> b} = P_b H_pm P_a`, keyed by `(a, b)` tower labels.
#[derive(Debug, Clone, Default)]
pub struct TBlocks {
    pub blocks: BTreeMap<(i64, i64), Vec<TEntry>>,
}

impl TBlocks {
    pub fn block(&self, from: i64, to: i64) -> &[TEntry] {
        self.blocks.get(&(from, to)).map_or(&[], |v| v.as_slice())
    }

    pub fn entries(&self) -> usize {
        self.blocks.values().map(|v| v.len()).sum()
    }
}

fn units_of(h: &SectorHamiltonian) -> Result<&[i64]> {
    h.diag_units
        .as_deref()
        .ok_or(Error::NoTowerLabels("perturbation theory needs exact integer diagonal labels"))
}

/// All hopping blocks between towers of a sector.
pub fn build_t_blocks(h: &SectorHamiltonian) -> Result<TBlocks> {
    let u = units_of(h)?;
    let mut t = TBlocks::default();
    for hop in &h.hops {
        let (ua, ub) = (u[hop.a as usize], u[hop.b as usize]);
        t.blocks.entry((ua, ub)).or_default().push(TEntry {
            to: hop.b,
            from: hop.a,
            amplitude: hop.amplitude,
        });
        t.blocks.entry((ub, ua)).or_default().push(TEntry {
            to: hop.a,
            from: hop.b,
            amplitude: hop.amplitude,
        });
    }
    for v in t.blocks.values_mut() {
        v.sort_by_key(|e| (e.from, e.to));
    }
    Ok(t)
}

/// Cumulative effective Hamiltonian on one tower.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub order: usize,
    pub tower_label: i64,
    /// Basis indices of the tower (row/column order of the matrices).
    pub states: Vec<u32>,
    /// `H[0] + ... + H[order]`.
    pub matrix: Mat<f64>,
    /// Individual orders `H[0] ..= H[order]`.
    pub terms: Vec<Mat<f64>>,
    /// Distinct `(E_a - E_0) / J` of the intermediate towers.
    pub energy_denominators_used: Vec<f64>,
    /// `max |M - M^T|` of the third-order term before symmetrization.
    pub hermiticity_residual: f64,
    pub convention: DptConvention,
}

fn adjacency(h: &SectorHamiltonian) -> Vec<Vec<(u32, f64)>> {
    let mut adj = vec![Vec::new(); h.dim()];
    for hop in &h.hops {
        adj[hop.a as usize].push((hop.b, hop.amplitude));
        adj[hop.b as usize].push((hop.a, hop.amplitude));
    }
    adj
}

/// Effective Hamiltonian of `tower` through `order` (at most 3).
pub fn build_effective(
    h: &SectorHamiltonian,
    tower: &Tower,
    order: usize,
    convention: DptConvention,
) -> Result<EffectiveHamiltonian> {
    if order > 3 {
        return Err(Error::Config(format!("perturbation order must be at most 3, got {order}")));
    }
    let u = units_of(h)?;
    let j = h.schwinger_params().map_or(0.0, |p| p.j);
    let d0 = tower.states.len();
    let local: HashMap<u32, usize> = tower.states.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    let e0 = h.diag[tower.states[0] as usize];
    let adj = adjacency(h);

    let mut terms = vec![Mat::<f64>::from_fn(d0, d0, |r, c| if r == c { e0 } else { 0.0 })];
    let mut t00 = Mat::<f64>::zeros(d0, d0);
    for (k, &s) in tower.states.iter().enumerate() {
        for &(nb, a) in &adj[s as usize] {
            if let Some(&l) = local.get(&nb) {
                t00[(l, k)] += a;
            }
        }
    }
    let mut denominators = Vec::new();
    let mut residual = 0.0;
    if order >= 1 {
        terms.push(t00.clone());
    }
    if order >= 2 {
        // Intermediate states one exchange outside the tower.
        let mut xs: Vec<u32> = Vec::new();
        let mut xi: HashMap<u32, usize> = HashMap::new();
        for &s in &tower.states {
            for &(nb, _) in &adj[s as usize] {
                if !local.contains_key(&nb) && !xi.contains_key(&nb) {
                    xi.insert(nb, xs.len());
                    xs.push(nb);
                }
            }
        }
        let nx = xs.len();
        let mut e = Vec::with_capacity(nx);
        for &x in &xs {
            let du = u[x as usize] - tower.label;
            let ex = 0.5 * j * du as f64;
            if ex == 0.0 {
                return Err(Error::ZeroDenominator {
                    a: tower.label,
                    b: u[x as usize],
                });
            }
            e.push(ex);
            let r = du as f64 / 2.0;
            if !denominators.contains(&r) {
                denominators.push(r);
            }
        }
        denominators.sort_by(|a: &f64, b| a.total_cmp(b));
        // A[x, i] = <x|H_pm|i>.
        let mut a = Mat::<f64>::zeros(nx, d0);
        for (k, &s) in tower.states.iter().enumerate() {
            for &(nb, amp) in &adj[s as usize] {
                if let Some(&x) = xi.get(&nb) {
                    a[(x, k)] += amp;
                }
            }
        }
        let sign = match convention {
            DptConvention::Standard => -1.0,
            DptConvention::AsPrinted => 1.0,
        };
        let da = Mat::<f64>::from_fn(nx, d0, |x, k| a[(x, k)] / e[x]);
        let h2 = a.transpose() * &da * sign;
        terms.push(h2);

        if order >= 3 {
            let cross = match convention {
                DptConvention::Standard => 1.0,
                DptConvention::AsPrinted => 3.0,
            };
            let mut b = Mat::<f64>::zeros(nx, nx);
            for (p, &x) in xs.iter().enumerate() {
                for &(nb, amp) in &adj[x as usize] {
                    if let Some(&q) = xi.get(&nb) {
                        let w = if u[x as usize] == u[nb as usize] { 1.0 } else { cross };
                        b[(q, p)] += amp * w;
                    }
                }
            }
            let first = da.transpose() * (&b * &da);
            let d2a = Mat::<f64>::from_fn(nx, d0, |x, k| a[(x, k)] / (e[x] * e[x]));
            let g = a.transpose() * &d2a;
            let second = (&t00 * &g + &g * &t00) * 0.5;
            let mut h3 = first - second;
            for c in 0..d0 {
                for r in 0..c {
                    let (x, y) = (h3[(r, c)], h3[(c, r)]);
                    residual = f64::max(residual, (x - y).abs());
                    let m = 0.5 * (x + y);
                    h3[(r, c)] = m;
                    h3[(c, r)] = m;
                }
            }
            terms.push(h3);
        }
    }
    let mut matrix = Mat::<f64>::zeros(d0, d0);
    for t in &terms {
        matrix += t;
    }
    Ok(EffectiveHamiltonian {
        order,
        tower_label: tower.label,
        states: tower.states.clone(),
        matrix,
        terms,
        energy_denominators_used: denominators,
        hermiticity_residual: residual,
        convention,
    })
}

impl EffectiveHamiltonian {
    /// Eigendecomposition packaged for [`Evolver`].
    pub fn spectrum(&self) -> Result<SpectralDecomposition> {
        let evd = self
            .matrix
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::Eigensolver { seed: 0 })?;
        let s = evd.S().column_vector();
        Ok(SpectralDecomposition {
            energies: (0..self.states.len()).map(|i| s[i]).collect(),
            vectors: evd.U().to_owned(),
            seed: 0,
        })
    }

    /// Restricts a full-basis state to the tower.
    pub fn project(&self, full: &[Complex64]) -> Vec<Complex64> {
        self.states.iter().map(|&s| full[s as usize]).collect()
    }

    /// Embeds a tower state into the full basis.
    pub fn embed(&self, local: &[Complex64], dim: usize) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        for (&s, &c) in self.states.iter().zip(local) {
            v[s as usize] = c;
        }
        v
    }
}

/// Tower-local states under `H_eff` at each time.
pub fn evolve_dpt(h_eff: &EffectiveHamiltonian, initial: &[Complex64], times: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    let spec = h_eff.spectrum()?;
    Evolver::new(&spec, initial)?.states_at(times)
}

/// Full evolution followed by projection onto the tower, without
/// renormalization.
pub fn evolve_dpt_infinite(
    spec: &SpectralDecomposition,
    tower: &Tower,
    initial: &[Complex64],
    times: &[f64],
) -> Result<Vec<Vec<Complex64>>> {
    let states = Evolver::new(spec, initial)?.states_at(times)?;
    Ok(states
        .into_iter()
        .map(|psi| tower.states.iter().map(|&s| psi[s as usize]).collect())
        .collect())
}

/// Observables of one evolution method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DptTrace {
    /// `"1"`, `"2"`, `"3"`, `"inf"` or `"full"`.
    pub label: String,
    /// `<psi|mu|psi>` on the (possibly sub-normalized) state.
    pub mu: Vec<f64>,
    /// Entanglement entropy of the normalized state.
    pub s_e: Vec<f64>,
    /// Squared norm of the state.
    pub norm: Vec<f64>,
}

/// Compares DPT orders, DPT(inf) and full evolution from one basis state.
#[allow(clippy::too_many_arguments)]
pub fn dpt_compare(
    h: &SectorHamiltonian,
    spec: &SpectralDecomposition,
    basis: &HalfFillingBasis,
    initial_index: usize,
    orders: &[usize],
    times: &[f64],
    cut: usize,
    convention: DptConvention,
) -> Result<Vec<DptTrace>> {
    let map = CutMap::new(basis, cut)?;
    let stag = staggered_values(basis);
    let tower = crate::fragmentation::tower_of(h, initial_index)?;
    let d = basis.dim();
    let observe = |label: String, states: Vec<Vec<Complex64>>| -> DptTrace {
        let mut t = DptTrace {
            label,
            mu: Vec::with_capacity(states.len()),
            s_e: Vec::with_capacity(states.len()),
            norm: Vec::with_capacity(states.len()),
        };
        for psi in &states {
            let p: Vec<f64> = psi.iter().map(|c| c.norm_sqr()).collect();
            t.mu.push(p.iter().zip(&stag).map(|(p, m)| p * m).sum());
            t.norm.push(p.iter().sum());
            t.s_e.push(map.entropies(psi).s_e);
        }
        t
    };
    let mut out = Vec::new();
    for &n in orders {
        let eff = build_effective(h, &tower, n, convention)?;
        let mut local = vec![Complex64::new(0.0, 0.0); tower.states.len()];
        let k = tower.states.binary_search(&(initial_index as u32)).expect("state lies in its tower");
        local[k] = Complex64::new(1.0, 0.0);
        let states = evolve_dpt(&eff, &local, times)?;
        out.push(observe(n.to_string(), states.iter().map(|l| eff.embed(l, d)).collect()));
    }
    let psi0 = crate::dynamics::basis_state(basis, initial_index);
    let full = Evolver::new(spec, &psi0)?.states_at(times)?;
    let inf: Vec<Vec<Complex64>> = full
        .iter()
        .map(|psi| {
            let mut v = vec![Complex64::new(0.0, 0.0); d];
            for &s in &tower.states {
                v[s as usize] = psi[s as usize];
            }
            v
        })
        .collect();
    out.push(observe("inf".into(), inf));
    out.push(observe("full".into(), full));
    Ok(out)
}

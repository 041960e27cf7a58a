//! Acceptance suite. Each criterion prints one `PASS` / `FAIL` line to the
//! real stdout (not the captured test output) and then asserts.
//!
//! The fast criteria run with `cargo test`; the long ones are `#[ignore]`d
//! and run with `cargo test --release -p schwinger-cli --test acceptance -- --ignored`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use num_bigint::BigInt;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use schwinger_cli::config::{self, Overrides, Task};
use schwinger_cli::{Execution, ExperimentConfig};
use schwinger_core::basis::SpinConfig;
use schwinger_core::dynamics::{basis_state, Evolver};
use schwinger_core::fragmentation::{hop_delta_units, towers};
use schwinger_core::numeric::{mean, std_dev};
use schwinger_core::rmt::goe_levels;
use schwinger_core::spectral::sff::log_slope_at;
use schwinger_core::spectral::{
    connected_sff, default_window, eigenstate_entropy_stats, k_goe, log_tau_grid, r_statistic,
    thouless_parameter, unfold,
};
use schwinger_core::{
    build_hamiltonian, decompose_tower, diagonalize, dpt_compare, eigenvalues, enumerate_basis, is_resonant, quench,
    sample_charge_sectors, ChargeSector, Complex64, DptConvention, HalfFillingBasis, ModelParams, SectorHamiltonian,
    TimeGrid,
};

fn report(id: u32, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "acceptance criterion {id:>2}: {verdict} | {detail}");
    let _ = out.flush();
}

fn finish(id: u32, pass: bool, detail: String) {
    report(id, pass, &detail);
    assert!(pass, "criterion {id}: {detail}");
}

fn sector_h(n: usize, j: f64, sector: &ChargeSector, basis: &HalfFillingBasis) -> SectorHamiltonian {
    build_hamiltonian(&ModelParams::new(n, j), sector, basis).expect("valid model")
}

/// Sector-mean `<r>` and its standard error at one `(N, J)`.
fn rstat_point(n: usize, j: f64, count: usize, seed: u64) -> (f64, f64) {
    let basis = enumerate_basis(n).unwrap();
    let sectors = sample_charge_sectors(n, count, seed);
    let r: Vec<f64> = sectors
        .par_iter()
        .map(|s| {
            let e = eigenvalues(&sector_h(n, j, s, &basis)).unwrap();
            r_statistic(&e, default_window(e.len())).mean_r
        })
        .collect();
    let r: Vec<f64> = r.into_iter().filter(|x| x.is_finite()).collect();
    (mean(&r), std_dev(&r) / (r.len() as f64).sqrt())
}

#[test]
#[ignore = "hours: N=14 over 300 sectors at three couplings"]
fn criterion_01_level_statistics_crossover() {
    let (r_small, e_small) = rstat_point(14, 0.1, 300, 1);
    let (r_mid, e_mid) = rstat_point(14, 1.5, 300, 1);
    let (r_big, e_big) = rstat_point(14, 5.0, 300, 1);
    let pass = r_small >= 0.50 - 0.02 && r_mid <= 0.40 + 0.02 && r_big < 0.386;
    finish(
        1,
        pass,
        format!(
            "N=14, 300 sectors: r(J=0.1) = {r_small:.4} +- {e_small:.4} (>= 0.48), r(J=1.5) = {r_mid:.4} +- {e_mid:.4} (<= 0.42), r(J=5) = {r_big:.4} +- {e_big:.4} (< 0.386)"
        ),
    );
}

#[test]
#[ignore = "tens of minutes: N up to 14 at J=5"]
fn criterion_02_sub_poisson_trend() {
    let plan = [(8, 1000), (10, 1000), (12, 500), (14, 200)];
    let pts: Vec<(usize, f64, f64)> = plan
        .iter()
        .map(|&(n, c)| {
            let (r, e) = rstat_point(n, 5.0, c, 2);
            (n, r, e)
        })
        .collect();
    let mut inversions = 0;
    let mut within_errors = true;
    for w in pts.windows(2) {
        if w[1].1 < w[0].1 {
            inversions += 1;
            within_errors &= w[0].1 - w[1].1 <= w[0].2 + w[1].2;
        }
    }
    let pass = inversions == 0 || (inversions == 1 && within_errors);
    let text: Vec<String> = pts.iter().map(|(n, r, e)| format!("N={n}: {r:.4}+-{e:.4}")).collect();
    finish(2, pass, format!("J=5 sector-mean r: {}; {inversions} inversion(s)", text.join(", ")));
}

/// Autocorrelation of a mean-subtracted sequence, normalized to 1 at lag 0.
fn acf(c: &[f64]) -> Vec<f64> {
    let m = mean(c);
    let c: Vec<f64> = c.iter().map(|x| x - m).collect();
    let a: Vec<f64> = (0..c.len() / 2)
        .map(|l| (0..c.len() - l).map(|i| c[i] * c[i + l]).sum())
        .collect();
    a.iter().map(|x| x / a[0]).collect()
}

/// Lag of the largest autocorrelation after the central lobe.
fn dominant_lag(a: &[f64]) -> Option<usize> {
    let start = a.iter().position(|&x| x <= 0.0)?;
    let (lag, &v) = a.iter().enumerate().skip(start).max_by(|x, y| x.1.total_cmp(y.1))?;
    (v > 0.0).then_some(lag)
}

fn histogram(values: &[f64], lo: f64, hi: f64, bw: f64) -> Vec<f64> {
    let nb = ((hi - lo) / bw).ceil() as usize;
    let mut h = vec![0.0; nb];
    for &v in values {
        if (lo..hi).contains(&v) {
            h[(((v - lo) / bw) as usize).min(nb - 1)] += 1.0;
        }
    }
    h
}

#[test]
fn criterion_03_dos_stratification() {
    let (n, j, count, bw) = (14, 5.0, 8, 0.05);
    let basis = enumerate_basis(n).unwrap();
    let sectors = sample_charge_sectors(n, count, 3);
    let per: Vec<(Vec<f64>, Vec<f64>)> = sectors
        .par_iter()
        .map(|s| {
            let h = sector_h(n, j, s, &basis);
            let e = eigenvalues(&h).unwrap();
            let scaled: Vec<f64> = e.iter().map(|x| x / j).collect();
            let lo = scaled[0];
            let hi = scaled[scaled.len() - 1] + bw;
            let mut levels: Vec<f64> = h.diag.clone();
            levels.sort_by(|a, b| a.total_cmp(b));
            levels.dedup();
            // Offset from the nearest unperturbed tower, in units of w = 1.
            let offsets = e
                .iter()
                .map(|x| {
                    let k = levels.partition_point(|l| l < x);
                    let near = [k.saturating_sub(1), k.min(levels.len() - 1)]
                        .into_iter()
                        .map(|i| levels[i])
                        .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
                        .unwrap();
                    x - near
                })
                .collect();
            (acf(&histogram(&scaled, lo, hi, bw)), offsets)
        })
        .collect();

    // Tower offsets differ between sectors, so the sector average is taken
    // over autocorrelations rather than histograms.
    let len = per.iter().map(|p| p.0.len()).min().unwrap();
    let avg: Vec<f64> = (0..len).map(|l| mean(&per.iter().map(|p| p.0[l]).collect::<Vec<_>>())).collect();
    let tower = dominant_lag(&avg).map_or(f64::NAN, |l| l as f64 * bw);
    let single: Vec<f64> = per.iter().map(|p| dominant_lag(&p.0).map_or(f64::NAN, |l| l as f64 * bw)).collect();

    // Within a tower the offsets sit on a broad envelope; subtract a
    // Gaussian-smoothed copy (sigma = w / 2) before correlating.
    let offsets: Vec<f64> = per.iter().flat_map(|p| p.1.iter().cloned()).collect();
    let h = histogram(&offsets, -4.0, 4.0, bw);
    let sigma = 0.5 / bw;
    let smooth: Vec<f64> = (0..h.len())
        .map(|i| {
            let (mut num, mut den) = (0.0, 0.0);
            for (k, &c) in h.iter().enumerate() {
                let g = (-((k as f64 - i as f64) / sigma).powi(2) / 2.0).exp();
                num += g * c;
                den += g;
            }
            num / den
        })
        .collect();
    let resid: Vec<f64> = h.iter().zip(&smooth).map(|(a, b)| a - b).collect();
    let inner = dominant_lag(&acf(&resid)).map_or(f64::NAN, |l| l as f64 * bw);

    let pass = (tower - 2.0).abs() <= 0.1 && (inner - 1.0).abs() <= 0.15;
    finish(
        3,
        pass,
        format!(
            "N=14, J=5, {count} sectors: sector-averaged E/J autocorrelation peaks at lag {tower:.2} (2 +- 0.1; single sectors {single:?}); within-tower offsets repeat every {inner:.2} w (1 +- 0.15)"
        ),
    );
}

/// Diagonal energy in units of `J/2` at `m = 0`, `theta = pi`, straight from
/// the three terms of the Hamiltonian.
fn brute_diag_units(s: SpinConfig, q: &[i8]) -> i64 {
    let n = q.len();
    let sz = |k: usize| s.sigma(k);
    let mut e = 0i64;
    for j in 1..=n.saturating_sub(2) {
        for k in j + 1..=n - 1 {
            e += (n - k) as i64 * sz(j) * sz(k);
        }
    }
    for k in 1..=n {
        let mut field = (n - k) as i64 - ((n - k) as i64 + 1) / 2;
        for jj in k..=n - 1 {
            let p: i64 = q[..jj].iter().map(|&x| x as i64).sum();
            field += 2 * p;
        }
        e += field * sz(k);
    }
    e
}

#[test]
fn criterion_04_resonance_condition_oracle() {
    let n = 6;
    let basis = enumerate_basis(n).unwrap();
    let sectors = sample_charge_sectors(n, 100, 4);
    let mut checked = 0usize;
    let mut bad = Vec::new();
    for sec in &sectors {
        let h = sector_h(n, 1.0, sec, &basis);
        let units = h.diag_units.as_ref().unwrap();
        for (i, &s) in basis.states().iter().enumerate() {
            if units[i] != brute_diag_units(s, &sec.q) {
                bad.push(format!("diag of {} in sector {}", s.to_string_n(n), sec.seed));
            }
            for l in 1..n {
                if !s.is_antialigned(l) {
                    continue;
                }
                let t = s.exchanged(l);
                let delta = brute_diag_units(t, &sec.q) - brute_diag_units(s, &sec.q);
                let lhs: i64 =
                    (1..l).map(|j| s.sigma(j)).sum::<i64>() + 2 * sec.q[..l].iter().map(|&x| x as i64).sum::<i64>();
                let rhs = (l % 2) as i64 - 1;
                // Raising sigma_l costs J (lhs - rhs); lowering it the opposite.
                let sign = if s.is_up(l) { -1 } else { 1 };
                let expected = 2 * sign * (lhs - rhs);
                let lib = hop_delta_units(s, l, sec, 1).unwrap();
                let res = is_resonant(s, l, sec, PI).unwrap();
                if delta != expected || lib != expected || res != (lhs == rhs) {
                    bad.push(format!("bond {l} of {} in sector {}", s.to_string_n(n), sec.seed));
                }
                checked += 1;
            }
        }
    }
    finish(
        4,
        bad.is_empty(),
        format!("N=6, 100 sectors: {checked} (config, bond) exchanges, {} mismatches {:?}", bad.len(), &bad[..bad.len().min(3)]),
    );
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

#[test]
fn criterion_05_fragmentation_blocks() {
    let n = 10;
    let basis = enumerate_basis(n).unwrap();
    let sectors = sample_charge_sectors(n, 20, 5);
    let (mut towers_seen, mut blocks, mut factored) = (0usize, 0usize, 0usize);
    let mut bad = Vec::new();
    for sec in &sectors {
        let h = sector_h(n, 5.0, sec, &basis);
        let units = h.diag_units.as_ref().unwrap();
        let d = basis.dim();
        let mut parent: Vec<usize> = (0..d).collect();
        for hop in &h.hops {
            let (a, b) = (hop.a as usize, hop.b as usize);
            if units[a] == units[b] {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
        for tower in towers(&h).unwrap() {
            towers_seen += 1;
            let k = decompose_tower(&h, &basis, &tower).unwrap();
            let mut block_of: HashMap<u32, usize> = HashMap::new();
            for (bi, sub) in k.subspaces.iter().enumerate() {
                blocks += 1;
                for &s in &sub.states {
                    if block_of.insert(s, bi).is_some() {
                        bad.push(format!("state {s} in two blocks"));
                    }
                }
                if let Some(f) = &sub.factor_dims {
                    factored += 1;
                    if f.iter().product::<usize>() != sub.dim() {
                        bad.push(format!("factor dims {f:?} vs block {}", sub.dim()));
                    }
                }
            }
            if block_of.len() != tower.states.len() || tower.states.iter().any(|s| !block_of.contains_key(s)) {
                bad.push(format!("tower {} not partitioned", tower.label));
            }
            // Off-block matrix elements of the projected hopping must vanish.
            for hop in &h.hops {
                if let (Some(x), Some(y)) = (block_of.get(&hop.a), block_of.get(&hop.b)) {
                    if x != y {
                        bad.push(format!("hop {}-{} joins blocks {x} and {y}", hop.a, hop.b));
                    }
                }
            }
            // Each block is one connected component of the in-tower hops.
            for sub in &k.subspaces {
                let r0 = find(&mut parent, sub.states[0] as usize);
                if sub.states.iter().any(|&s| find(&mut parent, s as usize) != r0) {
                    bad.push("block is not connected".into());
                }
            }
        }
    }
    finish(
        5,
        bad.is_empty(),
        format!(
            "N=10, 20 sectors: {towers_seen} towers, {blocks} blocks ({factored} factorized), {} violations {:?}",
            bad.len(),
            &bad[..bad.len().min(3)]
        ),
    );
}

fn identity_residual(n: usize, j: f64, seed: u64, grid: &TimeGrid) -> f64 {
    let basis = enumerate_basis(n).unwrap();
    let sec = ChargeSector::sample(n, seed);
    let h = sector_h(n, j, &sec, &basis);
    let spec = diagonalize(&h).unwrap();
    let psi = basis_state(&basis, basis.vacuum_index());
    let s = quench(&spec, &basis, &psi, &grid.points, n / 2).unwrap();
    (0..s.times.len())
        .map(|i| (s.s_e[i] - s.s_n[i] - s.s_c[i]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_06_entropy_identity() {
    let grid = TimeGrid::default();
    let fixed: Vec<f64> = (0..6u64).into_par_iter().map(|s| identity_residual(10, 5.0, s, &grid)).collect();
    let worst_fixed = fixed.iter().cloned().fold(0.0, f64::max);

    let coarse = TimeGrid::new(0.1, 1e12, 4).unwrap();
    let mut runner = TestRunner::new(PropConfig {
        cases: 24,
        ..PropConfig::default()
    });
    let worst_prop = std::cell::Cell::new(0.0f64);
    let prop = runner.run(
        &(prop::sample::select(vec![4usize, 6, 8]), 0.0f64..12.0, any::<u64>()),
        |(n, j, seed)| {
            let r = identity_residual(n, j, seed, &coarse);
            worst_prop.set(worst_prop.get().max(r));
            prop_assert!(r < 1e-10, "residual {} at N={} J={} seed {}", r, n, j, seed);
            Ok(())
        },
    );
    let pass = worst_fixed < 1e-10 && prop.is_ok();
    finish(
        6,
        pass,
        format!(
            "max |S_E - S_N - S_C| = {worst_fixed:.2e} over 6 N=10 sectors x {} times; {:.2e} over 24 random (N, J, sector) cases{}",
            grid.len(),
            worst_prop.get(),
            prop.err().map(|e| format!(" ({e})")).unwrap_or_default()
        ),
    );
}

/// First time at which `delta` reaches `level`, interpolated in log time.
fn first_crossing(times: &[f64], delta: &[f64], level: f64) -> Option<f64> {
    let i = delta.iter().position(|&d| d >= level)?;
    if i == 0 {
        return Some(times[0]);
    }
    let (t0, t1) = (times[i - 1].ln(), times[i].ln());
    let f = (level - delta[i - 1]) / (delta[i] - delta[i - 1]);
    Some((t0 + f * (t1 - t0)).exp())
}

#[test]
#[ignore = "tens of minutes: 256 sectors at N=12"]
fn criterion_07_dpt_hierarchy() {
    let (n, j, count) = (12, 10.0, 256);
    let basis = enumerate_basis(n).unwrap();
    let grid = TimeGrid::new(0.1, 1e8, 20).unwrap();
    let sectors = sample_charge_sectors(n, count, 7);
    let traces: Vec<BTreeMap<String, Vec<f64>>> = sectors
        .par_iter()
        .map(|s| {
            let h = sector_h(n, j, s, &basis);
            let spec = diagonalize(&h).unwrap();
            dpt_compare(&h, &spec, &basis, basis.vacuum_index(), &[1, 2, 3], &grid.points, n / 2, DptConvention::Standard)
                .unwrap()
                .into_iter()
                .map(|t| (t.label, t.s_e))
                .collect()
        })
        .collect();
    let avg = |label: &str| -> Vec<f64> {
        (0..grid.len())
            .map(|i| mean(&traces.iter().map(|t| t[label][i]).collect::<Vec<_>>()))
            .collect()
    };
    let inf = avg("inf");
    let t: Vec<Option<f64>> = ["1", "2", "3"]
        .iter()
        .map(|l| {
            let d: Vec<f64> = avg(l).iter().zip(&inf).map(|(a, b)| (a - b).abs()).collect();
            first_crossing(&grid.points, &d, 0.05)
        })
        .collect();
    let ratio = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => b / a,
        _ => f64::NAN,
    };
    let (r21, r32) = (ratio(t[0], t[1]), ratio(t[1], t[2]));
    let ok = |r: f64| (j..=4.0 * j).contains(&r);
    finish(
        7,
        ok(r21) && ok(r32),
        format!("N=12, J=10, {count} sectors: t_1, t_2, t_3 = {t:?}; t_2/t_1 = {r21:.2}, t_3/t_2 = {r32:.2} (each in [10, 40])"),
    );
}

fn jumps_config(n: usize, j: f64, sectors: usize, out: &Path) -> ExperimentConfig {
    let ov = Overrides {
        task: Some(Task::Jumps),
        n: Some(vec![n]),
        j: Some(vec![j]),
        sectors: Some(sectors),
        seed: Some(8),
        tmax: Some(1e12),
        out: Some(out.to_path_buf()),
        ..Overrides::default()
    };
    config::resolve(None, &ov).unwrap().0
}

/// `(alpha, alpha_err)` per fit method from a jumps run.
fn jump_alphas(n: usize, j: f64, sectors: usize) -> HashMap<String, (f64, f64)> {
    let dir = tempfile::tempdir().unwrap();
    let cfg = jumps_config(n, j, sectors, dir.path());
    schwinger_cli::run(&cfg, &Execution::default()).unwrap();
    let text = fs::read_to_string(dir.path().join("alpha.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[2].to_string(), (c[3].parse().unwrap(), c[4].parse().unwrap()))
        })
        .collect()
}

#[test]
#[ignore = "days: N=16 quenches over 500 sectors"]
fn criterion_08_jump_exponent() {
    let a = jump_alphas(16, 5.0, 500);
    let (h, he) = a["histogram"];
    let (e, ee) = a["entropy_fit"];
    let near_reference = (h - 0.019).abs() <= 2.0 * (he * he + 0.015 * 0.015).sqrt();
    let agree = (h - e).abs() <= (he * he + ee * ee).sqrt();
    finish(
        8,
        near_reference && agree,
        format!("N=16, J=5, 500 sectors: histogram alpha = {h:.4} +- {he:.4} (0.019 +- 0.015 within 2 sigma), entropy fit alpha = {e:.4} +- {ee:.4}"),
    );
}

/// Non-increasing up to the joint error of each consecutive pair.
fn decreasing_within_errors(v: &[(f64, f64)]) -> bool {
    v.windows(2).all(|w| w[1].0 <= w[0].0 + (w[0].1 * w[0].1 + w[1].1 * w[1].1).sqrt())
}

#[test]
#[ignore = "days: N=16 quenches at six couplings"]
fn criterion_09_alpha_trends() {
    let by_n: Vec<(f64, f64)> = [8, 10, 12, 14, 16].iter().map(|&n| jump_alphas(n, 5.0, 500)["histogram"]).collect();
    let by_j: Vec<(f64, f64)> = [3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
        .iter()
        .map(|&j| jump_alphas(16, j, 500)["histogram"])
        .collect();
    let pass = decreasing_within_errors(&by_n) && decreasing_within_errors(&by_j);
    finish(9, pass, format!("alpha(N) at J=5: {by_n:?}; alpha(J) at N=16: {by_j:?}"));
}

/// Sector averages of the per-sector mean and std of eigenstate `S_E`.
fn eigentropy_point(n: usize, j: f64, count: usize) -> (f64, f64) {
    let basis = enumerate_basis(n).unwrap();
    let stats: Vec<(f64, f64)> = sample_charge_sectors(n, count, 10)
        .par_iter()
        .map(|s| {
            let spec = diagonalize(&sector_h(n, j, s, &basis)).unwrap();
            let st = eigenstate_entropy_stats(&spec, &basis, n / 2, 1.0 / 3.0).unwrap();
            (st.mean, st.std)
        })
        .collect();
    (
        mean(&stats.iter().map(|s| s.0).collect::<Vec<_>>()),
        mean(&stats.iter().map(|s| s.1).collect::<Vec<_>>()),
    )
}

/// Coupling where `a - b` changes sign, interpolated linearly.
fn sign_change(js: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let i = (1..d.len()).find(|&i| d[i - 1].signum() != d[i].signum())?;
    Some(js[i - 1] + (js[i] - js[i - 1]) * d[i - 1] / (d[i - 1] - d[i]))
}

#[test]
#[ignore = "hours: 500 sectors over a coupling sweep up to N=12"]
fn criterion_10_eigenstate_entropy_transition() {
    let js = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0, 2.5, 3.0];
    let curves: Vec<(usize, Vec<f64>, Vec<f64>)> = [8usize, 10, 12]
        .iter()
        .map(|&n| {
            let pts: Vec<(f64, f64)> = js.iter().map(|&j| eigentropy_point(n, j, 500)).collect();
            (n, pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect())
        })
        .collect();
    let mut pass = true;
    let mut text = Vec::new();
    for (n, _, std) in &curves {
        let (i, _) = std.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        pass &= (0.4..=0.9).contains(&js[i]);
        text.push(format!("std peak N={n} at J={}", js[i]));
    }
    for w in curves.windows(2) {
        let c = sign_change(&js, &w[1].1, &w[0].1);
        pass &= c.is_some_and(|c| (0.8..=1.6).contains(&c));
        text.push(format!("mean curves N={},{} cross at J={c:?}", w[0].0, w[1].0));
    }
    finish(10, pass, format!("500 sectors: {}", text.join("; ")));
}

/// Largest relative deviation of the smoothed form factor from GOE on
/// `tau in [0.1, 1]`.
fn goe_deviation(spectra: &[Vec<f64>], taus: &[f64]) -> f64 {
    let r = connected_sff(spectra, taus).unwrap();
    taus.iter()
        .zip(&r.k_c_smoothed)
        .filter(|(t, _)| (0.1..=1.0).contains(*t))
        .map(|(t, k)| (k / k_goe(*t) - 1.0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_11_sff_goe_sanity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spectra: Vec<Vec<f64>> = (0..2000).map(|_| unfold(&goe_levels(500, &mut rng), 6).unwrap()).collect();
    // The sampling grid of the sff task.
    let taus = log_tau_grid(1e-4, 10.0, 20);
    // A single 200-matrix ensemble carries about 5% noise per point, so ten
    // independent ensembles are scored and the typical one is judged.
    let mut each: Vec<f64> = spectra.chunks(200).map(|c| goe_deviation(c, &taus)).collect();
    let listed: Vec<String> = each.iter().map(|d| format!("{d:.3}")).collect();
    each.sort_by(|a, b| a.total_cmp(b));
    let median = 0.5 * (each[4] + each[5]);
    let pooled = goe_deviation(&spectra, &taus);
    finish(
        11,
        median <= 0.10 && pooled <= 0.10,
        format!(
            "GOE D=500: max relative deviation on [0.1, 1] per 200-matrix ensemble [{}], median {median:.3} (<= 0.10); all 2000 matrices {pooled:.3} (<= 0.10)",
            listed.join(", ")
        ),
    );
}

fn schwinger_sff(n: usize, j: f64, count: usize) -> (schwinger_core::spectral::SffResult, usize) {
    let basis = enumerate_basis(n).unwrap();
    let unfolded: Vec<Option<Vec<f64>>> = sample_charge_sectors(n, count, 11)
        .par_iter()
        .map(|s| unfold(&eigenvalues(&sector_h(n, j, s, &basis)).unwrap(), 6).ok())
        .collect();
    let ok: Vec<Vec<f64>> = unfolded.into_iter().flatten().collect();
    let used = ok.len();
    (connected_sff(&ok, &log_tau_grid(1e-4, 10.0, 20)).unwrap(), used)
}

#[test]
#[ignore = "tens of minutes: N=14 spectra at two couplings"]
fn criterion_11_sff_schwinger_plateaus() {
    let (strong, used_s) = schwinger_sff(14, 5.0, 100);
    let (weak, used_w) = schwinger_sff(14, 0.1, 100);
    let slopes = [log_slope_at(&strong, 1.0 / 100.0), log_slope_at(&strong, 1.0 / 1000.0)];
    let pass = strong.tau_goe >= 1.0 && slopes.iter().all(|s| *s < 0.5) && weak.tau_goe < 0.3;
    finish(
        11,
        pass,
        format!(
            "N=14: J=5 ({used_s} sectors) tau_GOE = {:.3} (>= 1), log slopes at (2J)^-2, (2J)^-3 = {:.3}, {:.3} (< 0.5); J=0.1 ({used_w} sectors) tau_GOE = {:.3} (< 0.3)",
            strong.tau_goe, slopes[0], slopes[1], weak.tau_goe
        ),
    );
}

fn thouless_slope(j: f64, count: usize) -> (f64, Vec<f64>) {
    let ns = [8usize, 10, 12];
    let g: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let basis = enumerate_basis(n).unwrap();
            let v: Vec<f64> = sample_charge_sectors(n, count, 12)
                .par_iter()
                .map(|s| {
                    let h = sector_h(n, j, s, &basis);
                    let spec = diagonalize(&h).unwrap();
                    thouless_parameter(&h, &spec, &basis, 1, 0.1, 1.0 / 3.0).unwrap().mean_g
                })
                .collect();
            mean(&v.into_iter().filter(|x| x.is_finite()).collect::<Vec<_>>())
        })
        .collect();
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let (mx, my) = (mean(&x), mean(&g));
    let slope = x.iter().zip(&g).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / x.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>();
    (slope, g)
}

#[test]
#[ignore = "minutes: full spectra up to N=12 at two couplings"]
fn criterion_12_thouless_crossover() {
    let (s_weak, g_weak) = thouless_slope(0.2, 100);
    let (s_strong, g_strong) = thouless_slope(1.0, 100);
    finish(
        12,
        s_weak > 0.0 && s_strong < 0.0,
        format!(
            "N=8,10,12, 100 sectors: dG/dN = {s_weak:.4} at J=0.2 (G = {g_weak:.3?}), {s_strong:.4} at J=1 (G = {g_strong:.3?})"
        ),
    );
}

/// `pi * 2^bits` rounded down, from Machin's formula in integer arithmetic.
fn pi_fixed(bits: u32) -> BigInt {
    let guard = 32;
    let one = BigInt::from(1) << (bits + guard);
    let atan_inv = |x: u64| -> BigInt {
        let x = BigInt::from(x);
        let x2 = &x * &x;
        let mut term = &one / &x;
        let mut sum = BigInt::from(0);
        let mut k = 0u64;
        while term != BigInt::from(0) {
            let t = &term / BigInt::from(2 * k + 1);
            if k % 2 == 0 {
                sum += t;
            } else {
                sum -= t;
            }
            term /= &x2;
            k += 1;
        }
        sum
    };
    (BigInt::from(16) * atan_inv(5) - BigInt::from(4) * atan_inv(239)) >> guard
}

/// Exact value of a finite double as `m * 2^-1074`.
fn exact_units(x: f64) -> BigInt {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | 1 << 52, exp - 1075) };
    BigInt::from(sign) * (BigInt::from(m) << (e + 1074) as usize)
}

/// `(e - e0) t mod 2 pi` with 256 fractional bits.
fn oracle_phase(e: f64, e0: f64, t: f64, two_pi: &BigInt) -> f64 {
    const B: usize = 256;
    let x = ((exact_units(e) - exact_units(e0)) * exact_units(t)) >> (2 * 1074 - B);
    assert!(x >= BigInt::from(0));
    let r = &x % two_pi;
    let top: BigInt = r >> (B - 60);
    let (_, digits) = top.to_u64_digits();
    let v = digits.first().copied().unwrap_or(0);
    v as f64 / (1u64 << 60) as f64
}

#[test]
fn criterion_13_long_time_phase_accuracy() {
    let (n, j, t) = (8, 5.0, 1e12);
    let basis = enumerate_basis(n).unwrap();
    let two_pi = pi_fixed(256) << 1;
    let grid = TimeGrid::default();
    let mut worst_overlap = 1.0f64;
    let mut worst_drift = 0.0f64;
    for sec in sample_charge_sectors(n, 5, 13) {
        let h = sector_h(n, j, &sec, &basis);
        let spec = diagonalize(&h).unwrap();
        let psi0 = basis_state(&basis, basis.vacuum_index());
        let got = &Evolver::new(&spec, &psi0).unwrap().states_at(&[t]).unwrap()[0];

        let e0 = spec.energies[0];
        let mut want = vec![Complex64::new(0.0, 0.0); basis.dim()];
        for k in 0..spec.dim() {
            let v = spec.vector(k);
            let c: f64 = v.iter().zip(&psi0).map(|(a, b)| a * b.re).sum();
            let (s, co) = oracle_phase(spec.energies[k], e0, t, &two_pi).sin_cos();
            let z = Complex64::new(co, -s) * c;
            for (w, a) in want.iter_mut().zip(v) {
                *w += z * a;
            }
        }
        let ov: Complex64 = want.iter().zip(got).map(|(a, b)| a.conj() * b).sum();
        let na: f64 = want.iter().map(|z| z.norm_sqr()).sum();
        let nb: f64 = got.iter().map(|z| z.norm_sqr()).sum();
        worst_overlap = worst_overlap.min(ov.norm_sqr() / (na * nb));
        let s = quench(&spec, &basis, &psi0, &grid.points, n / 2).unwrap();
        worst_drift = worst_drift.max(s.norm_drift);
    }
    finish(
        13,
        worst_overlap >= 1.0 - 1e-8 && worst_drift < 1e-10,
        format!(
            "N=8, J=5, 5 sectors: min |<oracle|psi(1e12)>|^2 = 1 - {:.2e} (>= 1 - 1e-8); max norm drift over the grid = {worst_drift:.2e} (< 1e-10)",
            1.0 - worst_overlap
        ),
    );
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn criterion_14_determinism() {
    let runs = [(Task::Quench, 8usize, 5.0f64), (Task::Rstat, 8, 5.0), (Task::Fragmentation, 8, 10.0)];
    let mut detail = Vec::new();
    let mut pass = true;
    for (task, n, j) in runs {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ov = Overrides {
            task: Some(task),
            n: Some(vec![n]),
            j: Some(vec![j]),
            sectors: Some(12),
            seed: Some(14),
            tmax: Some(1e8),
            out: Some(a.path().to_path_buf()),
            ..Overrides::default()
        };
        let cfg = config::resolve(None, &ov).unwrap().0;
        let first = schwinger_cli::run(&cfg, &Execution { workers: Some(1), plot: false }).unwrap();
        let replay_dir = b.path().join("replay");
        let second = schwinger_cli::replay(
            &a.path().join("manifest.json"),
            &replay_dir,
            &Execution { workers: Some(3), plot: false },
        )
        .unwrap();
        let (x, y) = (csv_files(a.path()), csv_files(&replay_dir));
        let same = !x.is_empty() && x == y && first.exit_code() == 0 && second.exit_code() == 0;
        pass &= same;
        detail.push(format!("{} ({} csv) {}", task.name(), x.len(), if same { "identical" } else { "differ" }));
    }
    finish(14, pass, format!("run with 1 worker vs replay with 3: {}", detail.join(", ")));
}

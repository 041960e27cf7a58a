//! Per-sector computations and the aggregated outputs of each task.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use schwinger_core::dynamics::{smooth_log_time, Aggregate};
use schwinger_core::jumps::{fit_jump_mle, FitMethod};
use schwinger_core::numeric::{mean, std_dev};
use schwinger_core::spectral::sff::log_tau_grid;
use schwinger_core::spectral::{
    aggregate_thouless, connected_sff, default_window, eigenstate_entropy_stats, r_statistic, thouless_parameter,
    unfold, ThoulessSector,
};
use schwinger_core::{
    aggregate_sectors, build_scaled_hamiltonian, build_xxz, decompose_all, detect_jumps, diagonalize, dpt_compare,
    eigenvalues, fit_entropy_powerlaw, fit_jump_histogram, quench, ChargeSector, DptTrace, EntropySeries,
    HalfFillingBasis, JumpEvent, JumpOptions, PowerLawFit, SectorHamiltonian, SpinConfig, TimeGrid,
};

use crate::config::{ExperimentConfig, Point, Task};
use crate::output::{Cell, Csv};
use crate::plot::{Chart, Series, Style, PALETTE};

/// Disorder realization of one sector.
#[derive(Debug, Clone)]
pub enum Disorder {
    Charge(ChargeSector),
    /// Seed of the XXZ random fields.
    Fields(u64),
}

impl Disorder {
    pub fn seed(&self) -> u64 {
        match self {
            Disorder::Charge(s) => s.seed,
            Disorder::Fields(s) => *s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragRow {
    pub tower_label: i64,
    pub subspace_id: usize,
    pub dimension: usize,
    pub n_active_regions: usize,
    pub crosses_center: bool,
}

/// Result of one `(point, sector)` unit. Undefined values are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SectorResult {
    Rstat {
        mean_r: Option<f64>,
        pairs: usize,
        window: usize,
    },
    Dos {
        /// `(bin index, count)` with bins `[k b, (k+1) b)` of `E/J`.
        bins: Vec<(i64, u64)>,
    },
    Eigentropy {
        mean: f64,
        std: f64,
        count: usize,
    },
    Sff {
        unfolded: Vec<f64>,
    },
    Thouless {
        mean_g: Option<f64>,
        pairs: usize,
    },
    Quench {
        series: EntropySeries,
    },
    DptCompare {
        traces: Vec<DptTrace>,
    },
    Fragmentation {
        rows: Vec<FragRow>,
        p_cross: f64,
    },
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn hamiltonian(
    cfg: &ExperimentConfig,
    point: Point,
    basis: &HalfFillingBasis,
    disorder: &Disorder,
) -> schwinger_core::Result<SectorHamiltonian> {
    match disorder {
        Disorder::Charge(sector) => {
            let m = cfg.model.as_ref().expect("charge sectors come with a model block");
            let p = cfg.params(point).expect("model block");
            build_scaled_hamiltonian(&p, sector, basis, m.j_zz.unwrap_or(1.0), m.j_q.unwrap_or(1.0))
        }
        Disorder::Fields(seed) => build_xxz(&cfg.xxz_params().expect("xxz block"), basis, *seed),
    }
}

/// Times of the run in units of `1/w`.
pub fn wt_grid(cfg: &ExperimentConfig) -> schwinger_core::Result<TimeGrid> {
    TimeGrid::new(cfg.time.tmin, cfg.time.tmax, cfg.time.per_decade)
}

fn initial_index(cfg: &ExperimentConfig, basis: &HalfFillingBasis) -> schwinger_core::Result<usize> {
    if cfg.quench.initial == "vacuum" {
        return Ok(basis.vacuum_index());
    }
    let s = SpinConfig::parse(&cfg.quench.initial)?;
    basis
        .index_of(s)
        .ok_or_else(|| schwinger_core::Error::Config(format!("{} is not a half-filling state", cfg.quench.initial)))
}

pub fn compute(
    cfg: &ExperimentConfig,
    point: Point,
    basis: &HalfFillingBasis,
    disorder: &Disorder,
) -> schwinger_core::Result<SectorResult> {
    let h = hamiltonian(cfg, point, basis, disorder)?;
    let n = point.n;
    let w = cfg.hopping();
    Ok(match cfg.task {
        Task::Rstat => {
            let e = eigenvalues(&h)?;
            let k = cfg.rstat.window.unwrap_or_else(|| default_window(e.len()));
            let r = r_statistic(&e, k);
            SectorResult::Rstat {
                mean_r: finite(r.mean_r),
                pairs: r.pairs,
                window: r.window,
            }
        }
        Task::Dos => {
            let e = eigenvalues(&h)?;
            let bw = cfg.dos.bin_width_over_j;
            let mut bins: BTreeMap<i64, u64> = BTreeMap::new();
            for x in e {
                *bins.entry((x / point.j / bw).floor() as i64).or_default() += 1;
            }
            SectorResult::Dos {
                bins: bins.into_iter().collect(),
            }
        }
        Task::Eigentropy => {
            let spec = diagonalize(&h)?;
            let cut = cfg.eigentropy.cut.unwrap_or(n / 2);
            let s = eigenstate_entropy_stats(&spec, basis, cut, cfg.eigentropy.fraction)?;
            SectorResult::Eigentropy {
                mean: s.mean,
                std: s.std,
                count: s.count,
            }
        }
        Task::Sff => {
            let e = eigenvalues(&h)?;
            SectorResult::Sff {
                unfolded: unfold(&e, cfg.sff.degree)?,
            }
        }
        Task::Thouless => {
            let spec = diagonalize(&h)?;
            let o = &cfg.thouless;
            let t = thouless_parameter(&h, &spec, basis, o.site, o.strength.unwrap_or(w / 10.0), o.fraction)?;
            SectorResult::Thouless {
                mean_g: finite(t.mean_g),
                pairs: t.pairs,
            }
        }
        Task::Quench | Task::Jumps => {
            let spec = diagonalize(&h)?;
            let grid = wt_grid(cfg)?;
            let times: Vec<f64> = grid.points.iter().map(|t| t / w).collect();
            let psi = schwinger_core::dynamics::basis_state(basis, initial_index(cfg, basis)?);
            let mut series = quench(&spec, basis, &psi, &times, cfg.quench.cut.unwrap_or(n / 2))?;
            series.times = grid.points;
            SectorResult::Quench { series }
        }
        Task::DptCompare => {
            let spec = diagonalize(&h)?;
            let grid = wt_grid(cfg)?;
            let times: Vec<f64> = grid.points.iter().map(|t| t / w).collect();
            let o = &cfg.dpt_compare;
            let traces = dpt_compare(
                &h,
                &spec,
                basis,
                initial_index(cfg, basis)?,
                &o.orders,
                &times,
                cfg.quench.cut.unwrap_or(n / 2),
                o.convention,
            )?;
            SectorResult::DptCompare { traces }
        }
        Task::Fragmentation => {
            let mut rows = Vec::new();
            let mut crossing = 0usize;
            for k in decompose_all(&h, basis)? {
                for (id, s) in k.subspaces.iter().enumerate() {
                    let c = s.crosses_center(n);
                    if c {
                        crossing += s.dim();
                    }
                    rows.push(FragRow {
                        tower_label: k.tower_label,
                        subspace_id: id,
                        dimension: s.dim(),
                        n_active_regions: s.active_regions.len(),
                        crosses_center: c,
                    });
                }
            }
            SectorResult::Fragmentation {
                rows,
                p_cross: crossing as f64 / basis.dim() as f64,
            }
        }
    })
}

/// Successful results of one point, in sector order.
pub struct PointResults<'a> {
    pub point: Point,
    pub sectors: Vec<(u64, &'a SectorResult)>,
}

/// Files written and notes for the manifest.
#[derive(Debug, Default)]
pub struct Written {
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
}

impl Written {
    fn csv(&mut self, dir: &Path, name: &str, csv: &Csv) -> io::Result<()> {
        csv.write(&dir.join(name))?;
        self.outputs.push(name.into());
        Ok(())
    }

    fn svg(&mut self, dir: &Path, name: &str, chart: &Chart) -> io::Result<()> {
        crate::output::write_atomic(&dir.join(name), chart.render().as_bytes())?;
        self.outputs.push(name.into());
        Ok(())
    }
}

pub fn write_outputs(cfg: &ExperimentConfig, dir: &Path, points: &[PointResults], plot: bool) -> io::Result<Written> {
    let mut w = Written::default();
    match cfg.task {
        Task::Rstat => rstat(dir, points, plot, &mut w)?,
        Task::Dos => dos(cfg, dir, &points[0], plot, &mut w)?,
        Task::Eigentropy => eigentropy(dir, points, plot, &mut w)?,
        Task::Sff => sff(cfg, dir, &points[0], plot, &mut w)?,
        Task::Thouless => thouless(dir, points, plot, &mut w)?,
        Task::Quench => {
            entropy(dir, &points[0], plot, &mut w)?;
        }
        Task::Jumps => {
            let agg = entropy(dir, &points[0], plot, &mut w)?;
            jumps(cfg, dir, &points[0], agg.as_ref(), plot, &mut w)?;
        }
        Task::DptCompare => dpt(cfg, dir, &points[0], plot, &mut w)?,
        Task::Fragmentation => fragmentation(dir, &points[0], &mut w)?,
    }
    Ok(w)
}

fn sweep_chart(title: &str, xlabel: &str, ylabel: &str, curves: &BTreeMap<usize, Vec<(f64, f64)>>) -> Chart {
    Chart {
        title: title.into(),
        xlabel: xlabel.into(),
        ylabel: ylabel.into(),
        xlog: false,
        ylog: false,
        series: curves
            .iter()
            .enumerate()
            .map(|(i, (n, pts))| {
                let c = PALETTE[i % PALETTE.len()];
                Series::new(pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect(), Style::Line, c)
                    .label(format!("N = {n}"))
            })
            .collect(),
    }
}

fn rstat(dir: &Path, points: &[PointResults], plot: bool, w: &mut Written) -> io::Result<()> {
    let mut rows = Csv::new(&["N", "J", "sector_seed", "mean_r"]);
    let mut summary = Csv::new(&["N", "J", "grand_mean", "std_err", "sectors"]);
    let mut curves: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for p in points {
        let mut vals = Vec::new();
        for (seed, r) in &p.sectors {
            let SectorResult::Rstat { mean_r, .. } = r else { continue };
            let v = mean_r.unwrap_or(f64::NAN);
            rows.row(&[Cell::U(p.point.n as u64), Cell::F(p.point.j), Cell::U(*seed), Cell::F(v)]);
            if v.is_finite() {
                vals.push(v);
            }
        }
        let g = mean(&vals);
        let se = std_dev(&vals) / (vals.len() as f64).sqrt();
        summary.row(&[
            Cell::U(p.point.n as u64),
            Cell::F(p.point.j),
            Cell::F(g),
            Cell::F(se),
            Cell::U(vals.len() as u64),
        ]);
        curves.entry(p.point.n).or_default().push((p.point.j, g));
    }
    w.csv(dir, "rstat.csv", &rows)?;
    w.csv(dir, "rstat_summary.csv", &summary)?;
    if plot {
        let mut c = sweep_chart("Mean gap ratio", "J / w", "<r>", &curves);
        let js: Vec<f64> = points.iter().map(|p| p.point.j).collect();
        let (lo, hi) = js.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &j| (a.0.min(j), a.1.max(j)));
        for (v, name) in [(0.5307, "GOE"), (2.0 * std::f64::consts::LN_2 - 1.0, "Poisson")] {
            c.series.push(Series::new(vec![lo, hi], vec![v, v], Style::Dashed, "gray").label(name));
        }
        w.svg(dir, "rstat.svg", &c)?;
    }
    Ok(())
}

fn dos(cfg: &ExperimentConfig, dir: &Path, p: &PointResults, plot: bool, w: &mut Written) -> io::Result<()> {
    let mut total: BTreeMap<i64, u64> = BTreeMap::new();
    for (_, r) in &p.sectors {
        if let SectorResult::Dos { bins } = r {
            for &(k, c) in bins {
                *total.entry(k).or_default() += c;
            }
        }
    }
    let bw = cfg.dos.bin_width_over_j;
    let mut csv = Csv::new(&["bin_center_over_J", "count"]);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    if let (Some(&lo), Some(&hi)) = (total.keys().next(), total.keys().last()) {
        for k in lo..=hi {
            let c = total.get(&k).copied().unwrap_or(0);
            let x = (k as f64 + 0.5) * bw;
            csv.row(&[Cell::F(x), Cell::U(c)]);
            xs.push(k as f64 * bw);
            ys.push(c as f64);
        }
    }
    w.csv(dir, "dos.csv", &csv)?;
    if plot {
        let c = Chart {
            title: format!("Density of states, N = {}, J = {}", p.point.n, p.point.j),
            xlabel: "E / J".into(),
            ylabel: "count".into(),
            series: vec![Series::new(xs, ys, Style::Steps, PALETTE[0])],
            ..Default::default()
        };
        w.svg(dir, "dos.svg", &c)?;
    }
    Ok(())
}

fn eigentropy(dir: &Path, points: &[PointResults], plot: bool, w: &mut Written) -> io::Result<()> {
    let mut rows = Csv::new(&["N", "J", "sector_seed", "mean_S_E", "std_S_E", "count"]);
    let mut agg = Csv::new(&["N", "J", "mean_S_E", "std_S_E", "sectors"]);
    let mut mean_curves: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    let mut std_curves: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for p in points {
        let (mut means, mut stds) = (Vec::new(), Vec::new());
        for (seed, r) in &p.sectors {
            let SectorResult::Eigentropy { mean, std, count } = r else { continue };
            rows.row(&[
                Cell::U(p.point.n as u64),
                Cell::F(p.point.j),
                Cell::U(*seed),
                Cell::F(*mean),
                Cell::F(*std),
                Cell::U(*count as u64),
            ]);
            means.push(*mean);
            stds.push(*std);
        }
        // Per-sector statistics, then averaged over sectors.
        let (m, s, k) = (mean(&means), mean(&stds), means.len() as u64);
        agg.row(&[Cell::U(p.point.n as u64), Cell::F(p.point.j), Cell::F(m), Cell::F(s), Cell::U(k)]);
        mean_curves.entry(p.point.n).or_default().push((p.point.j, m));
        std_curves.entry(p.point.n).or_default().push((p.point.j, s));
    }
    w.csv(dir, "eigentropy.csv", &rows)?;
    w.csv(dir, "eigentropy_agg.csv", &agg)?;
    if plot {
        w.svg(dir, "eigentropy_mean.svg", &sweep_chart("Eigenstate entanglement", "J / w", "mean S_E", &mean_curves))?;
        w.svg(dir, "eigentropy_std.svg", &sweep_chart("Eigenstate entanglement spread", "J / w", "std S_E", &std_curves))?;
    }
    Ok(())
}

fn sff(cfg: &ExperimentConfig, dir: &Path, p: &PointResults, plot: bool, w: &mut Written) -> io::Result<()> {
    let levels: Vec<Vec<f64>> = p
        .sectors
        .iter()
        .filter_map(|(_, r)| match r {
            SectorResult::Sff { unfolded } => Some(unfolded.clone()),
            _ => None,
        })
        .collect();
    let o = &cfg.sff;
    let grid = log_tau_grid(o.tau_min, o.tau_max, o.per_decade);
    let r = match connected_sff(&levels, &grid) {
        Ok(r) => r,
        Err(e) => {
            w.notes.push(format!("connected form factor unavailable: {e}"));
            return Ok(());
        }
    };
    let mut csv = Csv::new(&["tau", "K_c"]);
    for (t, k) in r.tau_grid.iter().zip(&r.k_c) {
        csv.row(&[Cell::F(*t), Cell::F(*k)]);
    }
    let mut summary = Csv::new(&["tau_goe", "Z", "A", "sectors"]);
    summary.row(&[Cell::F(r.tau_goe), Cell::F(r.z), Cell::F(r.a), Cell::U(r.sectors as u64)]);
    w.csv(dir, "sff.csv", &csv)?;
    w.csv(dir, "sff_summary.csv", &summary)?;
    if plot {
        let goe: Vec<f64> = grid.iter().map(|&t| schwinger_core::spectral::k_goe(t)).collect();
        let c = Chart {
            title: format!("Connected form factor, N = {}, J = {}", p.point.n, p.point.j),
            xlabel: "tau".into(),
            ylabel: "K_c".into(),
            xlog: true,
            ylog: true,
            series: vec![
                Series::new(grid.clone(), r.k_c.clone(), Style::Line, PALETTE[0]).faint(),
                Series::new(grid.clone(), r.k_c_smoothed.clone(), Style::Line, PALETTE[0]).label("smoothed"),
                Series::new(grid, goe, Style::Dashed, "black").label("GOE"),
            ],
        };
        w.svg(dir, "sff.svg", &c)?;
    }
    Ok(())
}

fn thouless(dir: &Path, points: &[PointResults], plot: bool, w: &mut Written) -> io::Result<()> {
    let mut csv = Csv::new(&["N", "J", "mean_G"]);
    let mut by_j: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for p in points {
        let s: Vec<ThoulessSector> = p
            .sectors
            .iter()
            .filter_map(|(_, r)| match r {
                SectorResult::Thouless { mean_g, pairs } => Some(ThoulessSector {
                    mean_g: mean_g.unwrap_or(f64::NAN),
                    pairs: *pairs,
                }),
                _ => None,
            })
            .collect();
        let g = aggregate_thouless(&s);
        csv.row(&[Cell::U(p.point.n as u64), Cell::F(p.point.j), Cell::F(g)]);
        by_j.entry(p.point.j.to_bits()).or_default().push((p.point.n as f64, g));
    }
    w.csv(dir, "thouless.csv", &csv)?;
    if plot {
        let c = Chart {
            title: "Thouless parameter".into(),
            xlabel: "N".into(),
            ylabel: "mean G".into(),
            series: by_j
                .iter()
                .enumerate()
                .map(|(i, (j, pts))| {
                    Series::new(
                        pts.iter().map(|p| p.0).collect(),
                        pts.iter().map(|p| p.1).collect(),
                        Style::Line,
                        PALETTE[i % PALETTE.len()],
                    )
                    .label(format!("J = {}", f64::from_bits(*j)))
                })
                .collect(),
            ..Default::default()
        };
        w.svg(dir, "thouless.svg", &c)?;
    }
    Ok(())
}

fn series_of<'a>(p: &'a PointResults) -> Vec<&'a EntropySeries> {
    p.sectors
        .iter()
        .filter_map(|(_, r)| match r {
            SectorResult::Quench { series } => Some(series),
            _ => None,
        })
        .collect()
}

fn entropy(
    dir: &Path,
    p: &PointResults,
    plot: bool,
    w: &mut Written,
) -> io::Result<Option<schwinger_core::EntropyAggregate>> {
    let series: Vec<EntropySeries> = series_of(p).into_iter().cloned().collect();
    let mut rows = Csv::new(&["wt", "sector_seed", "S_E", "S_N", "S_C"]);
    let mut mu = Csv::new(&["wt", "sector_seed", "mu"]);
    for s in &series {
        for i in 0..s.times.len() {
            rows.row(&[
                Cell::F(s.times[i]),
                Cell::U(s.sector_seed),
                Cell::F(s.s_e[i]),
                Cell::F(s.s_n[i]),
                Cell::F(s.s_c[i]),
            ]);
            mu.row(&[Cell::F(s.times[i]), Cell::U(s.sector_seed), Cell::F(s.mu[i])]);
        }
    }
    w.csv(dir, "entropy.csv", &rows)?;
    w.csv(dir, "mu.csv", &mu)?;
    let agg = match aggregate_sectors(&series) {
        Ok(a) => a,
        Err(e) => {
            w.notes.push(format!("no sector aggregate: {e}"));
            return Ok(None);
        }
    };
    let names = ["S_E", "S_N", "S_C", "mu"];
    let parts: [&Aggregate; 4] = [&agg.s_e, &agg.s_n, &agg.s_c, &agg.mu];
    let mut header = vec!["wt".to_string()];
    for stat in ["mean", "median", "std"] {
        for n in names {
            header.push(format!("{stat}_{n}"));
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header);
    for i in 0..agg.times.len() {
        let mut cells = vec![Cell::F(agg.times[i])];
        cells.extend(parts.iter().map(|a| Cell::F(a.mean[i])));
        cells.extend(parts.iter().map(|a| Cell::F(a.median[i])));
        cells.extend(parts.iter().map(|a| Cell::F(a.std[i])));
        csv.row(&cells);
    }
    w.csv(dir, "entropy_agg.csv", &csv)?;
    if plot {
        for (name, pick, a) in [
            ("entropy_S_E.svg", 0usize, &agg.s_e),
            ("entropy_S_N.svg", 1, &agg.s_n),
            ("entropy_S_C.svg", 2, &agg.s_c),
        ] {
            let mut s: Vec<Series> = series
                .iter()
                .take(200)
                .map(|x| {
                    let y = [&x.s_e, &x.s_n, &x.s_c][pick].clone();
                    Series::new(x.times.clone(), y, Style::Line, PALETTE[0]).faint()
                })
                .collect();
            s.push(Series::new(agg.times.clone(), a.mean.clone(), Style::Line, "black").label("mean"));
            s.push(Series::new(agg.times.clone(), a.median.clone(), Style::Dashed, "black").label("median"));
            let c = Chart {
                title: format!("{}, N = {}, J = {}", names[pick], p.point.n, p.point.j),
                xlabel: "wt".into(),
                ylabel: names[pick].into(),
                xlog: true,
                ylog: false,
                series: s,
            };
            w.svg(dir, name, &c)?;
        }
    }
    Ok(Some(agg))
}

/// Jump events of every sector, after smoothing `S_C` in log time.
pub fn collect_jumps(cfg: &ExperimentConfig, series: &[&EntropySeries]) -> Vec<JumpEvent> {
    let o = &cfg.jumps;
    let opts = JumpOptions {
        dlog: o.dlog,
        min_step: o.min_step,
        anchor_shift: o.anchor_shift,
    };
    series
        .iter()
        .flat_map(|s| {
            let sm = smooth_log_time(&s.times, &s.s_c, o.sigma);
            detect_jumps(&s.times, &sm, s.sector_seed, &opts)
        })
        .collect()
}

fn jumps(
    cfg: &ExperimentConfig,
    dir: &Path,
    p: &PointResults,
    agg: Option<&schwinger_core::EntropyAggregate>,
    plot: bool,
    w: &mut Written,
) -> io::Result<()> {
    let o = &cfg.jumps;
    let events = collect_jumps(cfg, &series_of(p));
    let mut csv = Csv::new(&["sector_seed", "tau_J", "height"]);
    for e in &events {
        csv.row(&[Cell::U(e.sector_seed), Cell::F(e.tau_j), Cell::F(e.height)]);
    }
    w.csv(dir, "jumps.csv", &csv)?;

    let mut fits: Vec<(FitMethod, Result<PowerLawFit, String>)> = vec![(
        FitMethod::Histogram,
        fit_jump_histogram(&events, o.bins_per_decade).map_err(|e| e.to_string()),
    )];
    if o.mle {
        fits.push((FitMethod::HistogramMle, fit_jump_mle(&events).map_err(|e| e.to_string())));
    }
    let entropy_fit = match agg {
        Some(a) => fit_entropy_powerlaw(&a.times, &a.s_c.mean, o.t_lo, o.t_hi).map_err(|e| e.to_string()),
        None => Err("no aggregate".into()),
    };
    fits.push((FitMethod::EntropyFit, entropy_fit));
    let mut alpha = Csv::new(&["N", "J", "method", "alpha", "alpha_err"]);
    for (m, f) in &fits {
        let (a, e) = match f {
            Ok(f) => (f.alpha, f.alpha_err),
            Err(msg) => {
                w.notes.push(format!("{} fit failed: {msg}", m.as_str()));
                (f64::NAN, f64::NAN)
            }
        };
        alpha.row(&[
            Cell::U(p.point.n as u64),
            Cell::F(p.point.j),
            Cell::S(m.as_str()),
            Cell::F(a),
            Cell::F(e),
        ]);
    }
    w.csv(dir, "alpha.csv", &alpha)?;

    if plot && !events.is_empty() {
        let h = schwinger_core::jumps::jump_histogram(&events, o.bins_per_decade);
        let (x, y): (Vec<f64>, Vec<f64>) = h
            .centers
            .iter()
            .zip(&h.density)
            .filter(|(_, d)| **d > 0.0)
            .map(|(c, d)| (*c, *d))
            .unzip();
        let mut series = vec![Series::new(x.clone(), y.clone(), Style::Markers, PALETTE[0]).label("jumps")];
        if let Some(Ok(f)) = fits.first().map(|f| &f.1) {
            // Line through the weighted centroid with the fitted slope.
            let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
            let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
            let (mx, my) = (mean(&lx), mean(&ly));
            let slope = -(f.alpha + 1.0);
            let fy: Vec<f64> = lx.iter().map(|v| 10f64.powf(my + slope * (v - mx))).collect();
            series.push(Series::new(x, fy, Style::Dashed, "black").label(format!("alpha = {:.3}", f.alpha)));
        }
        let c = Chart {
            title: format!("Jump times, N = {}, J = {}", p.point.n, p.point.j),
            xlabel: "tau_J".into(),
            ylabel: "P(tau_J)".into(),
            xlog: true,
            ylog: true,
            series,
        };
        w.svg(dir, "jumps.svg", &c)?;
    }
    Ok(())
}

fn dpt(cfg: &ExperimentConfig, dir: &Path, p: &PointResults, plot: bool, w: &mut Written) -> io::Result<()> {
    let all: Vec<&Vec<DptTrace>> = p
        .sectors
        .iter()
        .filter_map(|(_, r)| match r {
            SectorResult::DptCompare { traces } => Some(traces),
            _ => None,
        })
        .collect();
    let mut csv = Csv::new(&["wt", "order", "observable", "value"]);
    let Some(first) = all.first() else {
        w.csv(dir, "dpt_compare.csv", &csv)?;
        return Ok(());
    };
    let times = wt_grid(cfg).map_err(io::Error::other)?.points;
    let mut curves = Vec::new();
    for (k, t) in first.iter().enumerate() {
        for obs in ["mu", "S_E"] {
            let vals: Vec<f64> = (0..times.len())
                .map(|i| {
                    let col: Vec<f64> = all
                        .iter()
                        .map(|tr| if obs == "mu" { tr[k].mu[i] } else { tr[k].s_e[i] })
                        .collect();
                    mean(&col)
                })
                .collect();
            for (x, v) in times.iter().zip(&vals) {
                csv.row(&[Cell::F(*x), Cell::S(&t.label), Cell::S(obs), Cell::F(*v)]);
            }
            curves.push((t.label.clone(), obs, vals));
        }
    }
    w.csv(dir, "dpt_compare.csv", &csv)?;
    if plot {
        for obs in ["mu", "S_E"] {
            let series = curves
                .iter()
                .filter(|c| c.1 == obs)
                .enumerate()
                .map(|(i, c)| {
                    let style = if c.0 == "full" { Style::Dashed } else { Style::Line };
                    Series::new(times.clone(), c.2.clone(), style, PALETTE[i % PALETTE.len()]).label(format!("DPT({})", c.0))
                })
                .collect();
            let chart = Chart {
                title: format!("{obs}: DPT orders vs exact, N = {}, J = {}", p.point.n, p.point.j),
                xlabel: "wt".into(),
                ylabel: obs.into(),
                xlog: true,
                ylog: false,
                series,
            };
            w.svg(dir, &format!("dpt_{obs}.svg"), &chart)?;
        }
    }
    Ok(())
}

fn fragmentation(dir: &Path, p: &PointResults, w: &mut Written) -> io::Result<()> {
    let mut csv = Csv::new(&[
        "sector_seed",
        "tower_label",
        "subspace_id",
        "dimension",
        "n_active_regions",
        "crosses_center",
    ]);
    let mut pc = Vec::new();
    for (seed, r) in &p.sectors {
        let SectorResult::Fragmentation { rows, p_cross } = r else { continue };
        for row in rows {
            csv.row(&[
                Cell::U(*seed),
                Cell::I(row.tower_label),
                Cell::U(row.subspace_id as u64),
                Cell::U(row.dimension as u64),
                Cell::U(row.n_active_regions as u64),
                Cell::U(row.crosses_center as u64),
            ]);
        }
        pc.push(*p_cross);
    }
    w.csv(dir, "fragmentation.csv", &csv)?;
    let mut s = Csv::new(&["N", "p_cross", "std_err", "sectors"]);
    s.row(&[
        Cell::U(p.point.n as u64),
        Cell::F(mean(&pc)),
        Cell::F(std_dev(&pc) / (pc.len() as f64).sqrt()),
        Cell::U(pc.len() as u64),
    ]);
    w.csv(dir, "p_cross.csv", &s)?;
    Ok(())
}

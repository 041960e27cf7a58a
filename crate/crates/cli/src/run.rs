//! Run orchestration: sector scheduling, per-sector result files, the
//! manifest, resume and replay.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use schwinger_core::basis::sector_seed;
use schwinger_core::{enumerate_basis, sample_charge_sectors, ChargeSector, HalfFillingBasis};

use crate::config::{self, ConfigError, ExperimentConfig};
use crate::output::{
    sector_path, sectors_file, write_atomic, Manifest, PointRecord, RunStatus, SectorRecord, SectorStatus, MANIFEST,
};
use crate::tasks::{compute, write_outputs, Disorder, PointResults, SectorResult};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "SCHWINGER_WORKERS";

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    /// Resume or replay refused, e.g. on a config-hash mismatch.
    Refused(String),
    Io(PathBuf, io::Error),
    Hard(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Refused(_) => 1,
            RunError::Io(..) | RunError::Hard(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Refused(m) => write!(f, "refused: {m}"),
            RunError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            RunError::Hard(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |e| RunError::Io(path.to_path_buf(), e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: RunStatus,
    pub out: PathBuf,
    /// Sectors computed by this invocation.
    pub computed: usize,
    /// Sectors taken from earlier result files.
    pub reused: usize,
    pub failed: usize,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            RunStatus::Complete => 0,
            RunStatus::Partial => 2,
            RunStatus::Running | RunStatus::Failed => 3,
        }
    }
}

/// Options that do not change numerical results.
#[derive(Debug, Clone, Default)]
pub struct Execution {
    pub workers: Option<usize>,
    pub plot: bool,
}

pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Serialize, Deserialize)]
struct SectorFile {
    config_hash: String,
    point: usize,
    index: usize,
    seed: u64,
    result: SectorResult,
}

/// Fresh run into `cfg.out`. A directory holding a manifest of the same
/// configuration is continued; a different configuration is refused.
pub fn run(cfg: &ExperimentConfig, exec: &Execution) -> Result<Outcome, RunError> {
    let dir = cfg.out.clone();
    let manifest = dir.join(MANIFEST);
    if manifest.exists() {
        let m = Manifest::load(&manifest).map_err(io_at(&manifest))?;
        if m.config_hash != cfg.hash() {
            return Err(RunError::Refused(format!(
                "{} holds a run of a different configuration; choose another --out",
                dir.display()
            )));
        }
    }
    execute(cfg, &dir, &dir, exec)
}

fn load_manifest_config(path: &Path) -> Result<(Manifest, ExperimentConfig), RunError> {
    let m = Manifest::load(path).map_err(io_at(path))?;
    let cfg = config::parse_str(&m.config, Some(path))?;
    if cfg.hash() != m.config_hash {
        return Err(RunError::Refused(format!(
            "config hash mismatch in {}: recorded {}, recomputed {}",
            path.display(),
            m.config_hash,
            cfg.hash()
        )));
    }
    Ok((m, cfg))
}

fn manifest_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Computes only the sectors missing from a partial run, then rebuilds
/// every aggregate.
pub fn resume(manifest: &Path, exec: &Execution) -> Result<Outcome, RunError> {
    let (_, mut cfg) = load_manifest_config(manifest)?;
    let dir = manifest_dir(manifest);
    cfg.out = dir.clone();
    execute(&cfg, &dir, &dir, exec)
}

/// Recomputes a recorded run from scratch into `out`, reading the stored
/// charge sectors of the original run.
pub fn replay(manifest: &Path, out: &Path, exec: &Execution) -> Result<Outcome, RunError> {
    let (_, mut cfg) = load_manifest_config(manifest)?;
    let src = manifest_dir(manifest);
    if fs::canonicalize(&src).ok() == fs::canonicalize(out).ok() {
        return Err(RunError::Refused("replay needs an output directory different from the original".into()));
    }
    if out.join(MANIFEST).exists() {
        return Err(RunError::Refused(format!("{} already holds a run", out.display())));
    }
    cfg.out = out.to_path_buf();
    execute(&cfg, out, &src, exec)
}

/// Charge sectors of size `n`: from `src` when recorded there, otherwise
/// sampled from the master seed.
fn sectors_for(cfg: &ExperimentConfig, n: usize, src: &Path) -> Result<Vec<ChargeSector>, RunError> {
    let count = cfg.sectors.count;
    let sampled = sample_charge_sectors(n, count, cfg.sectors.master_seed);
    let path = sectors_file(src, n);
    if !path.exists() {
        return Ok(sampled);
    }
    let text = fs::read_to_string(&path).map_err(io_at(&path))?;
    let stored = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(ChargeSector::from_line)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| RunError::Refused(format!("{}: {e}", path.display())))?;
    if stored.len() != count || stored.iter().zip(&sampled).any(|(a, b)| a.seed != b.seed || a.n() != n) {
        return Err(RunError::Refused(format!(
            "{} does not match the configured sectors",
            path.display()
        )));
    }
    Ok(stored)
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

struct Unit {
    point: usize,
    index: usize,
    disorder: Disorder,
}

fn execute(cfg: &ExperimentConfig, dir: &Path, src: &Path, exec: &Execution) -> Result<Outcome, RunError> {
    let start = Instant::now();
    let started_unix = now_unix();
    let hash = cfg.hash();
    fs::create_dir_all(dir.join("sectors")).map_err(io_at(dir))?;
    let workers = exec.workers.or(cfg.workers).unwrap_or_else(default_workers);
    let points = cfg.points();

    // Disorder realizations and bases per system size.
    let mut bases: BTreeMap<usize, Arc<HalfFillingBasis>> = BTreeMap::new();
    let mut disorder: BTreeMap<usize, Vec<Disorder>> = BTreeMap::new();
    for p in &points {
        if bases.contains_key(&p.n) {
            continue;
        }
        let b = enumerate_basis(p.n).map_err(|e| RunError::Hard(e.to_string()))?;
        bases.insert(p.n, Arc::new(b));
        let d = if cfg.model.is_some() {
            let s = sectors_for(cfg, p.n, src)?;
            let text: String = s.iter().map(|x| x.to_line() + "\n").collect();
            let path = sectors_file(dir, p.n);
            write_atomic(&path, text.as_bytes()).map_err(io_at(&path))?;
            s.into_iter().map(Disorder::Charge).collect()
        } else {
            (0..cfg.sectors.count)
                .map(|i| Disorder::Fields(sector_seed(cfg.sectors.master_seed, i)))
                .collect()
        };
        disorder.insert(p.n, d);
    }

    // Reuse result files written by earlier invocations into `dir`.
    let mut results: Vec<Vec<Option<SectorResult>>> = vec![vec![None; cfg.sectors.count]; points.len()];
    let mut pending = Vec::new();
    let mut reused = 0;
    for (pi, p) in points.iter().enumerate() {
        for (i, d) in disorder[&p.n].iter().enumerate() {
            let path = sector_path(dir, pi, i);
            if let Ok(text) = fs::read_to_string(&path) {
                let f: SectorFile = serde_json::from_str(&text)
                    .map_err(|e| RunError::Refused(format!("{}: unreadable result: {e}", path.display())))?;
                if f.config_hash != hash || f.seed != d.seed() || f.point != pi || f.index != i {
                    return Err(RunError::Refused(format!(
                        "{} was produced by a different configuration",
                        path.display()
                    )));
                }
                results[pi][i] = Some(f.result);
                reused += 1;
                continue;
            }
            pending.push(Unit {
                point: pi,
                index: i,
                disorder: d.clone(),
            });
        }
    }

    let mut manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        task: cfg.task.name().to_string(),
        config_hash: hash.clone(),
        config: cfg.canonical(),
        master_seed: cfg.sectors.master_seed,
        status: RunStatus::Running,
        started_unix,
        wall_time_s: 0.0,
        workers,
        points: points
            .iter()
            .enumerate()
            .map(|(pi, p)| PointRecord {
                point: *p,
                sectors: disorder[&p.n]
                    .iter()
                    .enumerate()
                    .map(|(i, d)| SectorRecord {
                        index: i,
                        seed: d.seed(),
                        status: if results[pi][i].is_some() {
                            SectorStatus::Done
                        } else {
                            SectorStatus::Pending
                        },
                        error: None,
                    })
                    .collect(),
            })
            .collect(),
        outputs: Vec::new(),
        notes: Vec::new(),
    };
    manifest.save(dir).map_err(io_at(dir))?;

    let total = pending.len();
    log::info!(
        "{}: {} sectors to compute ({} reused) on {} workers",
        cfg.task,
        total,
        reused,
        workers
    );
    let done = AtomicUsize::new(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Hard(format!("thread pool: {e}")))?;
    let computed: Vec<(usize, usize, Result<SectorResult, String>)> = pool.install(|| {
        pending
            .par_iter()
            .map(|u| {
                let p = points[u.point];
                let basis = &bases[&p.n];
                let r = catch_unwind(AssertUnwindSafe(|| compute(cfg, p, basis, &u.disorder)))
                    .map_err(|e| {
                        let msg = e
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_else(|| "panic".into());
                        format!("panicked: {msg}")
                    })
                    .and_then(|r| r.map_err(|e| e.to_string()));
                let r = r.and_then(|res| {
                    let file = SectorFile {
                        config_hash: hash.clone(),
                        point: u.point,
                        index: u.index,
                        seed: u.disorder.seed(),
                        result: res,
                    };
                    let path = sector_path(dir, u.point, u.index);
                    let text = serde_json::to_string(&file).map_err(|e| e.to_string())?;
                    write_atomic(&path, text.as_bytes()).map_err(|e| format!("{}: {e}", path.display()))?;
                    Ok(file.result)
                });
                let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                match &r {
                    Ok(_) => log::debug!("sector {} of point {} done ({k}/{total})", u.index, u.point),
                    Err(e) => log::warn!("sector {} of point {} failed: {e}", u.index, u.point),
                }
                if total >= 10 && k % (total / 10).max(1) == 0 {
                    log::info!("{k}/{total} sectors");
                }
                (u.point, u.index, r)
            })
            .collect()
    });

    let mut failed = 0;
    let fresh = computed.len();
    for (pi, i, r) in computed {
        let rec = &mut manifest.points[pi].sectors[i];
        match r {
            Ok(res) => {
                rec.status = SectorStatus::Done;
                results[pi][i] = Some(res);
            }
            Err(e) => {
                rec.status = SectorStatus::Failed;
                rec.error = Some(e);
                failed += 1;
            }
        }
    }

    let any_done = results.iter().flatten().any(Option::is_some);
    let per_point: Vec<PointResults> = points
        .iter()
        .enumerate()
        .map(|(pi, p)| PointResults {
            point: *p,
            sectors: results[pi]
                .iter()
                .zip(&disorder[&p.n])
                .filter_map(|(r, d)| r.as_ref().map(|r| (d.seed(), r)))
                .collect(),
        })
        .collect();
    if any_done {
        let written = pool
            .install(|| write_outputs(cfg, dir, &per_point, exec.plot || cfg.plot))
            .map_err(io_at(dir))?;
        manifest.outputs = written.outputs;
        manifest.notes = written.notes;
    }
    manifest.status = match (failed, any_done) {
        (_, false) => RunStatus::Failed,
        (0, true) => RunStatus::Complete,
        _ => RunStatus::Partial,
    };
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.save(dir).map_err(io_at(dir))?;
    Ok(Outcome {
        status: manifest.status,
        out: dir.to_path_buf(),
        computed: fresh - failed,
        reused,
        failed,
    })
}

//! Experiment configuration: a TOML file plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use schwinger_core::model::{DisorderKind, XxzParams};
use schwinger_core::{DptConvention, ModelParams, SpinConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Rstat,
    Dos,
    Eigentropy,
    Sff,
    Thouless,
    Quench,
    Jumps,
    DptCompare,
    Fragmentation,
}

impl Task {
    pub fn parse(s: &str) -> Option<Task> {
        Some(match s {
            "rstat" => Task::Rstat,
            "dos" => Task::Dos,
            "eigentropy" => Task::Eigentropy,
            "sff" => Task::Sff,
            "thouless" => Task::Thouless,
            "quench" => Task::Quench,
            "jumps" => Task::Jumps,
            "dpt_compare" => Task::DptCompare,
            "fragmentation" => Task::Fragmentation,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Rstat => "rstat",
            Task::Dos => "dos",
            Task::Eigentropy => "eigentropy",
            Task::Sff => "sff",
            Task::Thouless => "thouless",
            Task::Quench => "quench",
            Task::Jumps => "jumps",
            Task::DptCompare => "dpt_compare",
            Task::Fragmentation => "fragmentation",
        }
    }

    /// Tasks whose outputs hold several `(N, J)` points.
    pub fn allows_sweep(self) -> bool {
        matches!(self, Task::Rstat | Task::Eigentropy | Task::Thouless)
    }

    /// Tasks that need exact integer tower labels.
    pub fn needs_towers(self) -> bool {
        matches!(self, Task::DptCompare | Task::Fragmentation)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A scalar or a list in TOML; lists define a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }

    pub fn from_vec(mut v: Vec<T>) -> Self {
        if v.len() == 1 {
            OneOrMany::One(v.pop().unwrap())
        } else {
            OneOrMany::Many(v)
        }
    }
}

fn one() -> f64 {
    1.0
}

fn pi() -> f64 {
    std::f64::consts::PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(rename = "N")]
    pub n: OneOrMany<usize>,
    #[serde(rename = "J")]
    pub j: OneOrMany<f64>,
    #[serde(default = "one")]
    pub w: f64,
    #[serde(default)]
    pub m: f64,
    /// Radians.
    #[serde(default = "pi")]
    pub theta: f64,
    /// Alternative to `theta`, in units of pi.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_over_pi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_zz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XxzBlock {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default = "one")]
    pub j_xy: f64,
    #[serde(default = "one")]
    pub j_z: f64,
    pub disorder: f64,
    #[serde(default = "default_kind")]
    pub kind: DisorderKind,
}

fn default_kind() -> DisorderKind {
    DisorderKind::Uniform
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorsBlock {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_count() -> usize {
    100
}

impl Default for SectorsBlock {
    fn default() -> Self {
        SectorsBlock {
            count: default_count(),
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeBlock {
    pub tmin: f64,
    pub tmax: f64,
    pub per_decade: usize,
}

impl Default for TimeBlock {
    fn default() -> Self {
        TimeBlock {
            tmin: 0.1,
            tmax: 1e12,
            per_decade: 20,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RstatOptions {
    /// Levels per sector; `min(1000, D/3)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DosOptions {
    pub bin_width_over_j: f64,
}

impl Default for DosOptions {
    fn default() -> Self {
        DosOptions { bin_width_over_j: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigentropyOptions {
    pub fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<usize>,
}

impl Default for EigentropyOptions {
    fn default() -> Self {
        EigentropyOptions { fraction: 0.33, cut: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SffOptions {
    pub degree: usize,
    pub tau_min: f64,
    pub tau_max: f64,
    pub per_decade: usize,
}

impl Default for SffOptions {
    fn default() -> Self {
        SffOptions {
            degree: 6,
            tau_min: 1e-4,
            tau_max: 10.0,
            per_decade: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThoulessOptions {
    pub site: usize,
    /// `w / 10` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
    pub fraction: f64,
}

impl Default for ThoulessOptions {
    fn default() -> Self {
        ThoulessOptions {
            site: 1,
            strength: None,
            fraction: 0.33,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchOptions {
    /// `"vacuum"` or an explicit configuration such as `"1010"` (site 1 first).
    pub initial: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<usize>,
}

impl Default for QuenchOptions {
    fn default() -> Self {
        QuenchOptions {
            initial: "vacuum".into(),
            cut: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpsOptions {
    pub dlog: f64,
    pub min_step: f64,
    pub anchor_shift: f64,
    /// Gaussian smoothing width in decades applied before detection.
    pub sigma: f64,
    pub bins_per_decade: usize,
    pub t_lo: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_hi: Option<f64>,
    pub mle: bool,
}

impl Default for JumpsOptions {
    fn default() -> Self {
        JumpsOptions {
            dlog: 0.25,
            min_step: 0.05,
            anchor_shift: 0.0,
            sigma: 0.1,
            bins_per_decade: 4,
            t_lo: 1e2,
            t_hi: None,
            mle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DptOptions {
    pub orders: Vec<usize>,
    pub convention: DptConvention,
}

impl Default for DptOptions {
    fn default() -> Self {
        DptOptions {
            orders: vec![1, 2, 3],
            convention: DptConvention::Standard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub plot: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xxz: Option<XxzBlock>,
    #[serde(default)]
    pub sectors: SectorsBlock,
    #[serde(default)]
    pub time: TimeBlock,
    #[serde(default)]
    pub rstat: RstatOptions,
    #[serde(default)]
    pub dos: DosOptions,
    #[serde(default)]
    pub eigentropy: EigentropyOptions,
    #[serde(default)]
    pub sff: SffOptions,
    #[serde(default)]
    pub thouless: ThoulessOptions,
    #[serde(default)]
    pub quench: QuenchOptions,
    #[serde(default)]
    pub jumps: JumpsOptions,
    #[serde(default)]
    pub dpt_compare: DptOptions,
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

/// Configuration error, anchored to a line of the source file when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: Option<PathBuf>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.file, self.line) {
            (Some(p), Some(l)) => write!(f, "{}:{}: {}", p.display(), l, self.message),
            (Some(p), None) => write!(f, "{}: {}", p.display(), self.message),
            (None, Some(l)) => write!(f, "line {}: {}", l, self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Source text kept alongside a parsed config to anchor later errors.
#[derive(Debug, Clone, Default)]
pub struct Source {
    pub path: Option<PathBuf>,
    pub text: String,
}

impl Source {
    /// 1-based line of `key = ...` inside `[section]` (top level when
    /// `section` is empty).
    pub fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        let mut current = String::new();
        for (i, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix('[') {
                current = rest.trim_end_matches(']').trim().to_string();
                if key.is_empty() && current == section {
                    return Some(i + 1);
                }
                continue;
            }
            if current == section && !key.is_empty() {
                if let Some((k, _)) = line.split_once('=') {
                    if k.trim().trim_matches('"') == key {
                        return Some(i + 1);
                    }
                }
            }
        }
        None
    }

    pub fn error(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            file: self.path.clone(),
            line: self.line_of(section, key).or_else(|| self.line_of(section, "")),
            message: message.into(),
        }
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_str(text: &str, path: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str::<ExperimentConfig>(text).map_err(|e| ConfigError {
        file: path.map(Path::to_path_buf),
        line: e.span().map(|s| line_of_offset(text, s.start)),
        message: e.message().to_string(),
    })
}

pub fn load(path: &Path) -> Result<(ExperimentConfig, Source), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        file: Some(path.to_path_buf()),
        line: None,
        message: format!("cannot read config: {e}"),
    })?;
    let cfg = parse_str(&text, Some(path))?;
    Ok((
        cfg,
        Source {
            path: Some(path.to_path_buf()),
            text,
        },
    ))
}

/// Command-line overrides; each replaces one config key.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub task: Option<Task>,
    pub n: Option<Vec<usize>>,
    pub j: Option<Vec<f64>>,
    pub w: Option<f64>,
    pub theta: Option<f64>,
    pub m: Option<f64>,
    pub sectors: Option<usize>,
    pub seed: Option<u64>,
    pub tmax: Option<f64>,
    pub plot: bool,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Builds a config from an optional file and the overrides.
pub fn resolve(file: Option<(ExperimentConfig, Source)>, ov: &Overrides) -> Result<(ExperimentConfig, Source), ConfigError> {
    let (mut cfg, src) = match file {
        Some(x) => x,
        None => {
            let task = ov.task.ok_or_else(|| ConfigError {
                file: None,
                line: None,
                message: "no config file given and no --task".into(),
            })?;
            let text = format!("task = \"{}\"\n", task.name());
            (parse_str(&text, None)?, Source::default())
        }
    };
    if let Some(t) = ov.task {
        cfg.task = t;
    }
    if ov.n.is_some() || ov.j.is_some() || ov.w.is_some() || ov.theta.is_some() || ov.m.is_some() {
        if cfg.model.is_none() && cfg.xxz.is_some() {
            if let Some(n) = &ov.n {
                cfg.xxz.as_mut().unwrap().n = n[0];
            }
        } else {
            let m = cfg.model.get_or_insert(ModelBlock {
                n: OneOrMany::One(0),
                j: OneOrMany::One(f64::NAN),
                w: 1.0,
                m: 0.0,
                theta: pi(),
                theta_over_pi: None,
                j_zz: None,
                j_q: None,
            });
            if let Some(n) = &ov.n {
                m.n = OneOrMany::from_vec(n.clone());
            }
            if let Some(j) = &ov.j {
                m.j = OneOrMany::from_vec(j.clone());
            }
            if let Some(w) = ov.w {
                m.w = w;
            }
            if let Some(t) = ov.theta {
                m.theta = t;
                m.theta_over_pi = None;
            }
            if let Some(x) = ov.m {
                m.m = x;
            }
        }
    }
    if let Some(s) = ov.sectors {
        cfg.sectors.count = s;
    }
    if let Some(s) = ov.seed {
        cfg.sectors.master_seed = s;
    }
    if let Some(t) = ov.tmax {
        cfg.time.tmax = t;
    }
    if ov.plot {
        cfg.plot = true;
    }
    if let Some(w) = ov.workers {
        cfg.workers = Some(w);
    }
    if let Some(o) = &ov.out {
        cfg.out = o.clone();
    }
    if let Some(m) = cfg.model.as_mut() {
        if let Some(k) = m.theta_over_pi.take() {
            m.theta = k * pi();
        }
    }
    validate(&cfg, &src)?;
    Ok((cfg, src))
}

/// One `(N, J)` point of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "J")]
    pub j: f64,
}

impl ExperimentConfig {
    /// Sweep points in config order, `N` outermost. For the XXZ chain `J`
    /// carries the disorder strength.
    pub fn points(&self) -> Vec<Point> {
        if let Some(m) = &self.model {
            let mut out = Vec::new();
            for n in m.n.values() {
                for j in m.j.values() {
                    out.push(Point { n, j });
                }
            }
            out
        } else if let Some(x) = &self.xxz {
            vec![Point { n: x.n, j: x.disorder }]
        } else {
            Vec::new()
        }
    }

    pub fn params(&self, p: Point) -> Option<ModelParams> {
        self.model.as_ref().map(|m| {
            ModelParams::new(p.n, p.j)
                .with_w(m.w)
                .with_mass(m.m)
                .with_theta(m.theta)
        })
    }

    pub fn xxz_params(&self) -> Option<XxzParams> {
        self.xxz.as_ref().map(|x| XxzParams {
            n: x.n,
            j_xy: x.j_xy,
            j_z: x.j_z,
            disorder: x.disorder,
            kind: x.kind,
        })
    }

    /// Hopping scale used to express times as `w t`.
    pub fn hopping(&self) -> f64 {
        match (&self.model, &self.xxz) {
            (Some(m), _) => m.w,
            (None, Some(x)) => x.j_xy,
            _ => 1.0,
        }
    }

    /// Canonical TOML of the settings that affect numbers.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.workers = None;
        c.plot = false;
        toml::to_string(&c).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn validate(cfg: &ExperimentConfig, src: &Source) -> Result<(), ConfigError> {
    match (&cfg.model, &cfg.xxz) {
        (None, None) => return Err(src.error("", "task", "either a [model] or an [xxz] block is required")),
        (Some(_), Some(_)) => return Err(src.error("xxz", "", "[model] and [xxz] are mutually exclusive")),
        _ => {}
    }
    if let Some(m) = &cfg.model {
        for n in m.n.values() {
            if n % 2 != 0 || !(4..=16).contains(&n) {
                return Err(src.error("model", "N", format!("N must be even and in 4..=16, got {n}")));
            }
        }
        if m.n.values().is_empty() || m.j.values().is_empty() {
            return Err(src.error("model", "N", "empty sweep"));
        }
        for j in m.j.values() {
            if !(j >= 0.0 && j.is_finite()) {
                return Err(src.error("model", "J", format!("J must be finite and non-negative, got {j}")));
            }
        }
        for p in cfg.points() {
            cfg.params(p)
                .unwrap()
                .validate()
                .map_err(|e| src.error("model", "theta", e.to_string()))?;
        }
        for (key, v) in [("j_zz", m.j_zz), ("j_q", m.j_q)] {
            if v.is_some_and(|x| !x.is_finite()) {
                return Err(src.error("model", key, format!("{key} must be finite")));
            }
        }
        if cfg.task.needs_towers() {
            let p = cfg.params(cfg.points()[0]).unwrap();
            let int = |x: Option<f64>| x.is_none_or(|x| x.fract() == 0.0);
            if !p.has_integer_towers() || !int(m.j_zz) || !int(m.j_q) {
                return Err(src.error(
                    "model",
                    "theta",
                    format!("task {} needs m = 0, integer theta/pi and integer j_zz, j_q", cfg.task),
                ));
            }
        }
    }
    if let Some(x) = &cfg.xxz {
        if x.n % 2 != 0 || !(4..=16).contains(&x.n) {
            return Err(src.error("xxz", "N", format!("N must be even and in 4..=16, got {}", x.n)));
        }
        if !(x.disorder >= 0.0) {
            return Err(src.error("xxz", "disorder", "disorder must be non-negative"));
        }
        if cfg.task.needs_towers() {
            return Err(src.error("", "task", format!("task {} is defined for the Schwinger chain only", cfg.task)));
        }
    }
    if cfg.points().len() > 1 && !cfg.task.allows_sweep() {
        return Err(src.error("model", "J", format!("task {} takes a single (N, J) point", cfg.task)));
    }
    if cfg.sectors.count == 0 {
        return Err(src.error("sectors", "count", "at least one sector is required"));
    }
    if cfg.task == Task::Sff && cfg.sectors.count < 2 {
        return Err(src.error("sectors", "count", "the connected form factor needs at least two sectors"));
    }
    if cfg.workers == Some(0) {
        return Err(src.error("", "workers", "workers must be positive"));
    }
    let t = &cfg.time;
    if !(t.tmin > 0.0 && t.tmax > t.tmin && t.per_decade > 0) {
        return Err(src.error("time", "tmax", "time grid needs 0 < tmin < tmax and per_decade > 0"));
    }
    let n_max = cfg.points().iter().map(|p| p.n).max().unwrap_or(0);
    let check_cut = |section: &str, cut: Option<usize>| match cut {
        Some(c) if c == 0 || c >= n_max.max(1) => Err(src.error(section, "cut", format!("cut must lie in 1..N, got {c}"))),
        _ => Ok(()),
    };
    check_cut("eigentropy", cfg.eigentropy.cut)?;
    check_cut("quench", cfg.quench.cut)?;
    let f = cfg.eigentropy.fraction;
    if !(f > 0.0 && f <= 1.0) {
        return Err(src.error("eigentropy", "fraction", "fraction must lie in (0, 1]"));
    }
    let f = cfg.thouless.fraction;
    if !(f > 0.0 && f <= 1.0) {
        return Err(src.error("thouless", "fraction", "fraction must lie in (0, 1]"));
    }
    if !(1..=n_max).contains(&cfg.thouless.site) {
        return Err(src.error("thouless", "site", "perturbation site out of range"));
    }
    if cfg.task == Task::Dos && cfg.points().iter().any(|p| p.j <= 0.0) {
        return Err(src.error("model", "J", "the E/J histogram needs J > 0"));
    }
    if !(cfg.dos.bin_width_over_j > 0.0) {
        return Err(src.error("dos", "bin_width_over_j", "bin width must be positive"));
    }
    let s = &cfg.sff;
    if !(s.tau_min > 0.0 && s.tau_max > s.tau_min && s.per_decade > 0 && s.degree >= 1) {
        return Err(src.error("sff", "tau_min", "sff needs 0 < tau_min < tau_max, per_decade > 0, degree >= 1"));
    }
    let j = &cfg.jumps;
    if !(j.dlog > 0.0 && j.min_step > 0.0 && j.sigma >= 0.0 && j.bins_per_decade > 0 && j.t_lo > 0.0) {
        return Err(src.error("jumps", "dlog", "jump options must be positive"));
    }
    let d = &cfg.dpt_compare;
    if d.orders.is_empty() || d.orders.iter().any(|&o| o > 3) {
        return Err(src.error("dpt_compare", "orders", "orders must be a non-empty subset of 0..=3"));
    }
    if cfg.quench.initial != "vacuum" {
        let c = SpinConfig::parse(&cfg.quench.initial).map_err(|e| src.error("quench", "initial", e.to_string()))?;
        if cfg.quench.initial.len() != n_max || c.popcount() as usize * 2 != n_max {
            return Err(src.error("quench", "initial", "initial configuration must have N sites at half filling"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(text: &str) -> Source {
        Source {
            path: None,
            text: text.into(),
        }
    }

    #[test]
    fn minimal_config() {
        let text = "task = \"rstat\"\n[model]\nN = 8\nJ = [0.1, 5.0]\n";
        let cfg = parse_str(text, None).unwrap();
        let (cfg, _) = resolve(Some((cfg, src(text))), &Overrides::default()).unwrap();
        assert_eq!(cfg.points().len(), 2);
        assert_eq!(cfg.model.as_ref().unwrap().theta, std::f64::consts::PI);
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let text = "task = \"rstat\"\n[model]\nN = 8\nJ = 1.0\nbogus = 3\n";
        let e = parse_str(text, None).unwrap_err();
        assert_eq!(e.line, Some(5), "{e}");
    }

    #[test]
    fn semantic_error_reports_its_line() {
        let text = "task = \"rstat\"\n\n[model]\nJ = 1.0\nN = 7\n";
        let cfg = parse_str(text, None).unwrap();
        let e = resolve(Some((cfg, src(text))), &Overrides::default()).unwrap_err();
        assert_eq!(e.line, Some(5), "{e}");
    }

    #[test]
    fn overrides_replace_keys() {
        let text = "task = \"rstat\"\n[model]\nN = 8\nJ = 1.0\n";
        let ov = Overrides {
            task: Some(Task::Dos),
            j: Some(vec![5.0]),
            sectors: Some(7),
            seed: Some(3),
            ..Default::default()
        };
        let (cfg, _) = resolve(Some((parse_str(text, None).unwrap(), src(text))), &ov).unwrap();
        assert_eq!(cfg.task, Task::Dos);
        assert_eq!(cfg.points(), vec![Point { n: 8, j: 5.0 }]);
        assert_eq!((cfg.sectors.count, cfg.sectors.master_seed), (7, 3));
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let text = "task = \"rstat\"\n[model]\nN = 8\nJ = 1.0\n";
        let a = parse_str(text, None).unwrap();
        let mut b = a.clone();
        b.workers = Some(4);
        b.out = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.sectors.master_seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn canonical_round_trip() {
        let text = "task = \"jumps\"\n[model]\nN = 8\nJ = 5.0\ntheta_over_pi = 1\n";
        let (cfg, _) = resolve(Some((parse_str(text, None).unwrap(), src(text))), &Overrides::default()).unwrap();
        let back = parse_str(&cfg.canonical(), None).unwrap();
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn sweeps_only_where_allowed() {
        let text = "task = \"quench\"\n[model]\nN = 8\nJ = [1.0, 2.0]\n";
        let e = resolve(Some((parse_str(text, None).unwrap(), src(text))), &Overrides::default()).unwrap_err();
        assert_eq!(e.line, Some(4));
    }
}

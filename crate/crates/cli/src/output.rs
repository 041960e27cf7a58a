//! Result files: atomic CSV/JSON writes and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Point;

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// CSV text built row by row; floats use the shortest round-trip form.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    columns: usize,
}

pub enum Cell<'a> {
    F(f64),
    I(i64),
    U(u64),
    S(&'a str),
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.columns);
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::F(x) => write!(self.text, "{x}"),
                Cell::I(x) => write!(self.text, "{x}"),
                Cell::U(x) => write!(self.text, "{x}"),
                Cell::S(x) => write!(self.text, "{x}"),
            }
            .unwrap();
        }
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        write_atomic(path, self.text.as_bytes())
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectorStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorRecord {
    pub index: usize,
    pub seed: u64,
    pub status: SectorStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    #[serde(flatten)]
    pub point: Point,
    pub sectors: Vec<SectorRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Partial,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub task: String,
    pub config_hash: String,
    /// Canonical TOML of the numerical settings.
    pub config: String,
    pub master_seed: u64,
    pub status: RunStatus,
    pub started_unix: u64,
    pub wall_time_s: f64,
    pub workers: usize,
    pub points: Vec<PointRecord>,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

pub const MANIFEST: &str = "manifest.json";

impl Manifest {
    pub fn load(path: &Path) -> io::Result<Manifest> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    pub fn save(&self, dir: &Path) -> io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        write_atomic(&dir.join(MANIFEST), text.as_bytes())
    }
}

/// Location of one sector's result file.
pub fn sector_path(dir: &Path, point: usize, index: usize) -> PathBuf {
    dir.join("sectors").join(format!("p{point:03}_s{index:05}.json"))
}

/// Charge sectors of one system size, one `seed,q_1,...,q_N` line each.
pub fn sectors_file(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("sectors_N{n}.txt"))
}

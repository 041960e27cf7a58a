use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("eigensolver failed to converge for sector seed {seed:#018x}")]
    Eigensolver { seed: u64 },

    #[error("spins at bond {bond} are aligned; exchange is undefined")]
    AlignedBond { bond: usize },

    #[error("zero energy denominator between towers {a} and {b}")]
    ZeroDenominator { a: i64, b: i64 },

    #[error("exact tower labels unavailable: {0}")]
    NoTowerLabels(&'static str),

    #[error("phase reduction lost precision: error bound {bound:.3e} rad at t = {time:.3e}")]
    PhasePrecision { time: f64, bound: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit did not converge: {0}")]
    NoConvergence(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

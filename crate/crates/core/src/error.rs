use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("incompatible grids: fine n={fine} is not divisible by coarse N={coarse}")]
    IncompatibleGrids { fine: usize, coarse: usize },

    #[error("coarse edge {0} is not an interior edge")]
    NotInterior(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parse error in {path:?} line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("unknown example source {0} (expected 1 or 2)")]
    UnknownExample(u32),

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownName {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("rank deficiency beyond drop tolerance: {0}")]
    RankDeficient(String),

    #[error("{what} = {value} out of range {range}")]
    OutOfRange {
        what: &'static str,
        value: String,
        range: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("zero-norm reference vector in {0}")]
    ZeroNorm(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable, machine-readable error class used for CLI exit reporting.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidMesh(_) | Error::IncompatibleGrids { .. } | Error::NotInterior(_) => {
                "mesh"
            }
            Error::DimensionMismatch { .. } | Error::Parse { .. } => "input",
            Error::UnknownExample(_)
            | Error::UnknownName { .. }
            | Error::OutOfRange { .. }
            | Error::Config(_) => "config",
            Error::NotPositiveDefinite(_)
            | Error::NoConvergence { .. }
            | Error::RankDeficient(_)
            | Error::ZeroNorm(_) => "solver",
            Error::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            "config" => 2,
            "mesh" | "input" => 3,
            "solver" => 4,
            "io" => 5,
            _ => 1,
        }
    }
}

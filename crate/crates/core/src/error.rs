use num_complex::Complex64;
use thiserror::Error;

use crate::scenario::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("coincident dipole positions at ({x}, {y})")]
    CoincidentPositions { x: f64, y: f64 },

    #[error("invalid scenario: {}", format_diagnostics(.0))]
    InvalidScenario(Vec<Diagnostic>),

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{what} is singular or ill-conditioned (reciprocal condition estimate {rcond:.3e})")]
    Conditioning { what: &'static str, rcond: f64 },

    #[error("eigendecomposition of the secondary block failed: {0}")]
    Diagonalization(String),

    #[error("shift {lambda} lies within the resonance guard of eigenvalue #{index} ({eigenvalue})")]
    Resonance {
        lambda: Complex64,
        index: usize,
        eigenvalue: Complex64,
    },

    #[error("low-rank update inner matrix is singular (reciprocal condition estimate {rcond:.3e})")]
    UpdateSingular { rcond: f64 },

    #[error("dipole {index} is not a primary dipole")]
    NotPrimary { index: usize },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("position #{position} ({x}, {y}) collides with dipole {other}")]
    Collision {
        position: usize,
        x: f64,
        y: f64,
        other: usize,
    },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an error with the name of the update stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Conditioning { .. }
            | Error::Diagonalization(_)
            | Error::Resonance { .. }
            | Error::UpdateSingular { .. } => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

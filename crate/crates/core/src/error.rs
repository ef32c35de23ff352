use std::path::PathBuf;

use crate::field::FieldKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid size {0}: must be even and within 8..=512")]
    InvalidGrid(usize),

    #[error("kind violation: {op} is not defined for {kinds:?}")]
    KindViolation {
        op: &'static str,
        kinds: Vec<FieldKind>,
    },

    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("invalid group descriptor {name}: {detail}")]
    InvalidDescriptor { name: String, detail: String },

    #[error("field is not subalgebra-valued (off-subalgebra residual {residual:e})")]
    NotInSubalgebra { residual: f64 },

    #[error("holomorphic projection did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("no spectral gap: singular values {values:?} do not separate at ({low:e}, {high:e})")]
    NoSpectralGap {
        values: Vec<f64>,
        low: f64,
        high: f64,
    },

    #[error("numerical failure at step {step}: non-finite state")]
    NumericalFailure { step: u64 },

    #[error("pair is not critical: gradient norm {grad_norm:e} exceeds {limit:e}")]
    NotCritical { grad_norm: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("checkpoint {path}: {detail}")]
    Checkpoint { path: PathBuf, detail: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Attaches a path to an I/O error.
pub fn io_at(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

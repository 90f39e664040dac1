use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Nodal synthesis produced an imaginary part above tolerance, which means the
    /// coefficient vector lost conjugate symmetry somewhere upstream.
    #[error("imaginary residue {residue:.3e} exceeds tolerance {tolerance:.3e}")]
    ImaginaryResidue { residue: f64, tolerance: f64 },

    #[error(
        "blow-up at step {step}: nodal sup-norm {sup_norm:.3e} (time step {step_size:.3e} vs \
         stability bound {bound:.3e} with running sigma_max {sigma_max:.3e})"
    )]
    Instability {
        step: usize,
        sup_norm: f64,
        step_size: f64,
        bound: f64,
        sigma_max: f64,
    },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("reference self-convergence gate failed: residual {residual:.3e} >= {threshold:.3e}")]
    ReferenceGate { residual: f64, threshold: f64 },

    #[error("reference cache: {0}")]
    Cache(String),

    #[error("refusing to overwrite {0} (use force)")]
    Exists(PathBuf),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

/// Errors shared across the solver and diagnostic layers.
#[derive(Error, Debug)]
pub enum Error {
    #[error("input field has non-zero mean {mean:.3e} (tolerance {tol:.3e}); upstream identity violated")]
    NonZeroMean { mean: f64, tol: f64 },

    #[error("deformation gradient near-singular: min |det| = {min_det:.3e} < 0.5; displacement too large for the small-data regime")]
    NearSingular { min_det: f64 },

    #[error("pressure iteration did not converge: residual {residual:.3e} after {iters} iterations (tol {tol:.3e})")]
    NoConvergence { residual: f64, iters: usize, tol: f64 },

    #[error("constraint drift {drift:.3e} exceeds tolerance {tol:.3e} at t = {t}")]
    DriftExceeded { drift: f64, tol: f64, t: f64 },

    #[error("initial data support radius {radius:.3} exceeds {limit:.3} (0.6 L)")]
    SupportViolation { radius: f64, limit: f64 },

    #[error("history holds {available} usable samples around t = {t}, need {needed}")]
    InsufficientHistory { t: f64, available: usize, needed: usize },

    #[error("multi-index order {requested} exceeds available jet order {max}")]
    OrderExceeded { requested: usize, max: usize },

    #[error("energy series has {available} samples, need {needed} for the difference stencil")]
    InsufficientSamples { available: usize, needed: usize },

    #[error("region kind {kind:?} invalid here: {reason}")]
    BadRegionKind { kind: &'static str, reason: String },

    #[error("config error in field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

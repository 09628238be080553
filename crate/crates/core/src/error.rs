use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the geometry kernels, integrators and checks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("hull of the input is {found}-dimensional in R^{ambient}")]
    DegenerateInput { ambient: usize, found: usize },
    #[error("unsupported ambient dimension {0} (only 2 and 3)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("cone is not pointed")]
    NonPointedCone,
    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate})")]
    QuadratureNotConverged { tol: f64, estimate: f64 },
    #[error("invalid mixed index spec: {0}")]
    SpecInvalid(String),
    #[error("clique enumeration exceeded the cap of {0} cliques")]
    CliqueBudgetExceeded(usize),
    #[error("Hausdorff gap {gap:e} still above {target:e} with {dirs} directions")]
    DirectionBudgetExceeded { gap: f64, target: f64, dirs: usize },
    #[error("nesting P^(r+1) in P^(r) violated at r={r} by {excess:e}")]
    NestingViolated { r: usize, excess: f64 },
    #[error("projection is not full-dimensional in the target subspace")]
    DegenerateProjection,
    #[error("inconsistent face lattice: {0}")]
    Lattice(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid configuration in {path}: {msg}")]
    ConfigInvalid { path: PathBuf, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("inverse transform left imaginary residue {residual:e} against field magnitude {magnitude:e}")]
    SymmetryViolation { residual: f64, magnitude: f64 },
    #[error("Jacobian determinant reaches {min_det:e}, the map is not a diffeomorphism")]
    DegenerateDiffeo { min_det: f64 },
    #[error("inversion did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("bump radius {radius:e} is below the resolvable minimum {min_radius:e}")]
    UnresolvableBump { radius: f64, min_radius: f64 },
    #[error("cannot normalize a zero field")]
    ZeroField,
    #[error("Sobolev index s = {0} must exceed 2")]
    InvalidSobolevIndex(f64),
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error("initial velocity is not divergence free (L2 divergence {0:e})")]
    DivergentData(f64),
    #[error("CFL guard at t = {t}: max|v| dt = {courant:e} exceeds {limit:e}")]
    CflViolation { t: f64, courant: f64, limit: f64 },
    #[error("blowup detected at t = {t}: {reason}")]
    BlowupDetected { t: f64, reason: String },
    #[error("degenerate probe direction: derivative magnitude {0:e}")]
    DegenerateDirection(f64),
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

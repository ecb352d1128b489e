use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("frequency {0:?} is outside the hyperbolic region")]
    NotHyperbolic(Vec<f64>),

    #[error("branch tracking failed for mode {mode}: {detail}")]
    BranchTracking { mode: usize, detail: String },

    #[error("near-imaginary eigenvalue (|Re| = {0:.3e}) in stable subspace computation")]
    NearImaginary(f64),

    #[error("stable subspace has dimension {found}, expected {expected}")]
    StableDimension { found: usize, expected: usize },

    #[error("reflection matrix is singular (min singular value {0:.3e})")]
    SingularReflection(f64),

    #[error("CFL violation: Courant number {0:.3} exceeds 1")]
    Cfl(f64),

    #[error("pre-shock horizon exceeded: max|d_theta v| * horizon = {0:.3}")]
    PreShockHorizon(f64),

    #[error("Picard iteration is not contracting ({0}); reduce the horizon")]
    NonContraction(String),

    #[error("boundary Newton iteration failed at t = {t:.6}: residual {residual:.3e}")]
    Newton { t: f64, residual: f64 },

    #[error("solution left the validity ball: |eps u| = {0:.3e}")]
    ValidityBall(f64),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

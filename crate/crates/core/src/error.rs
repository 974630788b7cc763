use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("singular operator: {0}")]
    Singular(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("weight construction failed: {0}")]
    Construction(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("no admissible horizon on [0, {window}]: int K = {int_k:.6e}, int c = {int_c:.6e} at the first step")]
    Horizon { window: f64, int_k: f64, int_c: f64 },

    #[error("instability at step {step}: {reason}")]
    Instability { step: usize, reason: String },

    #[error("Picard iteration is not contracting (rho = {rho:.4} for {streak} consecutive sweeps); try a smaller T")]
    Divergence { rho: f64, streak: usize },

    #[error("expression error: {0}")]
    Expr(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

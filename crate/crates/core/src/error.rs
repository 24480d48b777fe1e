use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("signals live on different grids ({left} vs {right})")]
    GridMismatch { left: String, right: String },

    #[error(
        "shift ({tau}, {nu}) outside the guard region |tau| < {tau_guard}, |nu| < {nu_guard}; \
         the periodic grid would alias the pulse body"
    )]
    OutOfGuard {
        tau: f64,
        nu: f64,
        tau_guard: f64,
        nu_guard: f64,
    },

    #[error("support overflow: {0}")]
    SupportOverflow(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("total weight or trace is {0}, expected 1")]
    NotNormalized(f64),

    #[error("signal norm is {0}, expected a unit-norm pulse")]
    NotUnitNorm(f64),

    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("moments are not centered: C10 = {c10:e}, C01 = {c01:e}")]
    NotCentered { c10: f64, c01: f64 },

    #[error(
        "scattering function is not separable about its centroid (C11 = {0:e}); \
         the symplectic reduction of the cross term is not implemented"
    )]
    NotSeparable(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("format error: {0}")]
    Format(String),
}

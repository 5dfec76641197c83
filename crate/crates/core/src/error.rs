use thiserror::Error;

/// Coarse failure classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Precondition,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("grid mismatch: {left} points vs {right} points")]
    GridMismatch { left: usize, right: usize },
    #[error("derivative order {0} exceeds the available analytic order 8")]
    DerivativeOrder(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate:e})")]
    NonConvergence { iterations: usize, estimate: f64 },
    #[error("ellipticity violated: min b = {min_b:e}, min c = {min_c:e}, {} offending grid points", .points.len())]
    Ellipticity {
        min_b: f64,
        min_c: f64,
        points: Vec<usize>,
    },
    #[error("smallness condition violated: minimum {min_value:e} at {witness}")]
    Smallness { min_value: f64, witness: String },
    #[error("boundary values not zero: left {left:e}, right {right:e}")]
    Endpoint { left: f64, right: f64 },
    #[error("time step {dt:e} exceeds the CFL limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("non-finite values at t = {t}")]
    NonFinite { t: f64 },
    #[error("blow-up at t = {t}: norm {norm:e} exceeds the guard")]
    BlowUp { t: f64, norm: f64 },
    #[error("Kato iteration diverged at sweep {sweep}: increment {increment:e} after {previous:e}")]
    KatoDivergence {
        sweep: usize,
        increment: f64,
        previous: f64,
    },
    #[error("Kato iteration hit the sweep limit {sweeps} with increment {increment:e}")]
    KatoMaxIter { sweeps: usize, increment: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Io(_) | Error::InvalidParameter(_) => {
                ErrorClass::Config
            }
            Error::Ellipticity { .. }
            | Error::Smallness { .. }
            | Error::Endpoint { .. }
            | Error::Cfl { .. }
            | Error::Dimension { .. }
            | Error::GridMismatch { .. }
            | Error::DerivativeOrder(_)
            | Error::Precondition(_) => ErrorClass::Precondition,
            Error::NonConvergence { .. }
            | Error::NonFinite { .. }
            | Error::BlowUp { .. }
            | Error::KatoDivergence { .. }
            | Error::KatoMaxIter { .. } => ErrorClass::Numerical,
        }
    }

    /// Short machine-readable cause tag.
    pub fn cause(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::GridMismatch { .. } => "grid_mismatch",
            Error::DerivativeOrder(_) => "derivative_order",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Ellipticity { .. } => "ellipticity",
            Error::Smallness { .. } => "smallness",
            Error::Endpoint { .. } => "endpoint",
            Error::Cfl { .. } => "cfl",
            Error::NonFinite { .. } => "non_finite",
            Error::BlowUp { .. } => "blow_up",
            Error::KatoDivergence { .. } => "kato_divergence",
            Error::KatoMaxIter { .. } => "kato_max_iter",
            Error::Precondition(_) => "precondition",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Jost integration did not converge at z = {z}: frame norm {norm:.3e} exceeds bound")]
    NonConvergence { z: f64, norm: f64 },

    #[error("Wronskian drift {drift:.3e} at z = {z} exceeds tolerance")]
    WronskianDrift { z: f64, drift: f64 },

    #[error("spectrum obstructed: min |a| = {min_abs_a:.3e}, winding number {winding}")]
    Obstructed { min_abs_a: f64, winding: i64 },

    #[error("Riemann-Hilbert solve did not converge at x = {x}: residual {residual:.3e}")]
    NonConverged { x: f64, residual: f64 },

    #[error("Riemann-Hilbert system is singular at x = {x}")]
    Singular { x: f64 },

    #[error("gauge inconsistent at x = {x}: |M(x;0)_11| = {modulus}")]
    GaugeInconsistent { x: f64, modulus: f64 },

    #[error("time step {dt} incompatible with grid spacing {dx}")]
    IncompatibleStep { dt: f64, dx: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

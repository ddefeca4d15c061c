use std::io;

use thiserror::Error;

/// Errors produced by the acquisition and reconstruction pipeline.
#[derive(Debug, Error)]
pub enum CakeError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("cannot normalize: reference has zero energy on the selected region")]
    Normalization,

    #[error("dual-scale masks need an even number of pixels per block, got d = {0}")]
    BlockParity(usize),

    #[error("unsupported mask: {0}")]
    UnsupportedMask(String),

    #[error("invalid mask weights: alpha = {alpha}, beta = {beta} (alpha^2 + beta^2 = {norm})")]
    InvalidWeights { alpha: f64, beta: f64, norm: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid flow: {0}")]
    InvalidFlow(String),

    #[error("solver diverged at iteration {iteration}: objective = {objective}, step = {step}")]
    Divergence {
        iteration: usize,
        objective: f64,
        step: f64,
    },

    #[error(
        "infeasible constraints after {iterations} iterations: \
         data residual {data_residual:.3e} (bound {data_bound:.3e}), \
         flow residual {flow_residual:.3e} (bound {flow_bound:.3e})"
    )]
    Infeasible {
        iterations: usize,
        data_residual: f64,
        data_bound: f64,
        flow_residual: f64,
        flow_bound: f64,
    },

    #[error("problem too large for dense assembly: {0}")]
    SizeGuard(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, CakeError>;

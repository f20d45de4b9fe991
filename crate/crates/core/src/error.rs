use thiserror::Error;

use crate::map::State;

/// Errors produced by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incidence term has a pole at S = {s} (1 + aS = 0)")]
    Pole { s: f64 },

    #[error("orbit escaped at step {step} (|S|+|I| = {norm:e})")]
    Escaped { step: usize, state: State, norm: f64 },

    #[error("point ({s}, {i}) is not a fixed point (residual {residual:e})")]
    NotFixedPoint { s: f64, i: f64, residual: f64 },

    #[error("no eigenvalue at {expected} (closest distance {distance:e})")]
    NotCritical { expected: f64, distance: f64 },

    #[error("matrix {0} is singular")]
    Singular(&'static str),

    #[error("parameters lie within {radius:e} of the 1:{order} resonance at r = {r_res}")]
    Resonance { order: u32, r_res: f64, radius: f64 },

    #[error("beta = {beta} is not on the Neimark-Sacker boundary beta2 = {beta2}")]
    OffBoundary { beta: f64, beta2: f64 },

    #[error("eigenvalues are real at beta = {beta}")]
    RealEigenvalues { beta: f64 },

    #[error("no positivity region applies to these parameters")]
    NoApplicableRegion,
}

pub type Result<T> = std::result::Result<T, Error>;

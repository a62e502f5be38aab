//! The nonlinear problem `u_tt - L u_tt + A u = f(u)`: window lengths, the
//! Picard map `G`, contraction and uniqueness probes, and continuation with
//! blow-up monitoring.

pub mod continuation;
pub mod fixedpoint;
pub mod nonlinearity;

use thiserror::Error;

pub use continuation::{
    continue_solve, monitor_of, ContinuationReport, RunStatus, SolveWindow, SolverOptions,
    Threshold, SAMPLED_FBAR_SAFETY,
};
pub use fixedpoint::{
    amplitude_m, apply_g, contraction_probe, uniqueness_probe, window_bounds, window_length,
    y2p_spec, yt_distance, yt_norm, PicardLog, PicardSeed, WindowProblem,
};
pub use nonlinearity::{Fbar, FbarKind, Monomial, NonlinearitySpec, FBAR_SAMPLES};

use crate::linear::LinearError;
use crate::operator::TableError;
use crate::spectral::{FieldError, NormError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NonlinearError {
    #[error("expected {expected} components, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("polynomial terms must have one power per component and finite coefficients")]
    BadPolynomial,
    #[error("f(0) must vanish for continuation runs")]
    NonzeroAtOrigin,
    #[error("non-finite value in f(u) at time index {time_index}")]
    NonFinite { time_index: usize },
    #[error("Picard iteration did not converge in {iterations} iterations (ratios {ratios:?})")]
    MaxItersExceeded { iterations: usize, ratios: Vec<f64> },
    #[error("measured contraction factor {0} is not below 1")]
    NotContracting(f64),
    #[error("candidate trace has {got} samples, window needs {expected}")]
    CandidateShape { expected: usize, got: usize },
    #[error("invalid solver options: {0}")]
    BadOptions(&'static str),
    #[error(transparent)]
    Linear(#[from] LinearError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Table(#[from] TableError),
}

//! Linear propagation `u_tt - L u_tt + A u = g` through the per-mode cosine
//! and sine kernels, plus numerical checks of the a-priori estimates.

pub mod estimates;
pub mod propagate;
pub mod trace;

use thiserror::Error;

pub use estimates::{
    symbol_decay_check, verify_linear_estimates, DecayEntry, DecayReport, EstimateReport,
};
pub use propagate::{
    apply_initial_propagators, duhamel_term, propagate_spectral, quadrature_weights, solve_linear,
    solve_with, steps_for, trace_from_spectra,
};
pub use trace::{SolutionTrace, TraceNorms};

use crate::operator::{KernelError, TableError};
use crate::spectral::{FieldError, GridError, NormError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearError {
    #[error("trace needs at least one sample with matching times, states and velocities")]
    EmptyTrace,
    #[error("trace times must be strictly increasing")]
    TimesNotIncreasing,
    #[error("fields, tables or traces live on different grids")]
    GridMismatch,
    #[error("horizon {horizon} is not a non-negative multiple of dt = {dt}")]
    BadTimeGrid { horizon: f64, dt: f64 },
    #[error("need {needed} time samples, got {got}")]
    MissingSamples { needed: usize, got: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

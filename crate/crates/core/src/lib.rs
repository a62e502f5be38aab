//! Fourier pseudospectral solver for abstract Boussinesq-type Cauchy problems.

// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod checks;
pub mod linear;
pub mod nonlinear;
pub mod operator;
pub mod spectral;

//! Periodic spectral discretization: grids, unitary transforms, the elliptic
//! symbol and discrete norms.

pub mod elliptic;
pub mod field;
pub mod grid;
pub mod norms;

pub use elliptic::{check_ellipticity, EllipticError, EllipticForm};
pub use field::{Direction, Field, FieldError, Side};
pub use grid::{GridError, SpectralGrid, MAX_DIMS};
pub use norms::{
    bessel_apply, linf_norm, lp_norm, lsp_norm, norm, pairwise_sum, NormError, NormKind, NormSpec,
    StateNorms,
};

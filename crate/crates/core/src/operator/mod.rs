//! The operator `A`, its frozen per-frequency form `A_xi = A / (1 + L(xi))`,
//! and tabulated cosine/sine kernels.

pub mod kernels;
pub mod resolvent;
pub mod table;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

pub use kernels::{
    cos_sin_matrix, cosine_kernel, cosine_matrix, cosine_scalar, sine_kernel, sine_matrix,
    sine_scalar, CMatrix, KernelError, ModeOperator,
};
pub use resolvent::{resolvent_bound_check, resolvent_violation_at, ResolventReport};
pub use table::{build_kernel_table, KernelTable, PropagatorSet, TableError};

use crate::spectral::EllipticForm;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("matrix operator must be square and non-empty")]
    BadMatrix,
    #[error("weighted operator needs at least one positive weight g_m")]
    BadWeights,
    #[error("operator entries must be finite")]
    NonFinite,
}

/// Scalar Fourier symbol `a(xi)`.
#[derive(Clone)]
pub enum ScalarSymbol {
    /// `a(xi) = |xi|^2`, i.e. `A = -Laplacian`.
    NegLaplacian,
    /// `a(xi) = c`.
    Constant(f64),
    /// Any symbol supplied as a closure of the frequency vector.
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl fmt::Debug for ScalarSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarSymbol::NegLaplacian => write!(f, "NegLaplacian"),
            ScalarSymbol::Constant(c) => write!(f, "Constant({c})"),
            ScalarSymbol::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl ScalarSymbol {
    pub fn eval(&self, xi: &[f64]) -> f64 {
        match self {
            ScalarSymbol::NegLaplacian => xi.iter().map(|x| x * x).sum(),
            ScalarSymbol::Constant(c) => *c,
            ScalarSymbol::Custom(f) => f(xi),
        }
    }
}

/// Realization of the abstract operator `A`.
#[derive(Debug, Clone)]
pub enum OperatorSpec {
    Symbol(ScalarSymbol),
    /// Constant `N x N` matrix acting on `C^N`-valued fields.
    Matrix(CMatrix),
}

impl OperatorSpec {
    pub fn neg_laplacian() -> Self {
        OperatorSpec::Symbol(ScalarSymbol::NegLaplacian)
    }

    pub fn matrix(m: CMatrix) -> Result<Self, OperatorError> {
        if m.nrows() == 0 || !m.is_square() {
            return Err(OperatorError::BadMatrix);
        }
        if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(OperatorError::NonFinite);
        }
        Ok(OperatorSpec::Matrix(m))
    }

    pub fn real_matrix(rows: &[Vec<f64>]) -> Result<Self, OperatorError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(OperatorError::BadMatrix);
        }
        Self::matrix(CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0)))
    }

    /// Weighted system operator `a_mj = g_m 2^{s j}`, `m, j = 1..N`.
    pub fn weighted(g: &[f64], s: f64) -> Result<Self, OperatorError> {
        if g.is_empty() || g.iter().any(|v| !(*v > 0.0)) {
            return Err(OperatorError::BadWeights);
        }
        let n = g.len();
        Self::matrix(CMatrix::from_fn(n, n, |m, j| {
            Complex64::new(g[m] * 2f64.powf(s * (j + 1) as f64), 0.0)
        }))
    }

    /// Number of field components `A` acts on.
    pub fn components(&self) -> usize {
        match self {
            OperatorSpec::Symbol(_) => 1,
            OperatorSpec::Matrix(m) => m.nrows(),
        }
    }

    /// `A_xi = A / (1 + L(xi))`.
    pub fn frozen(&self, form: &EllipticForm, xi: &[f64]) -> ModeOperator {
        let r = 1.0 / (1.0 + form.symbol_unchecked(xi));
        match self {
            OperatorSpec::Symbol(a) => ModeOperator::Scalar(r * a.eval(xi)),
            OperatorSpec::Matrix(m) => ModeOperator::Matrix(m * Complex64::new(r, 0.0)),
        }
    }
}

/// Frozen operator at one lattice frequency.
pub fn build_frozen_operator(a: &OperatorSpec, form: &EllipticForm, xi: &[f64]) -> ModeOperator {
    a.frozen(form, xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_scalar_and_matrix() {
        let id = EllipticForm::identity(1).unwrap();
        let a = OperatorSpec::neg_laplacian();
        assert_eq!(build_frozen_operator(&a, &id, &[1.0]), ModeOperator::Scalar(0.5));
        assert_eq!(build_frozen_operator(&a, &id, &[0.0]), ModeOperator::Scalar(0.0));

        // L(xi) = 3 at xi = sqrt(3)
        let m = OperatorSpec::real_matrix(&[vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let f = build_frozen_operator(&m, &id, &[3f64.sqrt()]);
        let want = ModeOperator::Matrix(
            OperatorSpec::real_matrix(&[vec![0.25, 0.0], vec![0.0, 1.0]])
                .map(|o| match o {
                    OperatorSpec::Matrix(m) => m,
                    _ => unreachable!(),
                })
                .unwrap(),
        );
        assert!(f.max_entry_diff(&want) < 1e-15);
    }

    #[test]
    fn weighted_operator_entries() {
        let op = OperatorSpec::weighted(&[1.0, 3.0], 1.0).unwrap();
        let OperatorSpec::Matrix(m) = op else { panic!() };
        assert_eq!(m[(0, 0)].re, 2.0);
        assert_eq!(m[(0, 1)].re, 4.0);
        assert_eq!(m[(1, 0)].re, 6.0);
        assert_eq!(m[(1, 1)].re, 12.0);
        assert!(OperatorSpec::weighted(&[1.0, -1.0], 1.0).is_err());
        assert!(OperatorSpec::weighted(&[], 1.0).is_err());
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(OperatorSpec::real_matrix(&[vec![1.0, 2.0]]).is_err());
        assert!(OperatorSpec::real_matrix(&[vec![f64::NAN]]).is_err());
    }
}

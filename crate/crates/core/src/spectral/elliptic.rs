use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::grid::MAX_DIMS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EllipticError {
    #[error("coefficient matrix must be square n x n with 1 <= n <= 3")]
    BadShape,
    #[error("coefficients must be finite")]
    NonFinite,
    #[error("form is not elliptic: smallest eigenvalue {m1} <= 0")]
    NotElliptic { m1: f64 },
    #[error("frequency has {got} entries, form has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Real symmetric positive-definite second-order form `L(xi) = sum a_ij xi_i xi_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticForm {
    n: usize,
    coeffs: [[f64; MAX_DIMS]; MAX_DIMS],
    m1: f64,
    m2: f64,
}

/// Smallest and largest eigenvalue of the symmetrized matrix.
///
/// Errors with [`EllipticError::NotElliptic`] when the form is not positive definite.
pub fn check_ellipticity(coeffs: &[Vec<f64>]) -> Result<(f64, f64), EllipticError> {
    let sym = symmetrize(coeffs)?;
    let n = coeffs.len();
    let m = DMatrix::from_fn(n, n, |i, j| sym[i][j]);
    let eig = SymmetricEigen::new(m);
    let m1 = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let m2 = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m1 <= 0.0 {
        return Err(EllipticError::NotElliptic { m1 });
    }
    Ok((m1, m2))
}

fn symmetrize(coeffs: &[Vec<f64>]) -> Result<[[f64; MAX_DIMS]; MAX_DIMS], EllipticError> {
    let n = coeffs.len();
    if n == 0 || n > MAX_DIMS || coeffs.iter().any(|row| row.len() != n) {
        return Err(EllipticError::BadShape);
    }
    if coeffs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(EllipticError::NonFinite);
    }
    let mut out = [[0.0; MAX_DIMS]; MAX_DIMS];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = 0.5 * (coeffs[i][j] + coeffs[j][i]);
        }
    }
    Ok(out)
}

impl EllipticForm {
    pub fn new(coeffs: &[Vec<f64>]) -> Result<Self, EllipticError> {
        let (m1, m2) = check_ellipticity(coeffs)?;
        Ok(Self {
            n: coeffs.len(),
            coeffs: symmetrize(coeffs)?,
            m1,
            m2,
        })
    }

    /// `L(xi) = |xi|^2`, the symbol of minus the Laplacian.
    pub fn identity(n: usize) -> Result<Self, EllipticError> {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(&rows)
    }

    pub fn dims(&self) -> usize {
        self.n
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeffs[i][j]
    }

    pub fn symbol(&self, xi: &[f64]) -> Result<f64, EllipticError> {
        if xi.len() != self.n {
            return Err(EllipticError::DimensionMismatch {
                expected: self.n,
                got: xi.len(),
            });
        }
        Ok(self.symbol_unchecked(xi))
    }

    /// Quadratic form on the first `dims()` entries of `xi`.
    pub fn symbol_unchecked(&self, xi: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += self.coeffs[i][j] * xi[i] * xi[j];
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quadratic_form_values() {
        let id = EllipticForm::identity(2).unwrap();
        assert_eq!(id.symbol(&[1.0, 1.0]).unwrap(), 2.0);
        let d = EllipticForm::new(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(d.symbol(&[1.0, 1.0]).unwrap(), 3.0);
        assert_eq!(d.symbol(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(d.symbol(&[1.0]).is_err());
    }

    #[test]
    fn ellipticity_constants() {
        let (m1, m2) = check_ellipticity(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((m1 - 1.0).abs() < 1e-15 && (m2 - 1.0).abs() < 1e-15);
        assert!(matches!(
            check_ellipticity(&[vec![1.0, 0.0], vec![0.0, -1.0]]),
            Err(EllipticError::NotElliptic { .. })
        ));
        assert!(EllipticForm::new(&[vec![1.0, 0.0], vec![0.0, -1.0]]).is_err());
    }

    #[test]
    fn eigenvalues_match_characteristic_polynomial() {
        // roots of lambda^2 - tr lambda + det
        let a: [[f64; 2]; 2] = [[2.0, 1.0], [1.0, 2.0]];
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let disc = (tr * tr - 4.0 * det).sqrt();
        let (lo, hi) = ((tr - disc) / 2.0, (tr + disc) / 2.0);
        assert_eq!((lo, hi), (1.0, 3.0));
        let (m1, m2) = check_ellipticity(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!((m1 - lo).abs() < 1e-14 && (m2 - hi).abs() < 1e-14);
    }

    #[test]
    fn symmetrizes_input() {
        let f = EllipticForm::new(&[vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(f.coeff(0, 1), f.coeff(1, 0));
        assert_eq!(f.coeff(0, 1), 0.5);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(EllipticForm::new(&[]), Err(EllipticError::BadShape));
        assert_eq!(
            EllipticForm::new(&[vec![1.0, 0.0]]),
            Err(EllipticError::BadShape)
        );
        assert!(EllipticForm::identity(4).is_err());
    }

    proptest! {
        #[test]
        fn sandwich_holds(
            a in 0.2f64..3.0, b in 0.2f64..3.0, c in -0.15f64..0.15,
            x in -20.0f64..20.0, y in -20.0f64..20.0,
        ) {
            let form = EllipticForm::new(&[vec![a, c], vec![c, b]]).unwrap();
            let r2 = x * x + y * y;
            prop_assume!(r2 > 1e-8);
            let ratio = form.symbol(&[x, y]).unwrap() / r2;
            prop_assert!(ratio >= form.m1() - 1e-12);
            prop_assert!(ratio <= form.m2() + 1e-12);
        }
    }
}

//! Cosine and sine kernels `C(t) = cos(t M^{1/2})`, `S(t) = M^{-1/2} sin(t M^{1/2})`.
//!
//! Both are entire functions of `M`, evaluated from their even power series
//! so no square root of `M` is ever formed. For matrices the argument is
//! scaled down until `||theta^2 M|| <= 1`, the truncated series is summed, and
//! the result is doubled back up with `C(2θ) = 2C(θ)^2 - I`, `S(2θ) = 2S(θ)C(θ)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kernel argument has non-finite entries")]
    NonFinite,
    #[error("kernel argument is not square")]
    NotSquare,
}

const SERIES_TOL: f64 = 1e-16;
const MAX_TERMS: usize = 60;

/// `cos(t sqrt(m))`; for negative `m` this continues to `cosh(t sqrt(-m))`.
pub fn cosine_scalar(m: f64, t: f64) -> f64 {
    if m >= 0.0 {
        (t * m.sqrt()).cos()
    } else {
        (t * (-m).sqrt()).cosh()
    }
}

/// `sin(t sqrt(m)) / sqrt(m)`, equal to `t` at `m = 0`.
pub fn sine_scalar(m: f64, t: f64) -> f64 {
    if m == 0.0 {
        return t;
    }
    if m > 0.0 {
        let w = m.sqrt();
        (t * w).sin() / w
    } else {
        let w = (-m).sqrt();
        (t * w).sinh() / w
    }
}

fn inf_norm(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check(m: &CMatrix) -> Result<(), KernelError> {
    if !m.is_square() {
        return Err(KernelError::NotSquare);
    }
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(KernelError::NonFinite);
    }
    Ok(())
}

/// Both kernels of a matrix argument at time `t`, sharing one scaling pass.
pub fn cos_sin_matrix(m: &CMatrix, t: f64) -> Result<(CMatrix, CMatrix), KernelError> {
    check(m)?;
    if !t.is_finite() {
        return Err(KernelError::NonFinite);
    }
    let n = m.nrows();
    let id = CMatrix::identity(n, n);
    let size = t * t * inf_norm(m);
    let mut halvings = 0u32;
    if size > 1.0 {
        halvings = (size.log2() / 2.0).ceil().max(0.0) as u32;
        while t * t * inf_norm(m) / 4f64.powi(halvings as i32) > 1.0 {
            halvings += 1;
        }
    }
    let theta = t / 2f64.powi(halvings as i32);
    let x = m * Complex64::new(theta * theta, 0.0);
    let x_norm = inf_norm(&x);

    // C = sum (-1)^k X^k / (2k)!,  S/theta = sum (-1)^k X^k / (2k+1)!
    let mut cos = id.clone();
    let mut sinc = id.clone();
    let mut power = id.clone();
    let mut fact_even = 1.0; // (2k)!
    let mut bound = 1.0; // ||X||^k
    for k in 1..MAX_TERMS {
        power = &power * &x;
        bound *= x_norm;
        fact_even *= ((2 * k - 1) * (2 * k)) as f64;
        let fact_odd = fact_even * (2 * k + 1) as f64;
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        cos += &power * Complex64::new(sign / fact_even, 0.0);
        sinc += &power * Complex64::new(sign / fact_odd, 0.0);
        let scale = inf_norm(&cos).max(inf_norm(&sinc)).max(f64::MIN_POSITIVE);
        if bound / fact_even < SERIES_TOL * scale {
            break;
        }
    }
    let mut sin = sinc * Complex64::new(theta, 0.0);
    for _ in 0..halvings {
        let two = Complex64::new(2.0, 0.0);
        sin = (&sin * &cos) * two;
        cos = (&cos * &cos) * two - &id;
    }
    Ok((cos, sin))
}

pub fn cosine_matrix(m: &CMatrix, t: f64) -> Result<CMatrix, KernelError> {
    cos_sin_matrix(m, t).map(|(c, _)| c)
}

pub fn sine_matrix(m: &CMatrix, t: f64) -> Result<CMatrix, KernelError> {
    cos_sin_matrix(m, t).map(|(_, s)| s)
}

/// Per-mode operator: a scalar symbol value or a constant matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeOperator {
    Scalar(f64),
    Matrix(CMatrix),
}

impl ModeOperator {
    pub fn components(&self) -> usize {
        match self {
            ModeOperator::Scalar(_) => 1,
            ModeOperator::Matrix(m) => m.nrows(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ModeOperator::Scalar(v) => *v == 0.0,
            ModeOperator::Matrix(m) => m.iter().all(|v| v.re == 0.0 && v.im == 0.0),
        }
    }

    /// Entry `(i, j)`; a scalar is treated as `v * I`.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        match self {
            ModeOperator::Scalar(v) => {
                if i == j {
                    Complex64::new(*v, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            ModeOperator::Matrix(m) => m[(i, j)],
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        match self {
            ModeOperator::Scalar(v) => CMatrix::from_element(1, 1, Complex64::new(*v, 0.0)),
            ModeOperator::Matrix(m) => m.clone(),
        }
    }

    /// Largest absolute entry difference; shapes must agree.
    pub fn max_entry_diff(&self, other: &ModeOperator) -> f64 {
        let n = self.components();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.entry(i, j) - other.entry(i, j)).norm());
            }
        }
        worst
    }
}

pub fn cosine_kernel(m: &ModeOperator, t: f64) -> Result<ModeOperator, KernelError> {
    match m {
        ModeOperator::Scalar(v) => finite_scalar(*v, t).map(|_| ModeOperator::Scalar(cosine_scalar(*v, t))),
        ModeOperator::Matrix(a) => cosine_matrix(a, t).map(ModeOperator::Matrix),
    }
}

pub fn sine_kernel(m: &ModeOperator, t: f64) -> Result<ModeOperator, KernelError> {
    match m {
        ModeOperator::Scalar(v) => finite_scalar(*v, t).map(|_| ModeOperator::Scalar(sine_scalar(*v, t))),
        ModeOperator::Matrix(a) => sine_matrix(a, t).map(ModeOperator::Matrix),
    }
}

fn finite_scalar(v: f64, t: f64) -> Result<(), KernelError> {
    if v.is_finite() && t.is_finite() {
        Ok(())
    } else {
        Err(KernelError::NonFinite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn real(m: &DMatrix<f64>) -> CMatrix {
        m.map(|v| Complex64::new(v, 0.0))
    }

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        &b * b.transpose()
    }

    /// Eigendecomposition route, independent of the series.
    fn eig_cos_sin(m: &DMatrix<f64>, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let e = SymmetricEigen::new(m.clone());
        let c = DMatrix::from_diagonal(&e.eigenvalues.map(|l| cosine_scalar(l.max(0.0), t)));
        let s = DMatrix::from_diagonal(&e.eigenvalues.map(|l| sine_scalar(l.max(0.0), t)));
        let q = &e.eigenvectors;
        (q * c * q.transpose(), q * s * q.transpose())
    }

    /// Classical RK4 on V'' = -M V with V(0) = I, V'(0) = 0 (cosine) or
    /// V(0) = 0, V'(0) = I (sine).
    fn ode_kernel(m: &DMatrix<f64>, t: f64, sine: bool, steps: usize) -> DMatrix<f64> {
        let n = m.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        let zero = DMatrix::<f64>::zeros(n, n);
        let (mut v, mut w) = if sine { (zero, id) } else { (id, zero) };
        let h = t / steps as f64;
        for _ in 0..steps {
            let f = |v: &DMatrix<f64>, w: &DMatrix<f64>| (w.clone(), -(m * v));
            let (k1v, k1w) = f(&v, &w);
            let (k2v, k2w) = f(&(&v + &k1v * (h / 2.0)), &(&w + &k1w * (h / 2.0)));
            let (k3v, k3w) = f(&(&v + &k2v * (h / 2.0)), &(&w + &k2w * (h / 2.0)));
            let (k4v, k4w) = f(&(&v + &k3v * h), &(&w + &k3w * h));
            v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
            w += (k1w + k2w * 2.0 + k3w * 2.0 + k4w) * (h / 6.0);
        }
        v
    }

    #[test]
    fn zero_argument_gives_identity_and_t() {
        let z = CMatrix::zeros(3, 3);
        let (c, s) = cos_sin_matrix(&z, 0.7).unwrap();
        assert_eq!(c, CMatrix::identity(3, 3));
        assert!(max_diff(&s, &(CMatrix::identity(3, 3) * Complex64::new(0.7, 0.0))) < 1e-16);
        assert_eq!(cosine_scalar(0.0, 3.0), 1.0);
        assert_eq!(sine_scalar(0.0, 0.7), 0.7);
    }

    #[test]
    fn scalar_values_at_pi() {
        assert!((cosine_scalar(1.0, PI) + 1.0).abs() < 1e-15);
        assert!(sine_scalar(1.0, PI).abs() < 1e-15);
        let one = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        let (c, s) = cos_sin_matrix(&one, PI).unwrap();
        assert!((c[(0, 0)].re + 1.0).abs() < 1e-13);
        assert!(s[(0, 0)].norm() < 1e-13);
    }

    #[test]
    fn scalar_sine_matches_ode_oracle() {
        // u'' = -u/2, u(0) = 0, u'(0) = 1, integrated to t = 1
        let m = DMatrix::from_element(1, 1, 0.5);
        let oracle = ode_kernel(&m, 1.0, true, 4000)[(0, 0)];
        let w = 0.5f64.sqrt();
        assert!((oracle - (w).sin() / w).abs() < 1e-13);
        assert!((sine_scalar(0.5, 1.0) - oracle).abs() < 1e-13);
        let mat = sine_matrix(&real(&m), 1.0).unwrap();
        assert!((mat[(0, 0)].re - oracle).abs() < 1e-13);
    }

    #[test]
    fn jordan_block_series_terminates() {
        let j = real(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        for &t in &[0.3, 1.0, 2.5, 7.0] {
            let c = cosine_matrix(&j, t).unwrap();
            let want = real(&DMatrix::from_row_slice(2, 2, &[1.0, -t * t / 2.0, 0.0, 1.0]));
            assert!(max_diff(&c, &want) < 1e-14 * (1.0 + t * t), "t={t}");
            let ode = ode_kernel(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]), t, false, 200);
            assert!(max_diff(&c, &real(&ode)) < 1e-12);
            let s = sine_matrix(&j, t).unwrap();
            let want_s = real(&DMatrix::from_row_slice(2, 2, &[t, -t * t * t / 6.0, 0.0, t]));
            assert!(max_diff(&s, &want_s) < 1e-13 * (1.0 + t * t * t));
        }
    }

    #[test]
    fn matches_eigendecomposition_on_psd_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let m = random_psd(&mut rng, 3) * rng.gen_range(0.1..20.0);
            let t = rng.gen_range(0.0..4.0);
            let (c, s) = cos_sin_matrix(&real(&m), t).unwrap();
            let (ce, se) = eig_cos_sin(&m, t);
            assert!(max_diff(&c, &real(&ce)) < 1e-11);
            assert!(max_diff(&s, &real(&se)) < 1e-11);
        }
    }

    #[test]
    fn dalembert_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let m = real(&random_psd(&mut rng, 3));
        let two = Complex64::new(2.0, 0.0);
        for _ in 0..100 {
            let t = rng.gen_range(-3.0..3.0);
            let s = rng.gen_range(-3.0..3.0);
            let lhs = cosine_matrix(&m, t + s).unwrap() + cosine_matrix(&m, t - s).unwrap();
            let rhs = cosine_matrix(&m, t).unwrap() * cosine_matrix(&m, s).unwrap() * two;
            assert!(max_diff(&lhs, &rhs) < 1e-10);
        }
    }

    #[test]
    fn sine_derivative_is_cosine() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = real(&random_psd(&mut rng, 3));
        let h = 1e-5;
        for &t in &[0.2, 1.1, 2.7] {
            let ds = (sine_matrix(&m, t + h).unwrap() - sine_matrix(&m, t - h).unwrap())
                * Complex64::new(0.5 / h, 0.0);
            assert!(max_diff(&ds, &cosine_matrix(&m, t).unwrap()) < 1e-8);
        }
    }

    #[test]
    fn cosine_solves_second_order_ode() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = real(&random_psd(&mut rng, 3));
        let t = 1.3;
        let residual = |h: f64| {
            let c = |s: f64| cosine_matrix(&m, s).unwrap();
            let second = (c(t + h) - c(t) * Complex64::new(2.0, 0.0) + c(t - h))
                * Complex64::new(1.0 / (h * h), 0.0);
            let r = second + &m * c(t);
            r.iter().map(|v| v.norm()).fold(0.0, f64::max)
        };
        let (r1, r2) = (residual(1e-2), residual(5e-3));
        assert!(r1 < 1e-3);
        // second-order differences: halving h cuts the residual by about 4
        assert!(r1 / r2 > 3.0, "ratio {}", r1 / r2);
    }

    #[test]
    fn one_by_one_matches_scalar_formula() {
        for &(m, t) in &[(0.3, 0.5), (2.0, 3.0), (0.0, 1.2), (50.0, 0.9)] {
            let mm = CMatrix::from_element(1, 1, Complex64::new(m, 0.0));
            let (c, s) = cos_sin_matrix(&mm, t).unwrap();
            assert!((c[(0, 0)].re - cosine_scalar(m, t)).abs() < 1e-13);
            assert!((s[(0, 0)].re - sine_scalar(m, t)).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(f64::NAN, 0.0);
        assert_eq!(cosine_matrix(&m, 1.0), Err(KernelError::NonFinite));
        assert!(cosine_kernel(&ModeOperator::Scalar(f64::INFINITY), 1.0).is_err());
        assert_eq!(
            cosine_matrix(&CMatrix::zeros(2, 3), 1.0),
            Err(KernelError::NotSquare)
        );
    }
}

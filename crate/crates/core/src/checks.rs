//! Sampling checks for the inequality toolbox: Gagliardo-Nirenberg
//! interpolation, composition estimates and the d'Alembert identity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nonlinear::NonlinearitySpec;
use crate::operator::{cosine_matrix, CMatrix, KernelError};
use crate::spectral::{lp_norm, Field, FieldError, NormError, Side};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("incompatible exponents: {0}")]
    BadExponents(String),
    #[error("derivative order {k} outside the supported range")]
    BadOrder { k: usize },
    #[error("nonlinearity has {got} components, field has {expected}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Largest relative change of an empirical constant under one refinement that
/// still counts as stable.
pub const REFINEMENT_TOL: f64 = 0.10;

/// Per-sample ratios of one inequality with their refinement behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    /// Ratio `LHS / RHS-without-constant` of every sample.
    pub samples: Vec<f64>,
    pub worst_ratio: f64,
    /// Smallest constant making every sample hold, i.e. `worst_ratio`.
    pub empirical_constant: f64,
    /// `(resolution, worst ratio at that resolution)`.
    pub refinement_trend: Vec<(usize, f64)>,
    /// All ratios finite and the trend stable within [`REFINEMENT_TOL`].
    pub pass: bool,
}

impl InequalityReport {
    pub fn new(name: &str, samples: Vec<f64>, refinement_trend: Vec<(usize, f64)>) -> Self {
        let worst = samples.iter().copied().fold(0.0, f64::max);
        let finite = samples.iter().all(|v| v.is_finite());
        let stable = refinement_trend.windows(2).all(|w| {
            let (a, b) = (w[0].1, w[1].1);
            a.is_finite() && b.is_finite() && (b - a).abs() <= REFINEMENT_TOL * a.abs().max(b.abs())
        });
        Self {
            name: name.to_string(),
            samples,
            worst_ratio: worst,
            empirical_constant: worst,
            refinement_trend,
            pass: finite && stable,
        }
    }

    /// Recomputes `worst_ratio` from the stored samples.
    pub fn recomputed_worst(&self) -> f64 {
        self.samples.iter().copied().fold(0.0, f64::max)
    }
}

/// `D_axis^order u` by the spectral multiplier `(i xi)^order`, physical side.
/// Odd orders drop the Nyquist mode of that axis.
pub fn spectral_derivative(u: &Field, axis: usize, order: u32) -> Result<Field, CheckError> {
    let grid = *u.grid();
    let hat = match u.side() {
        Side::Physical => u.forward()?,
        Side::Spectral => u.clone(),
    };
    let half = grid.points()[axis] / 2;
    let mut d = hat.apply_multiplier(|flat| {
        let idx = grid.multi_index(flat);
        if order % 2 == 1 && idx[axis] == half {
            0.0
        } else {
            grid.xi(flat)[axis].powi(order as i32)
        }
    })?;
    let phase = Complex64::i().powu(order);
    d.values_mut().iter_mut().for_each(|v| *v *= phase);
    Ok(d.inverse()?)
}

/// `1/r = μ/q + (1-μ)/p` at `μ = i/m`, the scale-invariant endpoint of
/// `1/r = i/n + μ(1/q - m/n) + (1-μ)/p`.
pub fn nirenberg_inverse_r(i: usize, m: usize, n: usize, p: f64, q: f64) -> Result<f64, CheckError> {
    if m == 0 || i > m {
        return Err(CheckError::BadExponents(format!("need 0 <= i <= m, m >= 1 (i={i}, m={m})")));
    }
    if !(p >= 1.0 && q >= 1.0) {
        return Err(CheckError::BadExponents(format!("p={p}, q={q} must be >= 1")));
    }
    if !(m as f64 > n as f64 / q) {
        return Err(CheckError::BadExponents(format!("m={m} must exceed n/q={}", n as f64 / q)));
    }
    let mu = i as f64 / m as f64;
    let inv_r = i as f64 / n as f64 + mu * (1.0 / q - m as f64 / n as f64) + (1.0 - mu) / p;
    if inv_r < -1e-15 {
        return Err(CheckError::BadExponents(format!("1/r = {inv_r} < 0")));
    }
    Ok(inv_r.max(0.0))
}

fn derivative_sum(u: &Field, order: u32, r: f64, q: f64) -> Result<f64, CheckError> {
    let mut total = 0.0;
    for axis in 0..u.grid().n_dims() {
        total += lp_norm(&spectral_derivative(u, axis, order)?, r, q)?;
    }
    Ok(total)
}

/// `|D^i u|_r / (|u|_p^{1-μ} (sum_k |D_k^m u|_q)^μ)` with `μ = i/m`.
///
/// `D^i` is summed over the axes like `D_k^m`; components are combined in
/// `l_q`. Returns 0 for `u = 0`.
pub fn nirenberg_ratio(u: &Field, i: usize, m: usize, p: f64, q: f64) -> Result<f64, CheckError> {
    let n = u.grid().n_dims();
    let inv_r = nirenberg_inverse_r(i, m, n, p, q)?;
    let r = if inv_r == 0.0 { f64::INFINITY } else { 1.0 / inv_r };
    let mu = i as f64 / m as f64;
    let lhs = if i == 0 {
        lp_norm(u, r, q)?
    } else {
        derivative_sum(u, i as u32, r, q)?
    };
    let base = lp_norm(u, p, q)?;
    let top = if mu == 0.0 { 1.0 } else { derivative_sum(u, m as u32, q, q)?.powf(mu) };
    let rhs = base.powf(1.0 - mu) * top;
    Ok(if lhs == 0.0 { 0.0 } else { lhs / rhs })
}

fn frob(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Pointwise map of a physical field through `g`, one component vector at a time.
fn pointwise(u: &Field, comps_out: usize, mut g: impl FnMut(&[f64]) -> Vec<f64>) -> Field {
    let grid = *u.grid();
    let n = grid.len();
    let c = u.components();
    let mut out = Field::zeros(grid, comps_out, Side::Physical);
    let mut x = vec![0.0; c];
    for i in 0..n {
        for j in 0..c {
            x[j] = u.values()[j * n + i].re;
        }
        let y = g(&x);
        for (j, v) in y.into_iter().enumerate() {
            out.values_mut()[j * n + i] = Complex64::new(v, 0.0);
        }
    }
    out
}

/// `sup_x |f^{(j)}(u(x))|` with the Frobenius norm of the derivative tensor.
fn derivative_sup(f: &NonlinearitySpec, u: &Field, j: usize) -> f64 {
    let n = u.grid().len();
    let c = u.components();
    let mut x = vec![0.0; c];
    let mut best: f64 = 0.0;
    for i in 0..n {
        for k in 0..c {
            x[k] = u.values()[k * n + i].re;
        }
        best = best.max(frob(&f.derivative(j, &x)));
    }
    best
}

/// Ratio of the composition estimate, without its constant.
///
/// `k = 0`: `|f(u) - f(0)|_p / (|f'(u)|_inf |u|_p)`.
/// `k >= 1`: `|D^k f(u)|_p / sum_{j=1..k} |f^{(j)}(u)|_inf |u|_inf^{j-1} |D^k u|_p`,
/// derivatives summed over axes. Real data is assumed; imaginary parts are dropped.
pub fn composition_norm_check(
    f: &NonlinearitySpec,
    u: &Field,
    k: usize,
    p: f64,
) -> Result<f64, CheckError> {
    if k > 3 {
        return Err(CheckError::BadOrder { k });
    }
    if f.arity() != u.components() {
        return Err(CheckError::Arity {
            expected: u.components(),
            got: f.arity(),
        });
    }
    let u = match u.side() {
        Side::Physical => u.real_part(),
        Side::Spectral => u.inverse()?.real_part(),
    };
    let c = u.components();
    let f0 = f.eval(&vec![0.0; c]);
    let fu = pointwise(&u, c, |x| {
        f.eval(x).iter().zip(&f0).map(|(a, b)| a - b).collect()
    });
    let (lhs, rhs) = if k == 0 {
        (
            lp_norm(&fu, p, 2.0)?,
            derivative_sup(f, &u, 1) * lp_norm(&u, p, 2.0)?,
        )
    } else {
        let lhs = derivative_sum(&fu, k as u32, p, 2.0)?;
        let dku = derivative_sum(&u, k as u32, p, 2.0)?;
        let uinf = lp_norm(&u, f64::INFINITY, 2.0)?;
        let mut rhs = 0.0;
        for j in 1..=k {
            rhs += derivative_sup(f, &u, j) * uinf.powi(j as i32 - 1) * dku;
        }
        (lhs, rhs)
    };
    Ok(if lhs == 0.0 { 0.0 } else { lhs / rhs })
}

/// `max |C(t+s) + C(t-s) - 2 C(t) C(s)|` entrywise over the pairs, `C(t) = cos(t sqrt(M))`.
pub fn cosine_identity_check(m: &CMatrix, pairs: &[(f64, f64)]) -> Result<f64, CheckError> {
    let mut worst: f64 = 0.0;
    for &(t, s) in pairs {
        let lhs = cosine_matrix(m, t + s)? + cosine_matrix(m, t - s)?;
        let rhs = cosine_matrix(m, t)? * cosine_matrix(m, s)? * Complex64::new(2.0, 0.0);
        worst = (lhs - rhs).iter().fold(worst, |a, v| a.max(v.norm()));
    }
    Ok(worst)
}

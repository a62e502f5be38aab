use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::kernels::CMatrix;
use super::OperatorSpec;

/// Outcome of probing `||(A - λ^2 I)^{-1}|| <= C0 / |Re λ - ω|` on a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventReport {
    /// `max ||(A - λ^2)^{-1}|| |Re λ - ω| - C0`; positive means a violation was witnessed.
    pub max_violation: f64,
    /// Sample at which the maximum was attained, as `(re, im)`.
    pub witness: (f64, f64),
    pub samples: usize,
}

fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// `||(A - λ^2 I)^{-1}|| |Re λ - ω| - C0` at one sample; `+inf` when `λ^2` is an eigenvalue.
pub fn resolvent_violation_at(a: &CMatrix, c0: f64, omega: f64, lambda: Complex64) -> f64 {
    let n = a.nrows();
    let shifted = a - CMatrix::identity(n, n) * (lambda * lambda);
    match shifted.try_inverse() {
        Some(inv) if inv.iter().all(|v| v.re.is_finite() && v.im.is_finite()) => {
            let norm = spectral_norm(&inv);
            if norm.is_finite() {
                norm * (lambda.re - omega).abs() - c0
            } else {
                f64::INFINITY
            }
        }
        _ => f64::INFINITY,
    }
}

fn log_offsets(samples: usize) -> Vec<f64> {
    if samples == 1 {
        return vec![1.0];
    }
    (0..samples)
        .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (samples - 1) as f64))
        .collect()
}

/// Samples `Re λ = ω + 10^e`, `e ∈ [-3, 3]`, and `Im λ ∈ {0, ±10^e}`, `samples`
/// values on each axis. Only the matrix variant of `A` is probed; returns `None`
/// for scalar symbols or `samples == 0`.
pub fn resolvent_bound_check(
    a: &OperatorSpec,
    c0: f64,
    omega: f64,
    samples: usize,
) -> Option<ResolventReport> {
    let OperatorSpec::Matrix(m) = a else {
        return None;
    };
    if samples == 0 {
        return None;
    }
    let offsets = log_offsets(samples);
    let mut imag = vec![0.0];
    for o in log_offsets(samples.saturating_sub(1).max(1) / 2 + 1) {
        imag.push(o);
        imag.push(-o);
    }
    let mut worst = f64::NEG_INFINITY;
    let mut witness = (omega, 0.0);
    let mut count = 0;
    for &dre in &offsets {
        for &im in &imag {
            let lambda = Complex64::new(omega + dre, im);
            let v = resolvent_violation_at(m, c0, omega, lambda);
            count += 1;
            if v > worst {
                worst = v;
                witness = (lambda.re, lambda.im);
            }
        }
    }
    Some(ResolventReport {
        max_violation: worst,
        witness,
        samples: count,
    })
}

//! Discrete Lebesgue and Bessel-potential norms of grid fields.
//!
//! All integrals over the box are midpoint-free lattice sums weighted by the
//! cell volume. The pointwise value norm is `l_q` over components. Reductions
//! use [`pairwise_sum`], whose summation tree only depends on the input length,
//! so results do not depend on how the samples were produced.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::field::{Field, FieldError, Side};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("Lebesgue exponent p = {0} must satisfy p >= 1")]
    BadExponent(f64),
    #[error("inner l_q exponent q = {0} must satisfy q >= 1")]
    BadInnerExponent(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    /// `(sum_x |v(x)|_q^p dV)^{1/p}`.
    Lp(f64),
    /// Grid maximum of `|v(x)|_q`.
    Linf,
    /// `Lp` norm of `(1 + |xi|^2)^{s/2} v_hat`, transformed back.
    Lsp { s: f64, p: f64 },
}

/// Exponents shared by every norm recorded along a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

impl Default for NormSpec {
    fn default() -> Self {
        Self {
            p: 2.0,
            q: 2.0,
            s: 2.0,
        }
    }
}

impl NormSpec {
    pub fn new(p: f64, q: f64, s: f64) -> Self {
        Self { p, q, s }
    }

    pub fn with_s(self, s: f64) -> Self {
        Self { s, ..self }
    }
}

/// Sum with a fixed binary tree over blocks of 32.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `l_q` norm of a component vector.
pub fn lq_norm(values: impl Iterator<Item = f64>, q: f64) -> f64 {
    if q == 2.0 {
        values.map(|v| v * v).sum::<f64>().sqrt()
    } else if q.is_infinite() {
        values.fold(0.0, |m, v| m.max(v.abs()))
    } else if q == 1.0 {
        values.map(f64::abs).sum()
    } else {
        values.map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

fn check_q(q: f64) -> Result<(), NormError> {
    if q >= 1.0 {
        Ok(())
    } else {
        Err(NormError::BadInnerExponent(q))
    }
}

fn check_p(p: f64) -> Result<(), NormError> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(NormError::BadExponent(p))
    }
}

/// Pointwise `l_q` magnitudes of a physical-side field.
pub fn pointwise_magnitudes(field: &Field, q: f64) -> Result<Vec<f64>, NormError> {
    field.ensure_side(Side::Physical)?;
    check_q(q)?;
    let n = field.grid().len();
    let comps = field.components();
    if comps == 1 {
        return Ok(field.values().iter().map(|v| v.norm()).collect());
    }
    Ok((0..n)
        .map(|i| lq_norm((0..comps).map(|c| field.values()[c * n + i].norm()), q))
        .collect())
}

fn lp_of_magnitudes(mags: &[f64], p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        return mags.iter().copied().fold(0.0, f64::max);
    }
    if p == 1.0 {
        return pairwise_sum(mags) * cell;
    }
    // Factor out the maximum so large fields do not overflow under powf.
    let peak = mags.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let terms: Vec<f64> = if p == 2.0 {
        mags.iter().map(|m| (m / peak) * (m / peak)).collect()
    } else {
        mags.iter().map(|m| (m / peak).powf(p)).collect()
    };
    peak * (pairwise_sum(&terms) * cell).powf(1.0 / p)
}

fn physical(field: &Field) -> Result<std::borrow::Cow<'_, Field>, NormError> {
    Ok(match field.side() {
        Side::Physical => std::borrow::Cow::Borrowed(field),
        Side::Spectral => std::borrow::Cow::Owned(field.inverse()?),
    })
}

fn spectral(field: &Field) -> Result<std::borrow::Cow<'_, Field>, NormError> {
    Ok(match field.side() {
        Side::Spectral => std::borrow::Cow::Borrowed(field),
        Side::Physical => std::borrow::Cow::Owned(field.forward()?),
    })
}

/// Discrete `L^p` norm, `1 <= p <= inf`.
pub fn lp_norm(field: &Field, p: f64, q: f64) -> Result<f64, NormError> {
    check_p(p)?;
    let phys = physical(field)?;
    let mags = pointwise_magnitudes(&phys, q)?;
    Ok(lp_of_magnitudes(&mags, p, phys.grid().cell_volume()))
}

pub fn linf_norm(field: &Field, q: f64) -> Result<f64, NormError> {
    lp_norm(field, f64::INFINITY, q)
}

/// Multiplies every mode by `(1 + |xi|^2)^{s/2}`.
pub fn bessel_apply(field: &Field, s: f64) -> Result<Field, NormError> {
    let grid = *field.grid();
    if s == 0.0 {
        field.ensure_side(Side::Spectral)?;
        return Ok(field.clone());
    }
    Ok(field.apply_multiplier(|k| (1.0 + grid.xi_norm_sq(k)).powf(0.5 * s))?)
}

/// Bessel-potential norm `||(I - Laplacian)^{s/2} v||_{L^p}`.
pub fn lsp_norm(field: &Field, s: f64, p: f64, q: f64) -> Result<f64, NormError> {
    check_p(p)?;
    let spec = spectral(field)?;
    let lifted = bessel_apply(&spec, s)?.inverse()?;
    lp_norm(&lifted, p, q)
}

pub fn norm(field: &Field, kind: NormKind, q: f64) -> Result<f64, NormError> {
    match kind {
        NormKind::Lp(p) => lp_norm(field, p, q),
        NormKind::Linf => linf_norm(field, q),
        NormKind::Lsp { s, p } => lsp_norm(field, s, p, q),
    }
}

/// The four norms recorded for a state: `X_1`, `X_p`, `X_inf`, `Y^{s,p}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateNorms {
    pub x1: f64,
    pub xp: f64,
    pub xinf: f64,
    pub ysp: f64,
}

impl StateNorms {
    /// Computes all four norms from a physical field and, when available,
    /// its spectrum (saves one forward transform).
    pub fn compute(
        phys: &Field,
        spectrum: Option<&Field>,
        spec: NormSpec,
    ) -> Result<Self, NormError> {
        check_p(spec.p)?;
        phys.ensure_side(Side::Physical)?;
        let mags = pointwise_magnitudes(phys, spec.q)?;
        let cell = phys.grid().cell_volume();
        let owned;
        let spectrum = match spectrum {
            Some(s) => {
                s.ensure_side(Side::Spectral)?;
                s
            }
            None => {
                owned = phys.forward()?;
                &owned
            }
        };
        let lifted = bessel_apply(spectrum, spec.s)?.inverse()?;
        let lifted_mags = pointwise_magnitudes(&lifted, spec.q)?;
        Ok(Self {
            x1: lp_of_magnitudes(&mags, 1.0, cell),
            xp: lp_of_magnitudes(&mags, spec.p, cell),
            xinf: lp_of_magnitudes(&mags, f64::INFINITY, cell),
            ysp: lp_of_magnitudes(&lifted_mags, spec.p, cell),
        })
    }
}

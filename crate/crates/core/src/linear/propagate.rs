use num_complex::Complex64;
use rayon::prelude::*;

use super::trace::SolutionTrace;
use super::LinearError;
use crate::operator::table::Kernel;
use crate::operator::{KernelTable, OperatorSpec, PropagatorSet};
use crate::spectral::{EllipticForm, Field, NormSpec, Side};

/// Number of uniform steps of size `dt` covering `horizon`.
pub fn steps_for(horizon: f64, dt: f64) -> Result<usize, LinearError> {
    if !(horizon.is_finite() && horizon >= 0.0 && dt.is_finite() && dt > 0.0) {
        return Err(LinearError::BadTimeGrid { horizon, dt });
    }
    let k = (horizon / dt).round();
    if (k * dt - horizon).abs() > 1e-9 * horizon.max(dt) {
        return Err(LinearError::BadTimeGrid { horizon, dt });
    }
    Ok(k as usize)
}

/// Quadrature weights (in units of the step) for `∫_0^{k dt}` on `k + 1` nodes.
///
/// Composite Simpson for even `k`; for odd `k >= 3` Simpson on the first
/// `k - 3` cells and the 3/8 rule on the last three; trapezoid for `k = 1`.
pub fn quadrature_weights(k: usize) -> Vec<f64> {
    let mut w = vec![0.0; k + 1];
    match k {
        0 => {}
        1 => {
            w[0] = 0.5;
            w[1] = 0.5;
        }
        _ => {
            let simpson_cells = if k % 2 == 0 { k } else { k - 3 };
            for c in (0..simpson_cells).step_by(2) {
                w[c] += 1.0 / 3.0;
                w[c + 1] += 4.0 / 3.0;
                w[c + 2] += 1.0 / 3.0;
            }
            if k % 2 == 1 {
                let b = simpson_cells;
                w[b] += 3.0 / 8.0;
                w[b + 1] += 9.0 / 8.0;
                w[b + 2] += 9.0 / 8.0;
                w[b + 3] += 3.0 / 8.0;
            }
        }
    }
    w
}

fn check_pair(phi: &Field, psi: &Field, side: Side) -> Result<(), LinearError> {
    phi.ensure_side(side)?;
    psi.ensure_side(side)?;
    if !phi.same_shape(psi) {
        return Err(LinearError::GridMismatch);
    }
    Ok(())
}

fn check_table(table_grid: &crate::spectral::SpectralGrid, comps: usize, f: &Field) -> Result<(), LinearError> {
    if f.grid() != table_grid || f.components() != comps {
        return Err(LinearError::GridMismatch);
    }
    Ok(())
}

/// `S1(t) φ + S2(t) ψ` with `t = table.dt()`, returned on the physical side.
pub fn apply_initial_propagators(
    table: &KernelTable,
    phi: &Field,
    psi: &Field,
) -> Result<Field, LinearError> {
    check_pair(phi, psi, Side::Physical)?;
    check_table(table.grid(), table.components(), phi)?;
    let phi_hat = phi.forward()?;
    let psi_hat = psi.forward()?;
    let mut out = Field::zeros(*phi.grid(), phi.components(), Side::Spectral);
    table.accumulate(Kernel::Cos, 1.0, phi_hat.values(), out.values_mut());
    table.accumulate(Kernel::Sin, 1.0, psi_hat.values(), out.values_mut());
    Ok(out.inverse()?)
}

/// `r(xi) g_hat(xi)` for each forcing sample.
fn scaled_forcing(set: &PropagatorSet, forcing_hat: &[Field]) -> Vec<Vec<Complex64>> {
    let r = set.at(0).resolvent_factor();
    let n = r.len();
    forcing_hat
        .par_iter()
        .map(|g| {
            let mut v = g.values().to_vec();
            for (i, x) in v.iter_mut().enumerate() {
                *x *= r[i % n];
            }
            v
        })
        .collect()
}

fn duhamel_into(
    set: &PropagatorSet,
    scaled: &[Vec<Complex64>],
    k: usize,
    kernel: Kernel,
    out: &mut [Complex64],
) {
    let dt = set.dt();
    for (j, w) in quadrature_weights(k).into_iter().enumerate() {
        set.at(k - j).accumulate(kernel, w * dt, &scaled[j], out);
    }
}

/// `∫_0^{k dt} S(k dt - τ) r g_hat(τ) dτ` from forcing samples at `j dt`, physical side.
pub fn duhamel_term(set: &PropagatorSet, forcing: &[Field], k: usize) -> Result<Field, LinearError> {
    if k > set.steps() {
        return Err(LinearError::MissingSamples { needed: k + 1, got: set.steps() + 1 });
    }
    if forcing.len() < k + 1 {
        return Err(LinearError::MissingSamples {
            needed: k + 1,
            got: forcing.len(),
        });
    }
    let first = &forcing[0];
    check_table(set.grid(), set.components(), first)?;
    let hats = forcing[..=k]
        .iter()
        .map(|g| {
            g.ensure_same_shape(first)?;
            g.forward()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let scaled = scaled_forcing(set, &hats);
    let mut out = Field::zeros(*first.grid(), first.components(), Side::Spectral);
    duhamel_into(set, &scaled, k, Kernel::Sin, out.values_mut());
    Ok(out.inverse()?)
}

/// Spectra of `u` and `u_t` at every time `j dt` of `set`.
pub fn propagate_spectral(
    set: &PropagatorSet,
    phi_hat: &Field,
    psi_hat: &Field,
    forcing_hat: Option<&[Field]>,
) -> Result<(Vec<Field>, Vec<Field>), LinearError> {
    check_pair(phi_hat, psi_hat, Side::Spectral)?;
    check_table(set.grid(), set.components(), phi_hat)?;
    let steps = set.steps();
    let scaled = match forcing_hat {
        Some(g) => {
            if g.len() < steps + 1 {
                return Err(LinearError::MissingSamples {
                    needed: steps + 1,
                    got: g.len(),
                });
            }
            for f in g {
                f.ensure_side(Side::Spectral)?;
                f.ensure_same_shape(phi_hat)?;
            }
            Some(scaled_forcing(set, &g[..=steps]))
        }
        None => None,
    };
    let grid = *phi_hat.grid();
    let comps = phi_hat.components();
    let rows: Vec<(Field, Field)> = (0..=steps)
        .into_par_iter()
        .map(|k| {
            let table = set.at(k);
            let mut u = Field::zeros(grid, comps, Side::Spectral);
            let mut ut = Field::zeros(grid, comps, Side::Spectral);
            table.accumulate(Kernel::Cos, 1.0, phi_hat.values(), u.values_mut());
            table.accumulate(Kernel::Sin, 1.0, psi_hat.values(), u.values_mut());
            table.accumulate(Kernel::CosRate, 1.0, phi_hat.values(), ut.values_mut());
            table.accumulate(Kernel::Cos, 1.0, psi_hat.values(), ut.values_mut());
            if let Some(scaled) = &scaled {
                duhamel_into(set, scaled, k, Kernel::Sin, u.values_mut());
                duhamel_into(set, scaled, k, Kernel::Cos, ut.values_mut());
            }
            (u, ut)
        })
        .collect();
    Ok(rows.into_iter().unzip())
}

/// Builds a trace from propagated spectra, storing `φ` and `ψ` verbatim at `t = 0`.
pub fn trace_from_spectra(
    spec: NormSpec,
    dt: f64,
    phi: &Field,
    psi: &Field,
    u_hat: Vec<Field>,
    ut_hat: Vec<Field>,
) -> Result<SolutionTrace, LinearError> {
    let n = u_hat.len();
    let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let phys: Vec<(Field, Field)> = u_hat
        .par_iter()
        .zip(ut_hat.par_iter())
        .enumerate()
        .map(|(k, (u, ut))| {
            if k == 0 {
                Ok((phi.clone(), psi.clone()))
            } else {
                Ok((u.inverse()?, ut.inverse()?))
            }
        })
        .collect::<Result<_, LinearError>>()?;
    let (states, velocities): (Vec<_>, Vec<_>) = phys.into_iter().unzip();
    let mut spectra = u_hat;
    spectra[0] = phi.forward()?;
    SolutionTrace::assemble(spec, times, states, velocities, spectra)
}

/// Solves `u_tt - L u_tt + A u = g` on `[0, horizon]` with step `dt`.
///
/// `forcing`, when given, holds physical samples of `g` at every `j dt`.
#[allow(clippy::too_many_arguments)]
pub fn solve_linear(
    a: &OperatorSpec,
    form: &EllipticForm,
    phi: &Field,
    psi: &Field,
    forcing: Option<&[Field]>,
    horizon: f64,
    dt: f64,
    spec: NormSpec,
) -> Result<SolutionTrace, LinearError> {
    check_pair(phi, psi, Side::Physical)?;
    if phi.components() != a.components() {
        return Err(LinearError::GridMismatch);
    }
    let steps = steps_for(horizon, dt)?;
    let set = PropagatorSet::build(a, form, phi.grid(), dt, steps)?;
    solve_with(&set, phi, psi, forcing, spec)
}

/// Same as [`solve_linear`] with prebuilt kernel tables.
pub fn solve_with(
    set: &PropagatorSet,
    phi: &Field,
    psi: &Field,
    forcing: Option<&[Field]>,
    spec: NormSpec,
) -> Result<SolutionTrace, LinearError> {
    check_pair(phi, psi, Side::Physical)?;
    let phi_hat = phi.forward()?;
    let psi_hat = psi.forward()?;
    let forcing_hat = match forcing {
        Some(g) => Some(
            g.par_iter()
                .map(|f| f.forward())
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let (u_hat, ut_hat) = propagate_spectral(set, &phi_hat, &psi_hat, forcing_hat.as_deref())?;
    trace_from_spectra(spec, set.dt(), phi, psi, u_hat, ut_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralGrid;

    #[test]
    fn weights_integrate_polynomials() {
        for k in 1..12 {
            let w = quadrature_weights(k);
            let total: f64 = w.iter().sum();
            assert!((total - k as f64).abs() < 1e-13);
            if k >= 2 {
                // exact for cubics
                let integral: f64 = w.iter().enumerate().map(|(j, wj)| wj * (j as f64).powi(3)).sum();
                assert!((integral - (k as f64).powi(4) / 4.0).abs() < 1e-10, "k={k}");
            }
        }
        assert!(quadrature_weights(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn steps_must_divide_horizon() {
        assert_eq!(steps_for(1.0, 0.25).unwrap(), 4);
        assert!(steps_for(1.0, 0.3).is_err());
        assert!(steps_for(1.0, 0.0).is_err());
        assert_eq!(steps_for(0.0, 0.1).unwrap(), 0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let g1 = SpectralGrid::uniform(1, 8, 1.0).unwrap();
        let g2 = SpectralGrid::uniform(1, 16, 1.0).unwrap();
        let form = EllipticForm::identity(1).unwrap();
        let phi = Field::zeros(g1, 1, Side::Physical);
        let psi = Field::zeros(g2, 1, Side::Physical);
        let r = solve_linear(
            &OperatorSpec::neg_laplacian(),
            &form,
            &phi,
            &psi,
            None,
            1.0,
            0.5,
            NormSpec::default(),
        );
        assert!(matches!(r, Err(LinearError::GridMismatch)));
    }
}

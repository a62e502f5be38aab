use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nonlinearity::NonlinearitySpec;
use super::NonlinearError;
use crate::linear::{propagate_spectral, trace_from_spectra, SolutionTrace};
use crate::operator::PropagatorSet;
use crate::spectral::{Field, NormSpec, Side, StateNorms};

/// Norm settings of the nonlinear theory: `Y^{2,p}` with the given `p`, `q`.
pub fn y2p_spec(p: f64, q: f64) -> NormSpec {
    NormSpec::new(p, q, 2.0)
}

/// `M = |φ|_{Y^{2,p}} + |φ|_inf + |ψ|_{Y^{2,p}} + |ψ|_inf`.
pub fn amplitude_m(phi: &Field, psi: &Field, p: f64, q: f64) -> Result<f64, NonlinearError> {
    let spec = y2p_spec(p, q);
    let a = StateNorms::compute(phi, None, spec)?;
    let b = StateNorms::compute(psi, None, spec)?;
    Ok(a.ysp + a.xinf + b.ysp + b.xinf)
}

/// The two window bounds `1 / ((M+1)(1 + 2 C0 (M+1) fbar))` and
/// `1 / (2 (1 + C1 (M+1)^2 fbar))`.
pub fn window_bounds(m: f64, fbar_m1: f64, c0: f64, c1: f64) -> (f64, f64) {
    let m1 = m + 1.0;
    let b1 = 1.0 / (m1 * (1.0 + 2.0 * c0 * m1 * fbar_m1));
    let b2 = 0.5 / (1.0 + c1 * m1 * m1 * fbar_m1);
    (b1, b2)
}

/// Largest admissible window: the smaller of the two [`window_bounds`].
pub fn window_length(m: f64, fbar_m1: f64, c0: f64, c1: f64) -> f64 {
    let (b1, b2) = window_bounds(m, fbar_m1, c0, c1);
    b1.min(b2)
}

/// `|u|_{Y(T)} = max_t |u|_{Y^{2,p}} + max_t |u|_inf`.
pub fn yt_norm(trace: &SolutionTrace) -> f64 {
    let (y, inf) = trace
        .norms()
        .iter()
        .fold((0.0f64, 0.0f64), |(y, i), n| (y.max(n.u.ysp), i.max(n.u.xinf)));
    y + inf
}

/// `|u_1 - u_2|_{Y(T)}`.
pub fn yt_distance(a: &SolutionTrace, b: &SolutionTrace) -> Result<f64, NonlinearError> {
    Ok(yt_norm(&a.difference(b)?))
}

/// `max_t |u_1 - u_2|_{Y^{2,p}}`.
pub fn uniqueness_probe(a: &SolutionTrace, b: &SolutionTrace) -> Result<f64, NonlinearError> {
    let d = a.difference(b)?;
    Ok(d.norms().iter().fold(0.0, |m, n| m.max(n.u.ysp)))
}

/// Starting iterate of the Picard loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PicardSeed {
    /// The solution of the linear problem with the same data.
    #[default]
    Linear,
    /// The zero trace.
    Zero,
}

/// Iteration log of one Picard solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardLog {
    pub iterations: usize,
    /// `|u_{k+1} - u_k|_{Y(T)}` per iteration.
    pub differences: Vec<f64>,
    /// Successive-difference ratios.
    pub ratios: Vec<f64>,
    /// Sup of `ratios`, 0 when fewer than two differences are positive.
    pub contraction_estimate: f64,
    /// Largest `|u_k|_{Y(T)}` over the iterates.
    pub max_iterate_norm: f64,
    /// All iterates stayed in the ball `|u|_{Y(T)} <= M + 1 + tol`.
    pub in_ball: bool,
}

/// One window of the nonlinear problem: data, kernels and nonlinearity.
pub struct WindowProblem<'a> {
    set: &'a PropagatorSet,
    f: &'a NonlinearitySpec,
    phi: &'a Field,
    psi: &'a Field,
    phi_hat: Field,
    psi_hat: Field,
    spec: NormSpec,
}

impl<'a> WindowProblem<'a> {
    pub fn new(
        set: &'a PropagatorSet,
        f: &'a NonlinearitySpec,
        phi: &'a Field,
        psi: &'a Field,
        p: f64,
        q: f64,
    ) -> Result<Self, NonlinearError> {
        phi.ensure_side(Side::Physical)?;
        psi.ensure_side(Side::Physical)?;
        phi.ensure_same_shape(psi)?;
        if phi.grid() != set.grid() || phi.components() != set.components() {
            return Err(NonlinearError::Linear(crate::linear::LinearError::GridMismatch));
        }
        if f.arity() != phi.components() {
            return Err(NonlinearError::Arity {
                expected: phi.components(),
                got: f.arity(),
            });
        }
        Ok(Self {
            set,
            f,
            phi,
            psi,
            phi_hat: phi.forward()?,
            psi_hat: psi.forward()?,
            spec: y2p_spec(p, q),
        })
    }

    pub fn set(&self) -> &PropagatorSet {
        self.set
    }

    pub fn norm_spec(&self) -> NormSpec {
        self.spec
    }

    fn check_candidate(&self, u: &SolutionTrace) -> Result<(), NonlinearError> {
        if u.len() != self.set.steps() + 1 || u.grid() != self.set.grid() {
            return Err(NonlinearError::CandidateShape {
                expected: self.set.steps() + 1,
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Dealiased spectrum of `f(u(t_k))`.
    fn forcing_at(&self, u_hat: &Field, k: usize) -> Result<Field, NonlinearError> {
        let u = u_hat.dealiased()?.inverse()?;
        let n = u.grid().len();
        let c = u.components();
        let mut out = Field::zeros(*u.grid(), c, Side::Physical);
        let mut x = vec![Complex64::new(0.0, 0.0); c];
        let mut y = vec![Complex64::new(0.0, 0.0); c];
        {
            let src = u.values();
            let dst = out.values_mut();
            for i in 0..n {
                for j in 0..c {
                    x[j] = src[j * n + i];
                }
                self.f.eval_complex(&x, &mut y);
                for j in 0..c {
                    if !(y[j].re.is_finite() && y[j].im.is_finite()) {
                        return Err(NonlinearError::NonFinite { time_index: k });
                    }
                    dst[j * n + i] = y[j];
                }
            }
        }
        Ok(out.forward()?.dealiased()?)
    }

    /// `G(u) = S_1 φ + S_2 ψ + ∫ S(t - τ) r f(u)^ dτ` on the window's time grid.
    pub fn apply_g(&self, u: &SolutionTrace) -> Result<SolutionTrace, NonlinearError> {
        self.check_candidate(u)?;
        let forcing = if self.f.is_zero() {
            None
        } else {
            Some(
                (0..u.len())
                    .into_par_iter()
                    .map(|k| self.forcing_at(u.spectrum(k), k))
                    .collect::<Result<Vec<_>, _>>()?,
            )
        };
        let (uh, uth) =
            propagate_spectral(self.set, &self.phi_hat, &self.psi_hat, forcing.as_deref())?;
        Ok(trace_from_spectra(
            self.spec,
            self.set.dt(),
            self.phi,
            self.psi,
            uh,
            uth,
        )?)
    }

    /// Solution of the linear problem with the window data.
    pub fn linear_solution(&self) -> Result<SolutionTrace, NonlinearError> {
        let (uh, uth) = propagate_spectral(self.set, &self.phi_hat, &self.psi_hat, None)?;
        Ok(trace_from_spectra(
            self.spec,
            self.set.dt(),
            self.phi,
            self.psi,
            uh,
            uth,
        )?)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.set.steps()).map(|k| k as f64 * self.set.dt()).collect()
    }

    /// `|G u_1 - G u_2|_{Y(T)} / |u_1 - u_2|_{Y(T)}`, 0 when `u_1 = u_2`.
    pub fn contraction_probe(
        &self,
        u1: &SolutionTrace,
        u2: &SolutionTrace,
    ) -> Result<f64, NonlinearError> {
        let den = yt_distance(u1, u2)?;
        if den == 0.0 {
            return Ok(0.0);
        }
        let num = yt_distance(&self.apply_g(u1)?, &self.apply_g(u2)?)?;
        Ok(num / den)
    }

    /// `|G u - u|_{Y(T)}`.
    pub fn residual(&self, u: &SolutionTrace) -> Result<f64, NonlinearError> {
        yt_distance(&self.apply_g(u)?, u)
    }

    /// Picard iteration `u_{k+1} = G(u_k)` until `|u_{k+1} - u_k|_{Y(T)} <= tol`.
    ///
    /// `m` is the data size used for the ball check.
    pub fn picard(
        &self,
        seed: PicardSeed,
        m: f64,
        tol: f64,
        max_iters: usize,
    ) -> Result<(SolutionTrace, PicardLog), NonlinearError> {
        if !(tol > 0.0) || max_iters == 0 {
            return Err(NonlinearError::BadOptions("tol must be > 0 and max_iters >= 1"));
        }
        let mut u = match seed {
            PicardSeed::Linear => self.linear_solution()?,
            PicardSeed::Zero => SolutionTrace::zeros(
                *self.phi.grid(),
                self.phi.components(),
                self.spec,
                self.times(),
            ),
        };
        let mut log = PicardLog {
            iterations: 0,
            differences: Vec::new(),
            ratios: Vec::new(),
            contraction_estimate: 0.0,
            max_iterate_norm: yt_norm(&u),
            in_ball: true,
        };
        let radius = m + 1.0 + tol;
        log.in_ball = log.max_iterate_norm <= radius;
        while log.iterations < max_iters {
            let next = self.apply_g(&u)?;
            let d = yt_distance(&next, &u)?;
            if !d.is_finite() {
                return Err(NonlinearError::NonFinite {
                    time_index: next.len() - 1,
                });
            }
            if let Some(&prev) = log.differences.last() {
                if prev > 0.0 {
                    let r = d / prev;
                    log.ratios.push(r);
                    log.contraction_estimate = log.contraction_estimate.max(r);
                }
            }
            log.differences.push(d);
            log.iterations += 1;
            let norm = yt_norm(&next);
            log.max_iterate_norm = log.max_iterate_norm.max(norm);
            log.in_ball &= norm <= radius;
            u = next;
            if d <= tol {
                log::debug!(
                    "picard converged in {} iterations, contraction {:.3e}",
                    log.iterations,
                    log.contraction_estimate
                );
                return Ok((u, log));
            }
        }
        Err(NonlinearError::MaxItersExceeded {
            iterations: log.iterations,
            ratios: log.ratios,
        })
    }

    /// Random candidate in the ball `|u|_{Y(T)} <= radius`: the linear solution
    /// plus a smooth random perturbation, scaled into the ball if needed.
    pub fn random_candidate<R: Rng>(
        &self,
        radius: f64,
        rng: &mut R,
    ) -> Result<SolutionTrace, NonlinearError> {
        let base = self.linear_solution()?;
        let grid = *self.phi.grid();
        let comps = self.phi.components();
        let n = grid.n_dims();
        let widths: Vec<f64> = grid.half_widths().to_vec();
        let centers: Vec<Vec<f64>> = (0..comps)
            .map(|_| (0..n).map(|k| rng.gen_range(-0.5..0.5) * widths[k]).collect())
            .collect();
        let amps: Vec<f64> = (0..comps).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rates: Vec<f64> = (0..comps).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let shape = |c: usize, x: &[f64]| -> f64 {
            let r2: f64 = x.iter().zip(&centers[c]).map(|(a, b)| (a - b) * (a - b)).sum();
            amps[c] * (-r2).exp()
        };
        let times = self.times();
        let mut states = Vec::with_capacity(times.len());
        let mut velocities = Vec::with_capacity(times.len());
        for (k, &t) in times.iter().enumerate() {
            let pert = Field::from_real_fn(grid, comps, |x, c| shape(c, x) * (rates[c] * t).sin());
            let dpert = Field::from_real_fn(grid, comps, |x, c| {
                shape(c, x) * rates[c] * (rates[c] * t).cos()
            });
            states.push(base.state(k).combine(1.0, &pert, 1.0)?);
            velocities.push(base.velocity(k).combine(1.0, &dpert, 1.0)?);
        }
        let mut cand = SolutionTrace::from_fields(self.spec, times.clone(), states, velocities)?;
        let size = yt_norm(&cand);
        if size > radius {
            let s = radius / size;
            let states = cand.states().iter().map(|f| f.scaled(s)).collect();
            let vels = cand.velocities().iter().map(|f| f.scaled(s)).collect();
            cand = SolutionTrace::from_fields(self.spec, times, states, vels)?;
        }
        Ok(cand)
    }
}

/// `G(u)` for one window; see [`WindowProblem::apply_g`].
pub fn apply_g(
    u: &SolutionTrace,
    phi: &Field,
    psi: &Field,
    f: &NonlinearitySpec,
    set: &PropagatorSet,
) -> Result<SolutionTrace, NonlinearError> {
    let spec = u.norm_spec();
    WindowProblem::new(set, f, phi, psi, spec.p, spec.q)?.apply_g(u)
}

/// `|G u_1 - G u_2|_{Y(T)} / |u_1 - u_2|_{Y(T)}`.
pub fn contraction_probe(
    u1: &SolutionTrace,
    u2: &SolutionTrace,
    phi: &Field,
    psi: &Field,
    f: &NonlinearitySpec,
    set: &PropagatorSet,
) -> Result<f64, NonlinearError> {
    let spec = u1.norm_spec();
    WindowProblem::new(set, f, phi, psi, spec.p, spec.q)?.contraction_probe(u1, u2)
}

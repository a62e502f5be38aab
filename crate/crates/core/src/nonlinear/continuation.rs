use serde::{Deserialize, Serialize};

use super::fixedpoint::{amplitude_m, window_bounds, PicardLog, PicardSeed, WindowProblem};
use super::nonlinearity::{FbarKind, NonlinearitySpec};
use super::NonlinearError;
use crate::linear::SolutionTrace;
use crate::operator::{OperatorSpec, PropagatorSet};
use crate::spectral::{EllipticForm, Field, Side, StateNorms};

/// Factor applied to the window length when `fbar` is only a sampled lower bound.
pub const SAMPLED_FBAR_SAFETY: f64 = 0.5;

/// Blow-up threshold on the monitored size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    /// Multiple of the monitored size of the initial data.
    Factor(f64),
    Absolute(f64),
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::Factor(1e6)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target time step; each window uses `ceil(T / dt)` steps.
    pub dt: f64,
    /// Fixed number of steps per window, overriding `dt`.
    pub steps_per_window: Option<usize>,
    /// Lower bound on the steps per window.
    pub min_steps: usize,
    pub c0: f64,
    pub c1: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: PicardSeed,
    pub threshold: Threshold,
    /// Cap on the window length on top of the admissible bound.
    pub max_window: Option<f64>,
    pub max_windows: usize,
    /// Retries with a halved window after a failed contraction.
    pub max_halvings: usize,
    pub p: f64,
    pub q: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dt: 1.0 / 64.0,
            steps_per_window: None,
            min_steps: 2,
            c0: 1.0,
            c1: 1.0,
            tol: 1e-10,
            max_iters: 50,
            seed: PicardSeed::Linear,
            threshold: Threshold::default(),
            max_window: None,
            max_windows: 100_000,
            max_halvings: 8,
            p: 2.0,
            q: 2.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), NonlinearError> {
        let bad = |m| Err(NonlinearError::BadOptions(m));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be finite and > 0");
        }
        if self.steps_per_window == Some(0) || self.min_steps == 0 {
            return bad("windows need at least one step");
        }
        if !(self.c0 >= 1.0 && self.c1 >= 1.0) {
            return bad("C0 and C1 must be >= 1");
        }
        if !(self.tol > 0.0) || self.max_iters == 0 || self.max_windows == 0 {
            return bad("tol, max_iters and max_windows must be positive");
        }
        match self.threshold {
            Threshold::Factor(v) | Threshold::Absolute(v) if v > 0.0 => {}
            _ => return bad("blow-up threshold must be > 0"),
        }
        if let Some(w) = self.max_window {
            if !(w > 0.0) {
                return bad("max_window must be > 0");
            }
        }
        if !(self.p >= 1.0) || !(self.q >= 1.0) {
            return bad("p and q must be >= 1");
        }
        Ok(())
    }
}

/// Record of one accepted window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveWindow {
    pub index: usize,
    /// Absolute start time.
    pub start: f64,
    /// Window length `T`.
    pub length: f64,
    pub dt: f64,
    pub steps: usize,
    /// Data size at the window start.
    pub m: f64,
    pub fbar_m1: f64,
    pub fbar_kind: FbarKind,
    pub c0: f64,
    pub c1: f64,
    /// The two admissible bounds evaluated from the stored constants.
    pub bound_a: f64,
    pub bound_b: f64,
    pub picard_iters: usize,
    pub contraction_estimate: f64,
    /// Number of times `T` was halved before the window was accepted.
    pub halvings: usize,
    pub in_ball: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed { t_end: f64 },
    BlowUpSuspected { time: f64, monitor: f64, threshold: f64 },
    IterationFailed { window: usize, reason: String },
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Completed { .. } => "Completed",
            RunStatus::BlowUpSuspected { .. } => "BlowUpSuspected",
            RunStatus::IterationFailed { .. } => "IterationFailed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationReport {
    pub windows: Vec<SolveWindow>,
    pub status: RunStatus,
    /// Glued trace over all accepted windows.
    pub trace: SolutionTrace,
    /// `(t, Φ(t))` at every stored time.
    pub monitor: Vec<(f64, f64)>,
    pub threshold: f64,
}

/// Monitored size `|u|_{Y} + |u|_inf + |u_t|_{Y} + |u_t|_inf` of a state.
pub fn monitor_of(u: &Field, ut: &Field, p: f64, q: f64) -> Result<f64, NonlinearError> {
    let spec = super::fixedpoint::y2p_spec(p, q);
    let a = StateNorms::compute(u, None, spec)?;
    let b = StateNorms::compute(ut, None, spec)?;
    Ok(a.ysp + a.xinf + b.ysp + b.xinf)
}

struct Attempt {
    set: PropagatorSet,
    trace: SolutionTrace,
    log: PicardLog,
}

#[allow(clippy::too_many_arguments)]
fn try_window(
    a: &OperatorSpec,
    form: &EllipticForm,
    f: &NonlinearitySpec,
    u: &Field,
    ut: &Field,
    m: f64,
    length: f64,
    opts: &SolverOptions,
) -> Result<Attempt, NonlinearError> {
    let steps = opts
        .steps_per_window
        .unwrap_or_else(|| ((length / opts.dt) * (1.0 - 1e-12)).ceil() as usize)
        .max(opts.min_steps);
    let set = PropagatorSet::build(a, form, u.grid(), length / steps as f64, steps)?;
    let problem = WindowProblem::new(&set, f, u, ut, opts.p, opts.q)?;
    let (trace, log) = problem.picard(opts.seed, m, opts.tol, opts.max_iters)?;
    if log.contraction_estimate >= 1.0 {
        return Err(NonlinearError::NotContracting(log.contraction_estimate));
    }
    Ok(Attempt { set, trace, log })
}

/// Solves on `[0, horizon]` by gluing admissible windows, restarting each from
/// the last stored `(u, u_t)`, and stops early when the monitored size passes
/// the threshold.
#[allow(clippy::too_many_arguments)]
pub fn continue_solve(
    a: &OperatorSpec,
    form: &EllipticForm,
    f: &NonlinearitySpec,
    phi: &Field,
    psi: &Field,
    horizon: f64,
    opts: &SolverOptions,
) -> Result<ContinuationReport, NonlinearError> {
    opts.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(NonlinearError::BadOptions("horizon must be finite and > 0"));
    }
    if !f.zero_at_zero() {
        return Err(NonlinearError::NonzeroAtOrigin);
    }
    if f.arity() != a.components() || phi.components() != a.components() {
        return Err(NonlinearError::Arity {
            expected: a.components(),
            got: f.arity(),
        });
    }
    phi.ensure_side(Side::Physical)?;
    phi.ensure_same_shape(psi)?;

    let phi0 = monitor_of(phi, psi, opts.p, opts.q)?;
    let threshold = match opts.threshold {
        Threshold::Factor(x) => x * phi0,
        Threshold::Absolute(x) => x,
    };
    let spec = super::fixedpoint::y2p_spec(opts.p, opts.q);
    let mut trace = SolutionTrace::from_fields(spec, vec![0.0], vec![phi.clone()], vec![psi.clone()])?;
    let mut monitor = vec![(0.0, phi0)];
    let mut windows: Vec<SolveWindow> = Vec::new();
    let end_tol = 1e-12 * horizon.max(1.0);

    let finish = |windows, status, trace, monitor| {
        Ok(ContinuationReport {
            windows,
            status,
            trace,
            monitor,
            threshold,
        })
    };

    if phi0 > threshold {
        let status = RunStatus::BlowUpSuspected {
            time: 0.0,
            monitor: phi0,
            threshold,
        };
        return finish(windows, status, trace, monitor);
    }

    let mut t = 0.0;
    while horizon - t > end_tol {
        let index = windows.len();
        if index >= opts.max_windows {
            let status = RunStatus::IterationFailed {
                window: index,
                reason: format!("window budget of {} exhausted at t = {t}", opts.max_windows),
            };
            return finish(windows, status, trace, monitor);
        }
        let u = trace.last_state().clone();
        let ut = trace.last_velocity().clone();
        let m = amplitude_m(&u, &ut, opts.p, opts.q)?;
        let fb = f.fbar(m + 1.0, opts.q);
        let (bound_a, bound_b) = window_bounds(m, fb.value, opts.c0, opts.c1);
        let mut length = bound_a.min(bound_b);
        if fb.kind == FbarKind::SampledLowerBound {
            length *= SAMPLED_FBAR_SAFETY;
        }
        if let Some(cap) = opts.max_window {
            length = length.min(cap);
        }
        length = length.min(horizon - t);
        if !(length.is_finite() && length > 0.0) {
            let status = RunStatus::IterationFailed {
                window: index,
                reason: format!("no admissible window length (fbar(M+1) = {})", fb.value),
            };
            return finish(windows, status, trace, monitor);
        }

        let mut halvings = 0;
        let attempt = loop {
            match try_window(a, form, f, &u, &ut, m, length, opts) {
                Ok(at) => break at,
                Err(
                    e @ (NonlinearError::MaxItersExceeded { .. }
                    | NonlinearError::NotContracting(_)
                    | NonlinearError::NonFinite { .. }),
                ) => {
                    if halvings >= opts.max_halvings {
                        let status = RunStatus::IterationFailed {
                            window: index,
                            reason: format!("{e} (after {halvings} halvings of T)"),
                        };
                        return finish(windows, status, trace, monitor);
                    }
                    log::info!("window {index}: {e}; halving T = {length:.3e}");
                    halvings += 1;
                    length *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };

        if let Some(prev) = windows.last() {
            if length < prev.length {
                log::debug!("window {index} shrank to T = {length:.3e} (M = {m:.3e})");
            }
        }
        windows.push(SolveWindow {
            index,
            start: t,
            length,
            dt: attempt.set.dt(),
            steps: attempt.set.steps(),
            m,
            fbar_m1: fb.value,
            fbar_kind: fb.kind,
            c0: opts.c0,
            c1: opts.c1,
            bound_a,
            bound_b,
            picard_iters: attempt.log.iterations,
            contraction_estimate: attempt.log.contraction_estimate,
            halvings,
            in_ball: attempt.log.in_ball,
        });

        let mut piece = attempt.trace;
        let crossing = (1..piece.len()).find(|&k| piece.monitor(k) > threshold);
        if let Some(k) = crossing {
            piece.truncate(k + 1);
        }
        for k in 1..piece.len() {
            monitor.push((t + piece.times()[k], piece.monitor(k)));
        }
        let last = piece.last_time();
        trace.append_window(piece, t)?;
        if crossing.is_some() {
            let &(time, value) = monitor.last().expect("nonempty");
            let status = RunStatus::BlowUpSuspected {
                time,
                monitor: value,
                threshold,
            };
            return finish(windows, status, trace, monitor);
        }
        t += last;
    }
    let status = RunStatus::Completed { t_end: t };
    finish(windows, status, trace, monitor)
}

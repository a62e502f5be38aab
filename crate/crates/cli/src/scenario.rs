//! Turns a validated configuration into solver inputs, runs it and writes outputs.

use std::io;
use std::path::Path;

use boussinesq::linear::{solve_linear, verify_linear_estimates, EstimateReport, SolutionTrace};
use boussinesq::nonlinear::{
    amplitude_m, continue_solve, window_bounds, NonlinearitySpec, RunStatus, SolveWindow, SolverOptions, Threshold,
};
use boussinesq::operator::{OperatorSpec, ScalarSymbol};
use boussinesq::spectral::{EllipticForm, Field, NormSpec, SpectralGrid};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{DataConfig, NonlinearityConfig, OperatorConfig, ScenarioConfig};
use crate::io::{read_snapshot_file, snapshot_path, write_csv_file, write_json, write_snapshot_file, NormRow, RowWindow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BLOWUP: i32 = 2;
pub const EXIT_ITERATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Steps per window when no explicit `dt` is configured.
pub const DEFAULT_STEPS_PER_WINDOW: usize = 64;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("I/O: {0}")]
    Io(#[from] io::Error),
    #[error("solver: {0}")]
    Solver(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_USAGE,
            RunError::Io(_) => EXIT_IO,
            RunError::Solver(_) => EXIT_ITERATION,
        }
    }
}

pub fn exit_code(status: &RunStatus) -> i32 {
    match status {
        RunStatus::Completed { .. } => EXIT_OK,
        RunStatus::BlowUpSuspected { .. } => EXIT_BLOWUP,
        RunStatus::IterationFailed { .. } => EXIT_ITERATION,
    }
}

fn solver_err(e: impl std::fmt::Display) -> RunError {
    RunError::Solver(e.to_string())
}

fn config_err(e: impl std::fmt::Display) -> RunError {
    RunError::Config(e.to_string())
}

/// Solver inputs assembled from a configuration.
pub struct Scenario {
    pub grid: SpectralGrid,
    pub form: EllipticForm,
    pub operator: OperatorSpec,
    pub f: NonlinearitySpec,
    pub phi: Field,
    pub psi: Field,
    /// Norms reported in outputs: `Y^{s,p}` with the configured `s_norm`.
    pub spec: NormSpec,
}

pub fn build_operator(op: &OperatorConfig) -> Result<OperatorSpec, RunError> {
    match op {
        OperatorConfig::NegLaplacian => Ok(OperatorSpec::neg_laplacian()),
        OperatorConfig::Constant(c) => Ok(OperatorSpec::Symbol(ScalarSymbol::Constant(*c))),
        OperatorConfig::Matrix(m) => OperatorSpec::real_matrix(m).map_err(config_err),
        OperatorConfig::Weighted { g, s_weight } => OperatorSpec::weighted(g, *s_weight).map_err(config_err),
    }
}

pub fn build_nonlinearity(nl: &NonlinearityConfig, comps: usize) -> Result<NonlinearitySpec, RunError> {
    match nl {
        NonlinearityConfig::Zero => Ok(NonlinearitySpec::zero(comps)),
        NonlinearityConfig::Quadratic { sign } => Ok(NonlinearitySpec::power(*sign, 2)),
        NonlinearityConfig::Cubic { sign } => Ok(NonlinearitySpec::power(*sign, 3)),
        NonlinearityConfig::QuadraticCubic { a, b } => Ok(NonlinearitySpec::quadratic_cubic(*a, *b)),
        NonlinearityConfig::CoupledPoly { coupling } => NonlinearitySpec::quadratic_system(coupling).map_err(config_err),
    }
}

/// Physical samples of one initial datum.
pub fn build_data(data: &DataConfig, grid: SpectralGrid, comps: usize) -> Result<Field, RunError> {
    match data {
        DataConfig::Zero => Ok(Field::from_real_fn(grid, comps, |_, _| 0.0)),
        DataConfig::Gaussian {
            amplitude,
            width,
            center,
        } => Ok(Field::from_real_fn(grid, comps, |x, c| {
            let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            amplitude[c] * (-r2 / (width * width)).exp()
        })),
        DataConfig::Mode { k, amplitude } => {
            let xi: Vec<f64> = k
                .iter()
                .enumerate()
                .map(|(axis, &k)| k as f64 * grid.frequency_step(axis))
                .collect();
            Ok(Field::from_real_fn(grid, comps, |x, c| {
                amplitude[c] * x.iter().zip(&xi).map(|(a, b)| a * b).sum::<f64>().cos()
            }))
        }
        DataConfig::File(path) => {
            let snap = read_snapshot_file(path)?;
            let f = snap.field;
            if f.grid() != &grid || f.components() != comps {
                return Err(RunError::Config(format!(
                    "{}: snapshot grid or component count differs from the configured grid",
                    path.display()
                )));
            }
            f.ensure_side(boussinesq::spectral::Side::Physical).map_err(config_err)?;
            Ok(f)
        }
    }
}

impl Scenario {
    pub fn build(cfg: &ScenarioConfig) -> Result<Self, RunError> {
        let grid = cfg.grid.build();
        let form = EllipticForm::new(&cfg.elliptic).map_err(config_err)?;
        let operator = build_operator(&cfg.operator)?;
        let comps = operator.components();
        let f = build_nonlinearity(&cfg.nonlinearity, comps)?;
        let phi = build_data(&cfg.phi, grid, comps)?;
        let psi = build_data(&cfg.psi, grid, comps)?;
        let e = &cfg.exponents;
        Ok(Self {
            grid,
            form,
            operator,
            f,
            phi,
            psi,
            spec: NormSpec::new(e.p, e.q_inner, e.s_norm),
        })
    }

    /// Continuation options from the solver section.
    pub fn solver_options(cfg: &ScenarioConfig) -> SolverOptions {
        let s = &cfg.solver;
        SolverOptions {
            dt: s.dt.unwrap_or(1.0 / DEFAULT_STEPS_PER_WINDOW as f64),
            steps_per_window: if s.dt.is_some() { None } else { Some(s.steps_per_window) },
            c0: s.c0,
            c1: s.c1,
            tol: s.tol,
            max_iters: s.max_iters,
            seed: s.seed_iterate,
            threshold: s.blowup_threshold,
            max_window: s.max_window,
            max_windows: s.max_windows,
            max_halvings: s.max_halvings,
            p: cfg.exponents.p,
            q: cfg.exponents.q_inner,
            ..SolverOptions::default()
        }
    }

    /// Time step of the single-shot linear solve: the configured `dt`, or the
    /// zero-forcing window length over `steps_per_window`, rounded so that
    /// the horizon is a whole number of steps.
    pub fn linear_dt(&self, cfg: &ScenarioConfig) -> Result<f64, RunError> {
        let horizon = cfg.solver.horizon;
        let target = match cfg.solver.dt {
            Some(dt) => dt,
            None => {
                let m = amplitude_m(&self.phi, &self.psi, cfg.exponents.p, cfg.exponents.q_inner)
                    .map_err(solver_err)?;
                let (a, b) = window_bounds(m, 0.0, cfg.solver.c0, cfg.solver.c1);
                a.min(b) / cfg.solver.steps_per_window as f64
            }
        };
        let steps = (horizon / target * (1.0 - 1e-12)).ceil().max(1.0);
        Ok(horizon / steps)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    /// `continuation` or `linear`.
    pub mode: &'static str,
    pub status: RunStatus,
    pub exit_code: i32,
    pub horizon: f64,
    pub threshold: f64,
    pub windows: Vec<SolveWindow>,
    /// `(t, monitored size)` at every stored time.
    pub monitor: Vec<(f64, f64)>,
    pub estimates: Option<EstimateReport>,
    pub warnings: Vec<String>,
}

pub struct Outcome {
    pub report: RunReport,
    pub trace: SolutionTrace,
    pub rows: Vec<NormRow>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }
}

/// Window bookkeeping for each stored time; a seam time belongs to the
/// window that ends there.
pub fn row_windows(times: &[f64], windows: &[SolveWindow]) -> Vec<RowWindow> {
    times
        .iter()
        .map(|&t| {
            let eps = 1e-12 * t.abs().max(1.0);
            let idx = windows.partition_point(|w| w.start < t - eps).saturating_sub(1);
            windows
                .get(idx)
                .map(|w| RowWindow {
                    index: w.index,
                    picard_iters: w.picard_iters,
                    contraction_estimate: w.contraction_estimate,
                })
                .unwrap_or_default()
        })
        .collect()
}

/// Norm rows of a trace in the reporting norms.
pub fn norm_rows(trace: &SolutionTrace, spec: NormSpec, windows: &[SolveWindow]) -> Result<Vec<NormRow>, RunError> {
    let times = trace.times();
    let meta = row_windows(times, windows);
    (0..times.len())
        .into_par_iter()
        .map(|k| NormRow::compute(times[k], trace.state(k), trace.velocity(k), spec, meta[k]).map_err(solver_err))
        .collect()
}

/// Runs the scenario. `force_linear` drops the nonlinearity.
pub fn run_scenario(cfg: &ScenarioConfig, force_linear: bool) -> Result<Outcome, RunError> {
    let sc = Scenario::build(cfg)?;
    let horizon = cfg.solver.horizon;
    let linear = force_linear || sc.f.is_zero();
    let (report, trace) = if linear {
        let dt = sc.linear_dt(cfg)?;
        let trace = solve_linear(&sc.operator, &sc.form, &sc.phi, &sc.psi, None, horizon, dt, sc.spec)
            .map_err(solver_err)?;
        let estimates = verify_linear_estimates(&trace, &sc.phi, &sc.psi, None).map_err(solver_err)?;
        let monitor: Vec<(f64, f64)> = (0..trace.len()).map(|k| (trace.times()[k], trace.monitor(k))).collect();
        let status = RunStatus::Completed {
            t_end: trace.last_time(),
        };
        let report = RunReport {
            mode: "linear",
            exit_code: exit_code(&status),
            status,
            horizon,
            threshold: f64::INFINITY,
            windows: Vec::new(),
            monitor,
            estimates: Some(estimates),
            warnings: cfg.warnings.clone(),
        };
        (report, trace)
    } else {
        let opts = Scenario::solver_options(cfg);
        let rep = continue_solve(&sc.operator, &sc.form, &sc.f, &sc.phi, &sc.psi, horizon, &opts)
            .map_err(|e| match e {
                boussinesq::nonlinear::NonlinearError::BadOptions(_)
                | boussinesq::nonlinear::NonlinearError::NonzeroAtOrigin
                | boussinesq::nonlinear::NonlinearError::Arity { .. } => config_err(e),
                e => solver_err(e),
            })?;
        let report = RunReport {
            mode: "continuation",
            exit_code: exit_code(&rep.status),
            status: rep.status,
            horizon,
            threshold: rep.threshold,
            windows: rep.windows,
            monitor: rep.monitor,
            estimates: None,
            warnings: cfg.warnings.clone(),
        };
        (report, rep.trace)
    };
    let rows = norm_rows(&trace, sc.spec, &report.windows)?;
    Ok(Outcome { report, trace, rows })
}

/// Writes the CSV, snapshots and JSON report requested by the configuration.
pub fn emit_outputs(outcome: &Outcome, cfg: &ScenarioConfig) -> Result<(), RunError> {
    let out = &cfg.output;
    if let Some(path) = &out.csv {
        write_csv_file(path, &outcome.rows)?;
    }
    if let (Some(dir), stride) = (&out.snapshot_dir, out.snapshot_stride) {
        if stride > 0 {
            write_snapshots(dir, &outcome.trace, stride)?;
        }
    }
    if let Some(path) = &out.report {
        write_json(path, &outcome.report)?;
    }
    Ok(())
}

/// Writes `u_k` and `(u_t)_k` for every `k` divisible by `stride`.
pub fn write_snapshots(dir: &Path, trace: &SolutionTrace, stride: usize) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for k in (0..trace.len()).step_by(stride.max(1)) {
        let t = trace.times()[k];
        write_snapshot_file(&snapshot_path(dir, "u", k), t, trace.state(k))?;
        write_snapshot_file(&snapshot_path(dir, "ut", k), t, trace.velocity(k))?;
    }
    Ok(())
}

/// Human-readable one-line summary of a finished run.
pub fn summary(report: &RunReport) -> String {
    let status = match &report.status {
        RunStatus::Completed { t_end } => format!("Completed at t = {t_end:.6}"),
        RunStatus::BlowUpSuspected {
            time,
            monitor,
            threshold,
        } => format!("BlowUpSuspected at t = {time:.6} (monitor {monitor:.3e} > {threshold:.3e})"),
        RunStatus::IterationFailed { window, reason } => format!("IterationFailed in window {window}: {reason}"),
    };
    format!("{} run, {} windows: {status}", report.mode, report.windows.len())
}

/// Threshold used for display when none was configured.
pub fn describe_threshold(t: Threshold) -> String {
    match t {
        Threshold::Factor(x) => format!("{x} x initial size"),
        Threshold::Absolute(x) => format!("{x}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn cfg(text: &str) -> ScenarioConfig {
        parse_config(text, Path::new(".")).unwrap()
    }

    #[test]
    fn zero_everything_is_an_all_zero_linear_run() {
        let c = cfg("grid.points = 16\ngrid.half_width = 4.0\nsolver.horizon = 0.5\nsolver.dt = 0.125\n");
        let out = run_scenario(&c, false).unwrap();
        assert_eq!(out.exit_code(), EXIT_OK);
        assert_eq!(out.rows.len(), 5);
        for r in &out.rows {
            assert_eq!(r.u, Default::default());
            assert_eq!(r.ut, Default::default());
        }
    }

    #[test]
    fn row_windows_assign_seams_to_the_ending_window() {
        let w = |index: usize, start: f64| SolveWindow {
            index,
            start,
            length: 0.5,
            dt: 0.25,
            steps: 2,
            m: 0.0,
            fbar_m1: 0.0,
            fbar_kind: boussinesq::nonlinear::FbarKind::Majorant,
            c0: 1.0,
            c1: 1.0,
            bound_a: 1.0,
            bound_b: 0.5,
            picard_iters: index + 1,
            contraction_estimate: 0.0,
            halvings: 0,
            in_ball: true,
        };
        let ws = vec![w(0, 0.0), w(1, 0.5)];
        let idx: Vec<usize> = row_windows(&[0.0, 0.25, 0.5, 0.75, 1.0], &ws).iter().map(|r| r.index).collect();
        assert_eq!(idx, vec![0, 0, 0, 1, 1]);
    }

    #[test]
    fn mode_data_is_a_lattice_cosine() {
        let grid = SpectralGrid::uniform(1, 16, 4.0).unwrap();
        let f = build_data(
            &DataConfig::Mode {
                k: vec![2],
                amplitude: vec![0.5],
            },
            grid,
            1,
        )
        .unwrap();
        let spec = f.forward().unwrap();
        let big: Vec<usize> = (0..16).filter(|&i| spec.values()[i].norm() > 1e-12).collect();
        assert_eq!(big, vec![2, 14]);
    }

    #[test]
    fn linear_dt_divides_the_horizon() {
        let c = cfg("preset = \"imbq_scalar\"\nsolver.horizon = 1.0\n");
        let sc = Scenario::build(&c).unwrap();
        let dt = sc.linear_dt(&c).unwrap();
        let k = 1.0 / dt;
        assert!((k - k.round()).abs() < 1e-9);
    }
}

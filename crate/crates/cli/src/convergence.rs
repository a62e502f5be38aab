//! The `convergence` subcommand: time-step and grid refinement sweeps.

use std::io::{self, Write};

use boussinesq::nonlinear::RunStatus;
use boussinesq::spectral::{Field, MAX_DIMS};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::scenario::{run_scenario, RunError};

/// Refinement factors of the time-step sweep.
pub const DT_LEVELS: usize = 4;
/// Refinement factors of the grid sweep.
pub const GRID_LEVELS: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    /// `dt` or `grid`.
    pub sweep: &'static str,
    pub level: usize,
    /// Refinement factor relative to the configured resolution.
    pub factor: usize,
    /// Sup difference of `u` at the horizon against the finest level.
    pub error: f64,
    /// `log2(error_l / error_{l+1})`, when both are positive.
    pub order: Option<f64>,
}

fn final_state(cfg: &ScenarioConfig) -> Result<Field, RunError> {
    let out = run_scenario(cfg, false)?;
    match &out.report.status {
        RunStatus::Completed { .. } => Ok(out.trace.last_state().clone()),
        other => Err(RunError::Solver(format!(
            "convergence sweep needs a completed run, got {}",
            other.name()
        ))),
    }
}

/// Sup difference between a coarse field and a finer one sampled at the
/// coarse points; `factor` is the refinement ratio per axis.
pub fn restricted_diff(coarse: &Field, fine: &Field, factor: usize) -> f64 {
    let g = coarse.grid();
    let fg = fine.grid();
    let n = g.n_dims();
    let mut worst: f64 = 0.0;
    for c in 0..coarse.components() {
        let cv = coarse.component(c);
        let fv = fine.component(c);
        for flat in 0..g.len() {
            let idx = g.multi_index(flat);
            let mut fidx = [0usize; MAX_DIMS];
            for k in 0..n {
                fidx[k] = idx[k] * factor;
            }
            worst = worst.max((cv[flat] - fv[fg.flat_index(&fidx[..n])]).norm());
        }
    }
    worst
}

fn rows(sweep: &'static str, errors: Vec<f64>) -> Vec<SweepRow> {
    let last = errors.len();
    (0..last)
        .map(|l| SweepRow {
            sweep,
            level: l,
            factor: 1 << l,
            error: errors[l],
            order: (l + 2 < last && errors[l] > 0.0 && errors[l + 1] > 0.0)
                .then(|| (errors[l] / errors[l + 1]).log2()),
        })
        .collect()
}

/// Halves `dt` (or doubles the steps per window) `DT_LEVELS - 1` times.
pub fn dt_sweep(cfg: &ScenarioConfig) -> Result<Vec<SweepRow>, RunError> {
    let mut finals = Vec::with_capacity(DT_LEVELS);
    for l in 0..DT_LEVELS {
        let mut c = cfg.clone();
        let f = 1usize << l;
        match c.solver.dt {
            Some(dt) => c.solver.dt = Some(dt / f as f64),
            None => c.solver.steps_per_window *= f,
        }
        finals.push(final_state(&c)?);
    }
    let best = finals.last().expect("levels").clone();
    let errors = finals.iter().map(|f| f.max_abs_diff(&best)).collect();
    Ok(rows("dt", errors))
}

/// Doubles the points per axis `GRID_LEVELS - 1` times at fixed half-widths.
pub fn grid_sweep(cfg: &ScenarioConfig) -> Result<Vec<SweepRow>, RunError> {
    let mut finals = Vec::with_capacity(GRID_LEVELS);
    for l in 0..GRID_LEVELS {
        let mut c = cfg.clone();
        c.grid.points = c.grid.points.iter().map(|p| p << l).collect();
        finals.push(final_state(&c)?);
    }
    let best = finals.last().expect("levels");
    let top = 1usize << (GRID_LEVELS - 1);
    let errors = finals
        .iter()
        .enumerate()
        .map(|(l, f)| restricted_diff(f, best, top >> l))
        .collect();
    Ok(rows("grid", errors))
}

pub fn write_table<W: Write>(out: &mut W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(out, "sweep,level,factor,error,observed_order")?;
    for r in rows {
        let order = r.order.map(|o| format!("{o:.6}")).unwrap_or_default();
        writeln!(out, "{},{},{},{:.16e},{}", r.sweep, r.level, r.factor, r.error, order)?;
    }
    Ok(())
}

//! The `check` subcommand: inequality samples, estimate ratios and operator probes
//! for one configuration.

use boussinesq::checks::{composition_norm_check, cosine_identity_check, nirenberg_ratio, InequalityReport};
use boussinesq::linear::{solve_linear, symbol_decay_check, verify_linear_estimates, DecayReport, EstimateReport};
use boussinesq::nonlinear::{amplitude_m, window_length, WindowProblem};
use boussinesq::operator::{resolvent_bound_check, OperatorSpec, PropagatorSet, ResolventReport};
use boussinesq::spectral::{Field, SpectralGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{DataConfig, ScenarioConfig};
use crate::scenario::{build_data, RunError, Scenario};

/// Dilations of the interpolation check.
pub const DILATIONS: [f64; 3] = [0.25, 1.0, 4.0];
/// Amplitude factors of the homogeneity sweep.
pub const SCALES: [f64; 3] = [0.1, 1.0, 10.0];
/// Largest relative spread of the interpolation ratio over [`DILATIONS`].
pub const DILATION_TOL: f64 = 0.02;
/// Largest relative change of an estimate ratio under grid doubling.
pub const ESTIMATE_TOL: f64 = 0.05;
/// Largest entrywise d'Alembert defect.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct EstimatePair {
    pub coarse: EstimateReport,
    pub refined: EstimateReport,
    pub stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionSummary {
    pub window_length: f64,
    pub pairs: usize,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub nirenberg: InequalityReport,
    /// `(max - min) / max` of the interpolation ratio over the dilations.
    pub nirenberg_dilation_spread: f64,
    pub composition: Vec<InequalityReport>,
    pub cosine_identity_error: f64,
    pub estimates: EstimatePair,
    pub decay: DecayReport,
    /// Only for matrix operators.
    pub resolvent: Option<ResolventReport>,
    /// Only for nonzero nonlinearities.
    pub contraction: Option<ContractionSummary>,
    pub pass: bool,
}

fn err(e: impl std::fmt::Display) -> RunError {
    RunError::Solver(e.to_string())
}

fn gaussian_params(cfg: &ScenarioConfig) -> (f64, Vec<f64>) {
    match &cfg.phi {
        DataConfig::Gaussian { width, center, .. } => (*width, center.clone()),
        _ => (1.0, vec![0.0; cfg.grid.n_dims]),
    }
}

fn dilated_gaussian(grid: SpectralGrid, width: f64, center: &[f64], lambda: f64, scale: f64) -> Field {
    Field::from_real_fn(grid, 1, |x, _| {
        let r2: f64 = x.iter().zip(center).map(|(a, b)| (lambda * (a - b)).powi(2)).sum();
        scale * (-r2 / (width * width)).exp()
    })
}

fn nirenberg(cfg: &ScenarioConfig, grid: SpectralGrid) -> Result<(InequalityReport, f64), RunError> {
    let (width, center) = gaussian_params(cfg);
    let (p, q) = (cfg.exponents.p, cfg.exponents.q_inner);
    let fine = grid.refined(2).map_err(err)?;
    let sweep = |g: SpectralGrid| -> Result<Vec<f64>, RunError> {
        let mut out = Vec::new();
        for &lambda in &DILATIONS {
            for &scale in &SCALES {
                let u = dilated_gaussian(g, width, &center, lambda, scale);
                out.push(nirenberg_ratio(&u, 1, 2, p, q).map_err(err)?);
            }
        }
        Ok(out)
    };
    let samples = sweep(grid)?;
    let refined = sweep(fine)?;
    let worst = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let at_unit: Vec<f64> = samples.chunks(SCALES.len()).map(|c| c[1]).collect();
    let hi = worst(&at_unit);
    let lo = at_unit.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
    let trend = vec![(grid.points()[0], worst(&samples)), (fine.points()[0], worst(&refined))];
    Ok((InequalityReport::new("nirenberg_i1_m2", samples, trend), spread))
}

fn composition(cfg: &ScenarioConfig, sc: &Scenario) -> Result<Vec<InequalityReport>, RunError> {
    if sc.f.is_zero() || sc.phi.is_zero() {
        return Ok(Vec::new());
    }
    let comps = sc.phi.components();
    let fine_grid = sc.grid.refined(2).map_err(err)?;
    let fine_phi = build_data(&cfg.phi, fine_grid, comps)?;
    let p = cfg.exponents.p;
    let mut reports = Vec::new();
    for k in 0..=2 {
        let sweep = |u: &Field| -> Result<Vec<f64>, RunError> {
            SCALES
                .iter()
                .map(|&s| composition_norm_check(&sc.f, &u.scaled(s), k, p).map_err(err))
                .collect()
        };
        let samples = sweep(&sc.phi)?;
        let refined = sweep(&fine_phi)?;
        let worst = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let trend = vec![
            (sc.grid.points()[0], worst(&samples)),
            (fine_grid.points()[0], worst(&refined)),
        ];
        reports.push(InequalityReport::new(&format!("composition_k{k}"), samples, trend));
    }
    Ok(reports)
}

fn identity_error(sc: &Scenario, pairs: usize, rng: &mut ChaCha8Rng) -> Result<f64, RunError> {
    let times: Vec<(f64, f64)> = (0..pairs)
        .map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
        .collect();
    let mut worst: f64 = 0.0;
    let mut mats = Vec::new();
    if let OperatorSpec::Matrix(m) = &sc.operator {
        mats.push(m.clone());
    }
    let len = sc.grid.len();
    for flat in [0, 1, len / 3, len / 2 - 1] {
        let xi = sc.grid.xi(flat);
        mats.push(sc.operator.frozen(&sc.form, &xi[..sc.grid.n_dims()]).to_matrix());
    }
    for m in &mats {
        worst = worst.max(cosine_identity_check(m, &times).map_err(err)?);
    }
    Ok(worst)
}

fn estimates(cfg: &ScenarioConfig, sc: &Scenario) -> Result<EstimatePair, RunError> {
    let horizon = cfg.solver.horizon;
    let dt = sc.linear_dt(cfg)?;
    let run = |grid: SpectralGrid| -> Result<EstimateReport, RunError> {
        let comps = sc.operator.components();
        let phi = build_data(&cfg.phi, grid, comps)?;
        let psi = build_data(&cfg.psi, grid, comps)?;
        let tr = solve_linear(&sc.operator, &sc.form, &phi, &psi, None, horizon, dt, sc.spec).map_err(err)?;
        verify_linear_estimates(&tr, &phi, &psi, None).map_err(err)
    };
    let coarse = run(sc.grid)?;
    let refined = run(sc.grid.refined(2).map_err(err)?)?;
    let close = |a: f64, b: f64| a.is_finite() && b.is_finite() && (a - b).abs() <= ESTIMATE_TOL * a.abs().max(b.abs());
    let stable = close(coarse.ratio_216, refined.ratio_216) && close(coarse.ratio_217, refined.ratio_217);
    Ok(EstimatePair {
        coarse,
        refined,
        stable,
    })
}

fn contraction(
    cfg: &ScenarioConfig,
    sc: &Scenario,
    pairs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<ContractionSummary>, RunError> {
    if sc.f.is_zero() || pairs == 0 {
        return Ok(None);
    }
    let (p, q) = (cfg.exponents.p, cfg.exponents.q_inner);
    let m = amplitude_m(&sc.phi, &sc.psi, p, q).map_err(err)?;
    let fb = sc.f.fbar(m + 1.0, q).value;
    let t = window_length(m, fb, cfg.solver.c0, cfg.solver.c1).min(cfg.solver.horizon);
    let steps = cfg.solver.steps_per_window.max(2);
    let set = PropagatorSet::build(&sc.operator, &sc.form, &sc.grid, t / steps as f64, steps).map_err(err)?;
    let problem = WindowProblem::new(&set, &sc.f, &sc.phi, &sc.psi, p, q).map_err(err)?;
    let mut ratios = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let a = problem.random_candidate(m + 1.0, rng).map_err(err)?;
        let b = problem.random_candidate(m + 1.0, rng).map_err(err)?;
        ratios.push(problem.contraction_probe(&a, &b).map_err(err)?);
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(Some(ContractionSummary {
        window_length: t,
        pairs,
        ratios,
        max_ratio,
    }))
}

/// Runs every check for the configuration with a seeded generator.
pub fn run_suite(cfg: &ScenarioConfig, seed: u64) -> Result<SuiteReport, RunError> {
    let sc = Scenario::build(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nir, spread) = nirenberg(cfg, sc.grid)?;
    let comp = composition(cfg, &sc)?;
    let ident = identity_error(&sc, cfg.check.identity_pairs, &mut rng)?;
    let est = estimates(cfg, &sc)?;
    let h = cfg.solver.horizon;
    let decay = symbol_decay_check(
        &sc.operator,
        &sc.form,
        &sc.grid,
        cfg.exponents.s_norm,
        cfg.exponents.p,
        &[0.0, 0.5 * h, h],
    )
    .map_err(err)?;
    let resolvent = resolvent_bound_check(
        &sc.operator,
        cfg.check.resolvent_c0,
        cfg.check.resolvent_omega,
        cfg.check.resolvent_samples,
    );
    let contr = contraction(cfg, &sc, cfg.check.probe_pairs, &mut rng)?;
    let pass = nir.pass
        && spread < DILATION_TOL
        && comp.iter().all(|r| r.pass)
        && ident < IDENTITY_TOL
        && est.stable
        && contr.as_ref().is_none_or(|c| c.max_ratio < 1.0);
    Ok(SuiteReport {
        seed,
        nirenberg: nir,
        nirenberg_dilation_spread: spread,
        composition: comp,
        cosine_identity_error: ident,
        estimates: est,
        decay,
        resolvent,
        contraction: contr,
        pass,
    })
}

/// Multi-line human-readable digest of a suite report.
pub fn summary(r: &SuiteReport) -> String {
    let mark = |ok: bool| if ok { "ok  " } else { "FAIL" };
    let mut lines = vec![format!(
        "{} nirenberg: worst ratio {:.6}, dilation spread {:.3}%",
        mark(r.nirenberg.pass && r.nirenberg_dilation_spread < DILATION_TOL),
        r.nirenberg.worst_ratio,
        100.0 * r.nirenberg_dilation_spread
    )];
    for c in &r.composition {
        lines.push(format!("{} {}: empirical constant {:.6}", mark(c.pass), c.name, c.empirical_constant));
    }
    lines.push(format!(
        "{} cosine identity: max defect {:.3e}",
        mark(r.cosine_identity_error < IDENTITY_TOL),
        r.cosine_identity_error
    ));
    lines.push(format!(
        "{} estimates: ratios ({:.6}, {:.6}) -> ({:.6}, {:.6}) under grid doubling",
        mark(r.estimates.stable),
        r.estimates.coarse.ratio_216,
        r.estimates.coarse.ratio_217,
        r.estimates.refined.ratio_216,
        r.estimates.refined.ratio_217
    ));
    lines.push(format!(
        "info decay: sup {:.6}, flagged {}",
        r.decay.sup, r.decay.flagged
    ));
    if let Some(res) = &r.resolvent {
        lines.push(format!("info resolvent: max violation {:.3e}", res.max_violation));
    }
    if let Some(c) = &r.contraction {
        lines.push(format!(
            "{} contraction: max ratio {:.4} over {} pairs (T = {:.4e})",
            mark(c.max_ratio < 1.0),
            c.max_ratio,
            c.pairs,
            c.window_length
        ));
    }
    lines.join("\n")
}

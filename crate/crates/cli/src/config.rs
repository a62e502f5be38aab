//! Scenario configuration: a TOML document read as flat dotted keys.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use boussinesq::nonlinear::{PicardSeed, Threshold};
use boussinesq::spectral::{check_ellipticity, SpectralGrid};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub n_dims: usize,
    pub points: Vec<usize>,
    pub half_width: Vec<f64>,
}

impl GridConfig {
    pub fn build(&self) -> SpectralGrid {
        SpectralGrid::new(self.n_dims, &self.points, &self.half_width).expect("validated grid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum OperatorConfig {
    NegLaplacian,
    Constant(f64),
    Matrix(Vec<Vec<f64>>),
    Weighted { g: Vec<f64>, s_weight: f64 },
}

impl OperatorConfig {
    pub fn components(&self) -> usize {
        match self {
            OperatorConfig::NegLaplacian | OperatorConfig::Constant(_) => 1,
            OperatorConfig::Matrix(m) => m.len(),
            OperatorConfig::Weighted { g, .. } => g.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum NonlinearityConfig {
    Zero,
    /// `sign * u^2`.
    Quadratic { sign: f64 },
    /// `sign * u^3`.
    Cubic { sign: f64 },
    /// `a u^2 + b u^3`.
    QuadraticCubic { a: f64, b: f64 },
    /// `f_m = sum_ij c[m][i][j] u_i u_j`.
    CoupledPoly { coupling: Vec<Vec<Vec<f64>>> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DataConfig {
    Zero,
    /// `amplitude[c] * exp(-|x - center|^2 / width^2)`.
    Gaussian {
        amplitude: Vec<f64>,
        width: f64,
        center: Vec<f64>,
    },
    /// `amplitude[c] * cos(xi_k . x)` at lattice wavenumbers `k`.
    Mode { k: Vec<i64>, amplitude: Vec<f64> },
    /// A physical-side snapshot file.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exponents {
    pub p: f64,
    pub q_inner: f64,
    pub s_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub horizon: f64,
    /// Time step; when absent each window uses `steps_per_window` steps.
    pub dt: Option<f64>,
    pub steps_per_window: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub blowup_threshold: Threshold,
    pub c0: f64,
    pub c1: f64,
    pub max_window: Option<f64>,
    pub max_windows: usize,
    pub max_halvings: usize,
    pub seed_iterate: PicardSeed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub snapshot_dir: Option<PathBuf>,
    /// Every `snapshot_stride`-th stored time is written; 0 disables snapshots.
    pub snapshot_stride: usize,
    pub convergence: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckConfig {
    pub probe_pairs: usize,
    pub identity_pairs: usize,
    pub resolvent_c0: f64,
    pub resolvent_omega: f64,
    pub resolvent_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub preset: Option<String>,
    pub grid: GridConfig,
    pub elliptic: Vec<Vec<f64>>,
    pub operator: OperatorConfig,
    pub nonlinearity: NonlinearityConfig,
    pub phi: DataConfig,
    pub psi: DataConfig,
    pub exponents: Exponents,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub check: CheckConfig,
    /// Non-fatal findings, e.g. `s_norm <= n / p`.
    pub warnings: Vec<String>,
}

impl ScenarioConfig {
    pub fn components(&self) -> usize {
        self.operator.components()
    }
}

/// Flat view of a TOML document: dotted key -> value.
struct Flat {
    values: BTreeMap<String, toml::Value>,
    used: BTreeSet<String>,
    base: PathBuf,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl Flat {
    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn raw(&mut self, key: &str) -> Option<&toml::Value> {
        let v = self.values.get(key)?;
        self.used.insert(key.to_string());
        Some(v)
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => as_f64(v).ok_or_else(|| invalid(key, "expected a number")),
        }
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => as_f64(v).map(Some).ok_or_else(|| invalid(key, "expected a number")),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(_) => Err(invalid(key, "expected a non-negative integer")),
        }
    }

    fn string(&mut self, key: &str, default: &str) -> Result<String, ConfigError> {
        match self.raw(key) {
            None => Ok(default.to_string()),
            Some(toml::Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(invalid(key, "expected a string")),
        }
    }

    fn path(&mut self, key: &str) -> Result<Option<PathBuf>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => {
                let p = PathBuf::from(s);
                Ok(Some(if p.is_absolute() { p } else { self.base.join(p) }))
            }
            Some(_) => Err(invalid(key, "expected a path string")),
        }
    }

    /// Number or array of numbers.
    fn vec_f64(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| as_f64(v).ok_or_else(|| invalid(key, "expected numbers")))
                .collect(),
            Some(v) => as_f64(v)
                .map(|x| vec![x])
                .ok_or_else(|| invalid(key, "expected a number or an array of numbers")),
        }
    }

    fn vec_i64(&mut self, key: &str, default: &[i64]) -> Result<Vec<i64>, ConfigError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| v.as_integer().ok_or_else(|| invalid(key, "expected integers")))
                .collect(),
            Some(toml::Value::Integer(i)) => Ok(vec![*i]),
            Some(_) => Err(invalid(key, "expected an integer or an array of integers")),
        }
    }

    fn matrix(&mut self, key: &str) -> Result<Option<Vec<Vec<f64>>>, ConfigError> {
        let Some(v) = self.raw(key).cloned() else {
            return Ok(None);
        };
        let rows = v.as_array().ok_or_else(|| invalid(key, "expected an array of rows"))?;
        rows.iter()
            .map(|r| {
                r.as_array()
                    .ok_or_else(|| invalid(key, "expected an array of rows"))?
                    .iter()
                    .map(|x| as_f64(x).ok_or_else(|| invalid(key, "expected numbers")))
                    .collect()
            })
            .collect::<Result<_, _>>()
            .map(Some)
    }

    fn tensor3(&mut self, key: &str) -> Result<Option<Vec<Vec<Vec<f64>>>>, ConfigError> {
        let Some(v) = self.raw(key).cloned() else {
            return Ok(None);
        };
        let outer = v.as_array().ok_or_else(|| invalid(key, "expected N x N x N nested arrays"))?;
        let mut out = Vec::new();
        for (i, slab) in outer.iter().enumerate() {
            let sub = format!("{key}[{i}]");
            let mut flat = Flat {
                values: BTreeMap::from([(sub.clone(), slab.clone())]),
                used: BTreeSet::new(),
                base: self.base.clone(),
            };
            out.push(flat.matrix(&sub)?.expect("present"));
        }
        Ok(Some(out))
    }
}

struct Preset {
    points: usize,
    half_width: f64,
    operator: OperatorConfig,
    nonlinearity: &'static str,
    amplitude: Vec<f64>,
    horizon: f64,
}

fn preset(name: &str) -> Result<Preset, ConfigError> {
    match name {
        "imbq_scalar" => Ok(Preset {
            points: 128,
            half_width: 16.0,
            operator: OperatorConfig::NegLaplacian,
            nonlinearity: "quadratic",
            amplitude: vec![0.05],
            horizon: 1.0,
        }),
        "system" => Ok(Preset {
            points: 128,
            half_width: 16.0,
            operator: OperatorConfig::Weighted {
                g: vec![1.0, 1.0],
                s_weight: 1.0,
            },
            nonlinearity: "coupled_poly",
            amplitude: vec![0.02, 0.01],
            horizon: 0.5,
        }),
        other => Err(invalid(
            "preset",
            format!("unknown preset `{other}` (expected imbq_scalar or system)"),
        )),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Reads and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, &base)
}

/// Parses a scenario document; relative paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<ScenarioConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    let mut values = BTreeMap::new();
    flatten("", &table, &mut values);
    let mut flat = Flat {
        values,
        used: BTreeSet::new(),
        base: base.to_path_buf(),
    };
    let cfg = build(&mut flat)?;
    if let Some(key) = flat.values.keys().find(|k| !flat.used.contains(*k)) {
        return Err(ConfigError::UnknownKey(key.clone()));
    }
    Ok(cfg)
}

fn sign_of(flat: &mut Flat) -> Result<f64, ConfigError> {
    let s = flat.f64("nonlinearity.sign", 1.0)?;
    if s == 0.0 || !s.is_finite() {
        return Err(invalid("nonlinearity.sign", "must be a nonzero number"));
    }
    Ok(s)
}

fn build(flat: &mut Flat) -> Result<ScenarioConfig, ConfigError> {
    let preset_name = match flat.raw("preset") {
        None => None,
        Some(toml::Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(invalid("preset", "expected a string")),
    };
    let pre = preset_name.as_deref().map(preset).transpose()?;

    // grid
    let n_dims = flat.usize("grid.n_dims", 1)?;
    if !(1..=3).contains(&n_dims) {
        return Err(invalid("grid.n_dims", "must be 1, 2 or 3"));
    }
    let points: Vec<usize> = {
        let d = pre.as_ref().map_or(128, |p| p.points);
        let raw = flat.vec_f64("grid.points", &[d as f64])?;
        raw.iter()
            .map(|&v| {
                if v.fract() != 0.0 || v < 0.0 {
                    Err(invalid("grid.points", "expected integers"))
                } else {
                    Ok(v as usize)
                }
            })
            .collect::<Result<_, _>>()?
    };
    for &p in &points {
        if p < 4 || !p.is_power_of_two() {
            return Err(invalid(
                "grid.points",
                format!("{p} is not a power of two >= 4 (power-of-two rule)"),
            ));
        }
    }
    let half_width = flat.vec_f64("grid.half_width", &[pre.as_ref().map_or(16.0, |p| p.half_width)])?;
    if half_width.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(invalid("grid.half_width", "must be positive and finite"));
    }
    for (key, len) in [("grid.points", points.len()), ("grid.half_width", half_width.len())] {
        if len != 1 && len != n_dims {
            return Err(invalid(key, format!("expected 1 or {n_dims} values, got {len}")));
        }
    }
    let grid = GridConfig {
        n_dims,
        points,
        half_width,
    };

    // elliptic form
    let elliptic = flat.matrix("elliptic.a")?.unwrap_or_else(|| {
        (0..n_dims)
            .map(|i| (0..n_dims).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    });
    if elliptic.len() != n_dims || elliptic.iter().any(|r| r.len() != n_dims) {
        return Err(invalid("elliptic.a", format!("must be {n_dims} x {n_dims}")));
    }
    check_ellipticity(&elliptic).map_err(|e| invalid("elliptic.a", e.to_string()))?;

    // operator
    let default_kind = match pre.as_ref().map(|p| &p.operator) {
        Some(OperatorConfig::Weighted { .. }) => "weighted",
        _ => "neg_laplacian",
    };
    let kind = flat.string("operator.kind", default_kind)?;
    let operator = match kind.as_str() {
        "neg_laplacian" => OperatorConfig::NegLaplacian,
        "constant" => OperatorConfig::Constant(flat.f64("operator.constant", 1.0)?),
        "matrix" => {
            let m = flat
                .matrix("operator.matrix")?
                .ok_or_else(|| invalid("operator.matrix", "required for operator.kind = matrix"))?;
            let n = m.len();
            if n == 0 || m.iter().any(|r| r.len() != n) {
                return Err(invalid("operator.matrix", "must be a non-empty square matrix"));
            }
            if flat.has("operator.n") && flat.usize("operator.n", n)? != n {
                return Err(invalid("operator.n", "does not match operator.matrix"));
            }
            OperatorConfig::Matrix(m)
        }
        "weighted" => {
            let (dg, ds) = match pre.as_ref().map(|p| &p.operator) {
                Some(OperatorConfig::Weighted { g, s_weight }) => (g.clone(), *s_weight),
                _ => (vec![1.0, 1.0], 1.0),
            };
            let g = flat.vec_f64("operator.g", &dg)?;
            let n = flat.usize("operator.n", g.len())?;
            if g.len() != n {
                return Err(invalid(
                    "operator.g",
                    format!("has {} entries but operator.n = {n}", g.len()),
                ));
            }
            if g.iter().any(|v| !(*v > 0.0)) {
                return Err(invalid("operator.g", "weights must be positive"));
            }
            let s_weight = flat.f64("operator.s_weight", ds)?;
            OperatorConfig::Weighted { g, s_weight }
        }
        other => {
            return Err(invalid(
                "operator.kind",
                format!("unknown operator `{other}` (neg_laplacian, constant, matrix, weighted)"),
            ))
        }
    };
    let comps = operator.components();

    // nonlinearity
    let name = flat.string("nonlinearity.name", pre.as_ref().map_or("zero", |p| p.nonlinearity))?;
    let nonlinearity = match name.as_str() {
        "zero" => NonlinearityConfig::Zero,
        "quadratic" => NonlinearityConfig::Quadratic { sign: sign_of(flat)? },
        "cubic" => NonlinearityConfig::Cubic { sign: sign_of(flat)? },
        "quadratic_cubic" => NonlinearityConfig::QuadraticCubic {
            a: flat.f64("nonlinearity.a", 1.0)?,
            b: flat.f64("nonlinearity.b", 1.0)?,
        },
        "coupled_poly" => {
            let coupling = match flat.tensor3("nonlinearity.coupling")? {
                Some(c) => c,
                None if comps == 2 => vec![
                    vec![vec![0.0, 0.5], vec![0.5, 0.0]],
                    vec![vec![1.0, 0.0], vec![0.0, -1.0]],
                ],
                None => {
                    return Err(invalid(
                        "nonlinearity.coupling",
                        "required for coupled_poly unless the system has two components",
                    ))
                }
            };
            if coupling.len() != comps
                || coupling.iter().any(|m| m.len() != comps || m.iter().any(|r| r.len() != comps))
            {
                return Err(invalid(
                    "nonlinearity.coupling",
                    format!("must be {comps} x {comps} x {comps}"),
                ));
            }
            NonlinearityConfig::CoupledPoly { coupling }
        }
        other => {
            return Err(invalid(
                "nonlinearity.name",
                format!("unknown nonlinearity `{other}` (zero, quadratic, cubic, quadratic_cubic, coupled_poly)"),
            ))
        }
    };
    if comps > 1
        && !matches!(nonlinearity, NonlinearityConfig::Zero | NonlinearityConfig::CoupledPoly { .. })
    {
        return Err(invalid(
            "nonlinearity.name",
            format!("`{name}` is scalar but the operator has {comps} components"),
        ));
    }

    // initial data
    let default_amp = pre.as_ref().map(|p| p.amplitude.clone());
    let phi = data(flat, "phi", n_dims, comps, default_amp.as_deref())?;
    let psi = data(flat, "psi", n_dims, comps, None)?;

    // exponents
    let exponents = Exponents {
        p: flat.f64("exponents.p", 2.0)?,
        q_inner: flat.f64("exponents.q_inner", 2.0)?,
        s_norm: flat.f64("exponents.s_norm", 2.0)?,
    };
    if !(exponents.p > 1.0) {
        return Err(invalid("exponents.p", "must be > 1"));
    }
    if !(exponents.q_inner >= 1.0) {
        return Err(invalid("exponents.q_inner", "must be >= 1"));
    }
    let mut warnings = Vec::new();
    if !(exponents.s_norm > n_dims as f64 / exponents.p) {
        warnings.push(format!(
            "exponents.s_norm = {} does not exceed n/p = {}",
            exponents.s_norm,
            n_dims as f64 / exponents.p
        ));
    }

    // solver
    let horizon = flat.f64("solver.horizon", pre.as_ref().map_or(1.0, |p| p.horizon))?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid("solver.horizon", "must be finite and > 0"));
    }
    let dt = flat.opt_f64("solver.dt")?;
    if let Some(dt) = dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("solver.dt", "must be finite and > 0"));
        }
    }
    let threshold = match (
        flat.opt_f64("solver.blowup_threshold")?,
        flat.opt_f64("solver.blowup_threshold_abs")?,
    ) {
        (Some(_), Some(_)) => {
            return Err(invalid(
                "solver.blowup_threshold_abs",
                "set either blowup_threshold (factor) or blowup_threshold_abs",
            ))
        }
        (Some(f), None) => Threshold::Factor(f),
        (None, Some(a)) => Threshold::Absolute(a),
        (None, None) => Threshold::default(),
    };
    let (Threshold::Factor(v) | Threshold::Absolute(v)) = threshold;
    if !(v > 0.0) {
        return Err(invalid("solver.blowup_threshold", "must be > 0"));
    }
    let seed_iterate = match flat.string("solver.seed_iterate", "linear")?.as_str() {
        "linear" => PicardSeed::Linear,
        "zero" => PicardSeed::Zero,
        _ => return Err(invalid("solver.seed_iterate", "expected linear or zero")),
    };
    let solver = SolverConfig {
        horizon,
        dt,
        steps_per_window: flat.usize("solver.steps_per_window", 64)?,
        tol: flat.f64("solver.tol", 1e-10)?,
        max_iters: flat.usize("solver.max_iters", 50)?,
        blowup_threshold: threshold,
        c0: flat.f64("solver.c0", 1.0)?,
        c1: flat.f64("solver.c1", 1.0)?,
        max_window: flat.opt_f64("solver.max_window")?,
        max_windows: flat.usize("solver.max_windows", 100_000)?,
        max_halvings: flat.usize("solver.max_halvings", 8)?,
        seed_iterate,
    };
    if solver.steps_per_window == 0 {
        return Err(invalid("solver.steps_per_window", "must be >= 1"));
    }
    if !(solver.tol > 0.0) {
        return Err(invalid("solver.tol", "must be > 0"));
    }
    if solver.max_iters == 0 {
        return Err(invalid("solver.max_iters", "must be >= 1"));
    }
    if solver.max_windows == 0 {
        return Err(invalid("solver.max_windows", "must be >= 1"));
    }
    for (key, v) in [("solver.c0", solver.c0), ("solver.c1", solver.c1)] {
        if !(v >= 1.0) {
            return Err(invalid(key, "must be >= 1"));
        }
    }
    if let Some(w) = solver.max_window {
        if !(w > 0.0) {
            return Err(invalid("solver.max_window", "must be > 0"));
        }
    }

    // outputs
    let output = OutputConfig {
        csv: flat.path("output.csv")?,
        report: flat.path("output.report")?,
        snapshot_dir: flat.path("output.snapshot_dir")?,
        snapshot_stride: flat.usize("output.snapshot_stride", 0)?,
        convergence: flat.path("output.convergence")?,
    };
    for (key, p) in [
        ("output.csv", &output.csv),
        ("output.report", &output.report),
        ("output.convergence", &output.convergence),
    ] {
        if let Some(p) = p {
            check_writable_parent(key, p)?;
        }
    }
    if output.snapshot_stride > 0 && output.snapshot_dir.is_none() {
        return Err(invalid("output.snapshot_dir", "required when output.snapshot_stride > 0"));
    }
    if let Some(dir) = &output.snapshot_dir {
        if dir.exists() && !dir.is_dir() {
            return Err(invalid("output.snapshot_dir", "exists and is not a directory"));
        }
        if let Some(parent) = dir.parent() {
            if !parent.as_os_str().is_empty() && !parent.is_dir() {
                return Err(invalid("output.snapshot_dir", "parent directory does not exist"));
            }
        }
    }

    let check = CheckConfig {
        probe_pairs: flat.usize("check.probe_pairs", 10)?,
        identity_pairs: flat.usize("check.identity_pairs", 100)?,
        resolvent_c0: flat.f64("check.resolvent_c0", 1.0)?,
        resolvent_omega: flat.f64("check.resolvent_omega", 0.0)?,
        resolvent_samples: flat.usize("check.resolvent_samples", 25)?,
    };

    Ok(ScenarioConfig {
        preset: preset_name,
        grid,
        elliptic,
        operator,
        nonlinearity,
        phi,
        psi,
        exponents,
        solver,
        output,
        check,
        warnings,
    })
}

fn check_writable_parent(key: &str, p: &Path) -> Result<(), ConfigError> {
    if p.is_dir() {
        return Err(invalid(key, "is a directory"));
    }
    match p.parent() {
        Some(parent) if !parent.as_os_str().is_empty() && !parent.is_dir() => {
            Err(invalid(key, format!("directory {} does not exist", parent.display())))
        }
        _ => Ok(()),
    }
}

fn data(
    flat: &mut Flat,
    name: &str,
    n_dims: usize,
    comps: usize,
    default_amp: Option<&[f64]>,
) -> Result<DataConfig, ConfigError> {
    let kind_key = format!("{name}.kind");
    let default_kind = if default_amp.is_some() { "gaussian" } else { "zero" };
    let kind = flat.string(&kind_key, default_kind)?;
    let amp_key = format!("{name}.amplitude");
    let check_amp = |a: Vec<f64>| -> Result<Vec<f64>, ConfigError> {
        if a.len() != 1 && a.len() != comps {
            return Err(invalid(&amp_key, format!("expected 1 or {comps} values")));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(invalid(&amp_key, "must be finite"));
        }
        Ok(if a.len() == 1 { vec![a[0]; comps] } else { a })
    };
    match kind.as_str() {
        "zero" => Ok(DataConfig::Zero),
        "gaussian" => {
            let amp = flat.vec_f64(&amp_key, default_amp.unwrap_or(&[1.0]))?;
            let width_key = format!("{name}.width");
            let width = flat.f64(&width_key, 1.0)?;
            if !(width > 0.0) {
                return Err(invalid(&width_key, "must be > 0"));
            }
            let center_key = format!("{name}.center");
            let center = flat.vec_f64(&center_key, &[0.0])?;
            if center.len() != 1 && center.len() != n_dims {
                return Err(invalid(&center_key, format!("expected 1 or {n_dims} values")));
            }
            let center = if center.len() == 1 { vec![center[0]; n_dims] } else { center };
            Ok(DataConfig::Gaussian {
                amplitude: check_amp(amp)?,
                width,
                center,
            })
        }
        "mode" => {
            let k_key = format!("{name}.k");
            let k = flat.vec_i64(&k_key, &[1])?;
            if k.len() != n_dims {
                return Err(invalid(&k_key, format!("expected {n_dims} wavenumbers")));
            }
            let amp = flat.vec_f64(&amp_key, &[1.0])?;
            Ok(DataConfig::Mode {
                k,
                amplitude: check_amp(amp)?,
            })
        }
        "file" => {
            let path_key = format!("{name}.path");
            let p = flat
                .path(&path_key)?
                .ok_or_else(|| invalid(&path_key, "required for kind = file"))?;
            if !p.is_file() {
                return Err(invalid(&path_key, format!("{} does not exist", p.display())));
            }
            Ok(DataConfig::File(p))
        }
        other => Err(invalid(
            &kind_key,
            format!("unknown data kind `{other}` (zero, gaussian, mode, file)"),
        )),
    }
}
